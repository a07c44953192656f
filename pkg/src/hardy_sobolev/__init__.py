"""Numerical tools for Hardy-Sobolev inequalities on grid domains."""

__version__ = "0.1.0"
