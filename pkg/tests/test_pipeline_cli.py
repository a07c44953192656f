import json

import pytest

from hardy_sobolev import potentials as P
from hardy_sobolev.cli import EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_OK, main
from hardy_sobolev.pipeline import HardyReport, PipelineConfig, emit, load_report, run_pipeline


@pytest.fixture(scope="module")
def bump_report():
    cfg = PipelineConfig(box_lo=-1.0, box_hi=1.0, lattice=2)
    return run_pipeline(P.bump(0.5), 2.0, grids=(8, 12), config=cfg)


def test_report_contents(bump_report):
    r = bump_report
    lower, B = r.interval
    assert lower <= B + 1e-6
    assert r.C_H == 4.0
    assert r.compactness["verdict"] == "COMPACT"
    assert [t["intervals"] for t in r.trend] == [8, 12]
    assert r.provenance["grids"] == [8, 12]
    assert {c["quantity"] for c in r.provenance["calls"]} >= {"lower", "B_g", "concentration"}
    assert "total" in r.timing


def test_emit_round_trip_and_csv(bump_report, tmp_path):
    paths = emit(bump_report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["capacity_checks.csv", "ladder.csv", "report.json", "timing.json", "trend.csv"]
    assert load_report(tmp_path) == bump_report
    conc = bump_report.concentration
    rows = (tmp_path / "ladder.csv").read_text().strip().splitlines()
    assert len(rows) - 1 == len(conc["centers"]) * len(conc["radii"])
    assert "wall" not in (tmp_path / "report.json").read_text()


def test_config_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"nope": 1})
    cfg = PipelineConfig.from_dict({"nested": [1.0, 2.0], "solver": {"max_iters": 5}})
    assert cfg.nested == (1.0, 2.0) and cfg.solver.max_iters == 5


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["capacity", "--grid", "8", "--radius", "0.5", "--out-dir", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "capacity.json").read_text())
    assert out["analytic_RN"] == pytest.approx(6.283185307179586)
    assert main(["rayleigh", "--potential", "nope"]) == EXIT_INVALID
    assert main(["rayleigh", "--potential", "cylindrical", "--param", "k=3", "--param", "exponent=2"]) == EXIT_INVALID
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"solver": {"max_iters": 1}, "box": [0, 1]}))
    assert main(["rayleigh", "--potential", "constant", "--grid", "6", "--config", str(conf)]) == EXIT_NONCONVERGENCE
    assert main(["capacity", "--box", "1", "0"]) == EXIT_INVALID


def test_cli_lorentz_and_rearrange(tmp_path, capsys):
    assert main(["lorentz", "--P", "1.5", "--potential", "indicator", "--param", "r_out=1", "--radial",
                 "--grid", "8"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["I_norm"] == pytest.approx(0.5)
    assert main(["rearrange", "--potential", "bump", "--grid", "8", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "fstar.csv").read_text().startswith("t_start,level")


def test_cli_pipeline(tmp_path):
    args = ["pipeline", "--potential", "bump", "--param", "radius=0.5", "--grid", "8", "--box", "-1", "1",
            "--lattice", "1", "--out-dir", str(tmp_path), "--format", "json"]
    assert main(args) == EXIT_OK
    rep = HardyReport.from_json((tmp_path / "report.json").read_text())
    assert rep.compactness["verdict"] == "COMPACT"
