import json

import numpy as np
import pytest

from multilane import cli, solver
from multilane import scenario_io as sio

from conftest import two_to_three

COARSE = ["--dx", "0.05"]


def test_run_writes_snapshots_and_passes(tmp_path, capsys):
    code = cli.main(["run", "--scenario", "s31", "--tend", "1", "--out", str(tmp_path)] + COARSE)
    assert code == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert [s["t"] for s in man["snapshots"]] == [0.0, 1.0]
    assert "conservation" in capsys.readouterr().out


def test_run_cut_variant_default_horizon(tmp_path):
    assert cli.main(["run", "--scenario", "s33", "--out", str(tmp_path)] + COARSE) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["snapshots"][-1]["t"] == 0.5


def test_run_snapshot_count_and_entropy(tmp_path, capsys):
    args = ["run", "--scenario", "s32", "--snapshots", "3", "--with-entropy", "--out", str(tmp_path)]
    assert cli.main(args + COARSE) == 0
    assert sorted(p.name for p in tmp_path.glob("snapshot_*.csv")) == [
        "snapshot_0.csv", "snapshot_1.csv", "snapshot_2.csv"]
    assert "entropy" in capsys.readouterr().out


def test_run_rejects_cfl_above_one(tmp_path, capsys):
    code = cli.main(["run", "--scenario", "s31", "--cfl", "1.5", "--out", str(tmp_path)])
    assert code == 1
    assert "lambda*V <= 1/2" in capsys.readouterr().err


def test_unknown_scenario_and_bad_flags(tmp_path):
    assert cli.main(["run", "--scenario", "nope", "--out", str(tmp_path)]) == 1
    assert cli.main(["run"]) == 1
    assert cli.main(["verify", "--scenario", "s31", "--checks", "magic"]) == 1
    assert cli.main(["verify", "--scenario", "s31", "--interval", "-0.5:0.5", "--checks", "bv"]) == 1


def test_verify_all_checks_pass(tmp_path):
    code = cli.main(["verify", "--scenario", "s31", "--checks", "all", "--tend", "0.5",
                     "--out", str(tmp_path)] + COARSE)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["checks"]) == set(cli.ALL_CHECKS)
    assert report["passed"]


def test_verify_bv_interval_with_negative_bounds(tmp_path):
    code = cli.main(["verify", "--scenario", "s31", "--checks", "bv", "--interval", "-1.5:-0.5",
                     "--s", "0.2", "--out", str(tmp_path)] + COARSE)
    assert code == 0
    bv = json.loads((tmp_path / "report.json").read_text())["checks"]["bv"]["intervals"][0]
    assert bv["measured"] <= bv["bound"]
    assert bv["name"] == "bv[-1.5,-0.5]"


def test_verify_fault_injection(tmp_path, monkeypatch, capsys):
    real_run = solver.run

    def tampered(scenario, **kw):
        res = real_run(scenario, **kw)
        res.records[2].rho_min = -0.01
        return res

    monkeypatch.setattr(cli.solver, "run", tampered)
    code = cli.main(["verify", "--scenario", "s31", "--checks", "bounds,conservation",
                     "--out", str(tmp_path)] + COARSE)
    assert code == 2
    report = json.loads((tmp_path / "report.json").read_text())
    assert not report["checks"]["bounds"]["passed"]
    assert report["checks"]["conservation"]["passed"]
    assert "bounds: FAIL" in capsys.readouterr().err


def test_convergence_levels(capsys):
    assert cli.main(["convergence", "--scenario", "s32", "--levels", "1"]) == 1
    assert cli.main(["convergence", "--scenario", "ramp_1lane", "--levels", "3", "--dx", "0.02"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert len(rows) == 3


def test_compare_verdicts(tmp_path, capsys):
    assert cli.main(["compare", "--scenario-a", "s31", "--scenario-b", "s31"] + COARSE) == 0
    out = capsys.readouterr().out
    assert "initial L1 distance: 0\n" in out and "final L1 distance:   0\n" in out
    assert cli.main(["compare", "--scenario-a", "s31", "--scenario-b", "s31_2to3_perturbed"] + COARSE) == 0
    assert cli.main(["compare", "--scenario-a", "s31", "--scenario-b", "s32"] + COARSE) == 1


def test_compare_reports_failure(tmp_path, monkeypatch):
    # shift run b so the final distance exceeds the initial one plus slack
    real_run = solver.run

    def shifted(scenario, **kw):
        res = real_run(scenario, **kw)
        if scenario.name.endswith("perturbed"):
            res.snapshots[-1] = (res.snapshots[-1][0], np.clip(res.final + 0.5, 0, 1))
        return res

    monkeypatch.setattr(cli.solver, "run", shifted)
    code = cli.main(["compare", "--scenario-a", "s31", "--scenario-b", "s31_2to3_perturbed"] + COARSE)
    assert code == 2


def test_scenario_file_path(tmp_path):
    path = tmp_path / "mine.json"
    sio.write_scenario(two_to_three(dx=0.1, T=0.1), path)
    assert cli.main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 0
