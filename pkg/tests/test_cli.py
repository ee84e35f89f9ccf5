"""Command-line harness: exit codes, artifacts, sweep aggregation, verify."""

import json

import pytest

from kldescent.cli import main
from kldescent.errors import InvalidInputError
from kldescent.cli import _apply_sweep_value, _parse_sweep_values, load_config


def write_config(tmp_path, name="exp.json", **overrides):
    cfg = {
        "problem": "lasso",
        "params": {"seed": 1},
        "algorithm": "pgenls",
        "solver": {"m": 5, "max_outer": 2000, "tol_resid": 1e-6},
        "output_dir": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path, cfg


def test_run_success_writes_artifacts(tmp_path, capsys):
    path, cfg = write_config(tmp_path)
    assert main(["run", str(path)]) == 0
    out = tmp_path / "out"
    assert (out / "trace.csv").exists()
    assert (out / "report.json").exists()
    summary = (out / "summary.txt").read_text()
    assert "overall: PASS" in summary
    assert "h1=pass" in summary
    report = json.loads((out / "report.json").read_text())
    assert report["algorithm"] == "pgenls"
    assert report["problem"] == "lasso"


def test_run_is_deterministic(tmp_path):
    p1, _ = write_config(tmp_path, name="a.json",
                         output_dir=str(tmp_path / "o1"))
    p2, _ = write_config(tmp_path, name="b.json",
                         output_dir=str(tmp_path / "o2"))
    assert main(["run", str(p1)]) == 0
    assert main(["run", str(p2)]) == 0
    assert (tmp_path / "o1" / "trace.csv").read_bytes() == \
        (tmp_path / "o2" / "trace.csv").read_bytes()
    assert (tmp_path / "o1" / "report.json").read_bytes() == \
        (tmp_path / "o2" / "report.json").read_bytes()


def test_default_output_dir_next_to_config(tmp_path):
    cfg = {"problem": "power4-1d", "algorithm": "pgenls",
           "solver": {"max_outer": 50}}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "exp_out" / "report.json").exists()


def test_dc_problem_through_dc_solver(tmp_path):
    path, _ = write_config(tmp_path, problem="l1-l2-dc",
                           params={"seed": 7}, algorithm="npg_major",
                           solver={"m": 5, "max_outer": 3000,
                                   "tol_resid": 1e-6})
    assert main(["run", str(path)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["algorithm"] == "npg_major"
    assert report["final_residual"] <= 1e-6


def test_exit_1_bad_tau(tmp_path, capsys):
    path, _ = write_config(tmp_path, diagnostics={"tau": 1.5})
    assert main(["run", str(path)]) == 1
    assert "diagnostics.tau" in capsys.readouterr().err


def test_exit_1_algorithm_problem_mismatch(tmp_path, capsys):
    path, _ = write_config(tmp_path, problem="l1-l2-dc", params={"seed": 0})
    assert main(["run", str(path)]) == 1
    err = capsys.readouterr().err
    assert "npg_major" in err and "concave" in err


def test_exit_1_unknown_fields(tmp_path, capsys):
    path, _ = write_config(tmp_path, solver={"momentum": 0.9})
    assert main(["run", str(path)]) == 1
    assert "momentum" in capsys.readouterr().err

    path2 = tmp_path / "bad_top.json"
    path2.write_text(json.dumps({"problem": "lasso", "algorithm": "pgenls",
                                 "extra": 1}))
    assert main(["run", str(path2)]) == 1
    assert "extra" in capsys.readouterr().err


def test_exit_1_bad_json_and_missing_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 1
    assert "invalid JSON" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.json")]) == 1


def test_exit_1_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["sweep", "x.json"]) == 1  # missing --param/--values


def test_exit_2_backtracking_exhaustion(tmp_path, capsys):
    path, _ = write_config(
        tmp_path, problem="quad-l1", params={"seed": 0},
        algorithm="npg_major",
        solver={"max_inner": 1, "gamma_min": 0.01, "gamma_max": 0.01,
                "gamma_init_rule": "constant"})
    assert main(["run", str(path)]) == 2
    assert "solver failure" in capsys.readouterr().err


def test_pgnls_forces_plain_mode(tmp_path):
    path, _ = write_config(tmp_path, algorithm="pgnls",
                           solver={"m": 5, "max_outer": 2000,
                                   "tol_resid": 1e-6})
    assert main(["run", str(path)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["algorithm"] == "pgnls"
    assert report["h1.degenerate_a"] is False

    path2, _ = write_config(tmp_path, name="bad.json", algorithm="pgnls",
                            solver={"delta": 0.5})
    assert main(["run", str(path2)]) == 1


def test_list_problems(capsys):
    assert main(["list-problems"]) == 0
    out = capsys.readouterr().out
    for pid in ("lasso", "quad-l1", "l0-ls", "l1-l2-dc", "power4-1d"):
        assert pid in out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# ---------------------------------------------------------------------------
# sweep


def test_sweep_aggregate(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KLDESCENT_THREADS", "1")
    path, _ = write_config(tmp_path, output_dir=str(tmp_path / "sweep"))
    with pytest.warns(UserWarning):
        status = main(["sweep", str(path), "--param", "delta",
                       "--values", "0,0.5"])
    assert status == 0
    agg = (tmp_path / "sweep" / "aggregate.csv").read_text().splitlines()
    assert agg[0] == "value,exit,iterations,final_f,verdict,rho,slope,degenerate_a"
    row0 = agg[1].split(",")
    row1 = agg[2].split(",")
    assert row0[0] == "0" and row0[1] == "0" and row0[-1] == "true"
    assert row1[0] == "0.5" and row1[1] == "0" and row1[-1] == "false"
    assert (tmp_path / "sweep" / "delta_0" / "report.json").exists()
    assert (tmp_path / "sweep" / "delta_0.5" / "report.json").exists()


def test_sweep_reports_worst_status(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KLDESCENT_THREADS", "1")
    path, _ = write_config(tmp_path, output_dir=str(tmp_path / "sweep"))
    # m = -1 is rejected by the solver config; the sweep keeps going
    status = main(["sweep", str(path), "--param", "m", "--values", "2,-1"])
    assert status == 1
    agg = (tmp_path / "sweep" / "aggregate.csv").read_text().splitlines()
    assert agg[1].split(",")[1] == "0"
    assert agg[2].split(",")[1] == "1"
    assert agg[2].split(",")[2] == ""  # no report fields for the failed run


def test_sweep_dotted_param_targets_problem_params(tmp_path, monkeypatch):
    monkeypatch.setenv("KLDESCENT_THREADS", "2")
    path, _ = write_config(tmp_path, output_dir=str(tmp_path / "sweep"))
    status = main(["sweep", str(path), "--param", "params.lam_factor",
                   "--values", "0.1,0.2"])
    assert status == 0
    sub = tmp_path / "sweep" / "params_lam_factor_0.2"
    assert (sub / "report.json").exists()


def test_sweep_value_validation(tmp_path, capsys):
    path, _ = write_config(tmp_path)
    assert main(["sweep", str(path), "--param", "delta",
                 "--values", "a,b"]) == 1
    assert main(["sweep", str(path), "--param", "delta",
                 "--values", "0.1,,0.2"]) == 1
    assert main(["sweep", str(path), "--param", "bogus.block.x",
                 "--values", "1"]) == 1
    assert main(["sweep", str(path), "--param", "delta",
                 "--values", "true"]) == 1


def test_sweep_thread_cap_validation(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KLDESCENT_THREADS", "zero")
    path, _ = write_config(tmp_path)
    assert main(["sweep", str(path), "--param", "delta",
                 "--values", "0.5"]) == 1
    assert "KLDESCENT_THREADS" in capsys.readouterr().err


def test_sweep_helpers_direct():
    assert _parse_sweep_values("1, 2.5, -3") == [1, 2.5, -3]
    with pytest.raises(InvalidInputError):
        _parse_sweep_values("")
    cfg = {"problem": "lasso", "algorithm": "pgenls"}
    out = _apply_sweep_value(cfg, "m", 3)
    assert out["solver"]["m"] == 3 and "solver" not in cfg
    out = _apply_sweep_value(cfg, "tau", 0.4)
    assert out["diagnostics"]["tau"] == 0.4
    out = _apply_sweep_value(cfg, "lam", 0.2)
    assert out["params"]["lam"] == 0.2
    out = _apply_sweep_value(cfg, "diagnostics.mu", 0.1)
    assert out["diagnostics"]["mu"] == 0.1


# ---------------------------------------------------------------------------
# verify


def run_and_verify_args(tmp_path):
    solver = {"m": 5, "max_outer": 2000, "tol_resid": 1e-6,
              "delta": 1.0, "beta_max": 0.9, "alpha": 0.5}
    path, cfg = write_config(tmp_path, solver=solver)
    assert main(["run", str(path)]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    args = ["verify", str(out / "trace.csv"),
            "--algorithm", "pgenls",
            "--m", "5", "--a", repr(report["constants.a"]),
            "--alpha", "0.5", "--delta", "1.0", "--beta-max", "0.9",
            "--lf", repr(report["constants.l_f"]),
            "--problem", "lasso", "--terminated", report["terminated"]]
    return out, args


def test_verify_reproduces_run_report(tmp_path):
    out, args = run_and_verify_args(tmp_path)
    target = tmp_path / "reverify.json"
    assert main(args + ["--report", str(target)]) == 0
    assert target.read_bytes() == (out / "report.json").read_bytes()


def test_verify_writes_stdout_by_default(tmp_path, capsys):
    out, args = run_and_verify_args(tmp_path)
    assert main(args) == 0
    parsed = json.loads(capsys.readouterr().out)
    assert parsed == json.loads((out / "report.json").read_text())


def test_verify_flags_corrupted_trace(tmp_path, capsys):
    out, args = run_and_verify_args(tmp_path)
    trace_path = out / "trace.csv"
    lines = trace_path.read_text().splitlines()
    mid = len(lines) // 2
    cells = lines[mid].split(",")
    cells[1] = "1000000.0"  # objective spike
    cells[2] = "1000000.0"  # audited merit spike
    lines[mid] = ",".join(cells)
    trace_path.write_text("\n".join(lines) + "\n")
    assert main(args) == 3
    err = capsys.readouterr().err
    assert "audit failure" in err
    assert "h1" in err or "series" in err


def test_verify_malformed_trace(tmp_path, capsys):
    out, args = run_and_verify_args(tmp_path)
    trace_path = out / "trace.csv"
    lines = trace_path.read_text().splitlines()
    lines[4] = lines[4] + ",extra"
    trace_path.write_text("\n".join(lines) + "\n")
    assert main(args) == 1
    assert "line 5" in capsys.readouterr().err


def test_verify_needs_constants(tmp_path, capsys):
    out, _ = run_and_verify_args(tmp_path)
    assert main(["verify", str(out / "trace.csv"),
                 "--algorithm", "pgenls"]) == 1
    assert "m and a" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# config loading unit checks


def test_load_config_validation(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(["not", "an", "object"]))
    with pytest.raises(InvalidInputError, match="object"):
        load_config(path)
    path.write_text(json.dumps({"problem": "lasso", "algorithm": "sgd"}))
    with pytest.raises(InvalidInputError, match="algorithm"):
        load_config(path)
    path.write_text(json.dumps({"algorithm": "pgenls"}))
    with pytest.raises(InvalidInputError, match="problem"):
        load_config(path)
    path.write_text(json.dumps({"problem": "lasso", "algorithm": "pgenls",
                                "solver": []}))
    with pytest.raises(InvalidInputError, match="solver"):
        load_config(path)
