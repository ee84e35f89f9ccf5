"""Command-line front end: run / sweep / verify / list-problems.

Exit codes: 0 success, 1 configuration error (bad JSON, bad field values,
algorithm/problem mismatch, malformed trace file), 2 solver failure
(backtracking exhaustion, oracle inconsistency), 3 audit failure (the run
finished but at least one framework check failed).
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Optional

from ._version import __version__
from .catalog import describe_problems, make_problem
from .diagnostics import DiagnosticsReport, build_report
from .errors import InsufficientTraceError, InvalidInputError, KlDescentError
from .npg import NpgConfig, npg_solve
from .pgenls import PgenlsConfig, pgenls_solve
from .trace import Trace, read_trace_csv, write_trace_csv

_ALGORITHMS = ("npg_major", "pgenls", "pgnls")
_TOP_KEYS = {"problem", "params", "algorithm", "solver", "diagnostics", "output_dir"}
_DIAG_KEYS = {"tau", "mu", "kbar"}
_AGGREGATE_COLUMNS = ("value", "exit", "iterations", "final_f", "verdict",
                      "rho", "slope", "degenerate_a")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which collides with the
    # solver-error code; funnel usage problems into exit 1 instead.
    def error(self, message):
        raise _UsageError(message)


def _err(msg: str) -> None:
    print(f"kldescent: error: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidInputError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(cfg) - _TOP_KEYS)
    if unknown:
        raise InvalidInputError(
            f"{path}: unknown config field(s): {', '.join(unknown)}"
        )
    if "problem" not in cfg or not isinstance(cfg["problem"], str):
        raise InvalidInputError(f"{path}: field 'problem' (string) is required")
    if cfg.get("algorithm") not in _ALGORITHMS:
        raise InvalidInputError(
            f"{path}: field 'algorithm' must be one of {', '.join(_ALGORITHMS)}, "
            f"got {cfg.get('algorithm')!r}"
        )
    for key, typ in (("params", dict), ("solver", dict), ("diagnostics", dict)):
        if key in cfg and not isinstance(cfg[key], typ):
            raise InvalidInputError(f"{path}: field {key!r} must be an object")
    if "output_dir" in cfg and not isinstance(cfg["output_dir"], str):
        raise InvalidInputError(f"{path}: field 'output_dir' must be a string")
    return cfg


def diag_overrides(cfg: dict) -> dict:
    diag = cfg.get("diagnostics", {})
    unknown = sorted(set(diag) - _DIAG_KEYS)
    if unknown:
        raise InvalidInputError(
            f"unknown diagnostics field(s): {', '.join(unknown)}"
        )
    out = {"tau": 0.5, "mu": None, "kbar": None}
    if "tau" in diag:
        tau = diag["tau"]
        if not isinstance(tau, (int, float)) or not 0.0 < float(tau) < 1.0:
            raise InvalidInputError(
                f"diagnostics.tau must lie in (0, 1), got {tau!r}"
            )
        out["tau"] = float(tau)
    if "mu" in diag:
        mu = diag["mu"]
        if not isinstance(mu, (int, float)) or not float(mu) >= 0.0:
            raise InvalidInputError(
                f"diagnostics.mu must be nonnegative, got {mu!r}"
            )
        out["mu"] = float(mu)
    if "kbar" in diag:
        kbar = diag["kbar"]
        if not isinstance(kbar, int) or isinstance(kbar, bool) or kbar < 1:
            raise InvalidInputError(
                f"diagnostics.kbar must be a positive integer, got {kbar!r}"
            )
        out["kbar"] = kbar
    return out


def _solver_config(cfg: dict):
    """Validate the solver block and build the algorithm's config object."""
    algorithm = cfg["algorithm"]
    solver = dict(cfg.get("solver", {}))
    cls = NpgConfig if algorithm == "npg_major" else PgenlsConfig
    known = {f.name for f in dataclass_fields(cls)}
    unknown = sorted(set(solver) - known)
    if unknown:
        raise InvalidInputError(
            f"unknown solver field(s) for {algorithm}: {', '.join(unknown)}"
        )
    if algorithm == "pgnls":
        # plain nonmonotone proximal gradient: no proximity term, no
        # extrapolation; forcing both here keeps configs honest.
        for name in ("delta", "beta_max"):
            if float(solver.get(name, 0.0)) != 0.0:
                raise InvalidInputError(
                    f"solver.{name} must be 0 for algorithm 'pgnls'"
                )
        solver["delta"] = 0.0
        solver["beta_max"] = 0.0
    return cls(**solver)


def _build(cfg: dict):
    """Config dict -> (problem instance, solver config, diagnostics overrides)."""
    params = dict(cfg.get("params", {}))
    instance = make_problem(cfg["problem"], params)
    solver_cfg = _solver_config(cfg)
    diag = diag_overrides(cfg)
    if cfg["algorithm"] != "npg_major" and instance.problem.h is not None:
        raise InvalidInputError(
            f"algorithm {cfg['algorithm']!r} cannot handle problem "
            f"{cfg['problem']!r}: the objective has a concave term; use npg_major"
        )
    return instance, solver_cfg, diag


def _solve(cfg: dict, instance, solver_cfg) -> Trace:
    seed = cfg.get("params", {}).get("seed")
    algorithm = cfg["algorithm"]
    if algorithm == "npg_major":
        return npg_solve(instance.problem, instance.x0, solver_cfg,
                         problem_id=instance.problem_id, seed=seed)
    return pgenls_solve(instance.problem, instance.x0, solver_cfg,
                        problem_id=instance.problem_id, seed=seed,
                        algorithm_label=algorithm)


def _summary_text(report: DiagnosticsReport) -> str:
    f = report.fields

    def fmt(key):
        v = f.get(key)
        return "-" if v is None else str(v)

    def gate(key):
        v = f.get(key + ".pass")
        return {True: "pass", False: "FAIL", None: "n/a"}[v]

    lines = [
        f"kldescent {f['version']}",
        f"problem: {fmt('problem')}",
        f"algorithm: {f['algorithm']}",
        f"iterations: {f['iterations']} (terminated: {fmt('terminated')})",
        f"final F: {fmt('final_f')}   final residual: {fmt('final_residual')}",
        "audits: " + "  ".join(
            f"{name}={gate(name)}"
            for name in ("h1", "acceptance", "ell", "h3", "h4",
                         "prop_bound", "series", "bbar_cap")),
        (f"rate: {f['rate.verdict']} (rho={fmt('rate.rho')}, "
         f"slope={fmt('rate.slope')}, theta={fmt('rate.theta')})"),
        (f"constants: a={fmt('constants.a')} b_hat={fmt('constants.b_hat')} "
         f"b_bar={fmt('constants.b_bar')} gamma_star={fmt('constants.gamma_star')} "
         f"c={fmt('prop_bound.c')} L_f={fmt('constants.l_f')}"),
    ]
    if f.get("h1.degenerate_a"):
        lines.append("note: proximity weight 0 with extrapolation on - "
                     "paired-state decrease constant is degenerate")
    failures = report.failures()
    lines.append("overall: " + ("PASS" if not failures
                                else "FAIL (" + ", ".join(failures) + ")"))
    return "\n".join(lines) + "\n"


def execute(cfg: dict, outdir: Path) -> tuple[int, dict]:
    """Run one experiment into ``outdir``; returns (exit status, report fields)."""
    try:
        instance, solver_cfg, diag = _build(cfg)
    except (InvalidInputError, TypeError) as exc:
        _err(str(exc))
        return 1, {}
    try:
        trace = _solve(cfg, instance, solver_cfg)
    except InvalidInputError as exc:
        _err(str(exc))
        return 1, {}
    except KlDescentError as exc:
        _err(f"solver failure: {exc}")
        return 2, {}
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        write_trace_csv(trace, outdir / "trace.csv")
        report = build_report(trace, problem=instance.problem, tau=diag["tau"],
                              mu=diag["mu"], kbar=diag["kbar"])
        (outdir / "report.json").write_text(report.to_json())
        (outdir / "summary.txt").write_text(_summary_text(report))
    except KlDescentError as exc:
        _err(f"diagnostics failure: {exc}")
        return 2, {}
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return 1, {}
    if not report.passed():
        _err("audit failure: " + ", ".join(report.failures())
             + f" (see {outdir / 'report.json'})")
        return 3, report.fields
    return 0, report.fields


def _default_outdir(config_path: str) -> Path:
    p = Path(config_path)
    return p.parent / (p.stem + "_out")


# ---------------------------------------------------------------------------
# verbs


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        diag_overrides(cfg)  # fail fast on bad diagnostics fields
    except InvalidInputError as exc:
        _err(str(exc))
        return 1
    outdir = Path(cfg.get("output_dir") or _default_outdir(args.config))
    status, _ = execute(cfg, outdir)
    return status


def _parse_sweep_values(raw: str) -> list:
    values = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            raise InvalidInputError(
                f"empty entry in --values {raw!r}; give a comma-separated list"
            )
        try:
            values.append(json.loads(tok))
        except json.JSONDecodeError:
            raise InvalidInputError(
                f"--values entry {tok!r} is not a number"
            ) from None
    if not values:
        raise InvalidInputError("--values must name at least one value")
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InvalidInputError(f"--values entry {v!r} is not a number")
    return values


def _apply_sweep_value(cfg: dict, param: str, value) -> dict:
    """Return a copy of ``cfg`` with the named field replaced.

    Dotted names address a block explicitly (``solver.m``, ``params.lam``,
    ``diagnostics.tau``); bare names try the solver block first, then the
    problem parameters.
    """
    out = copy.deepcopy(cfg)
    if "." in param:
        block, name = param.split(".", 1)
        if block not in ("solver", "params", "diagnostics") or not name:
            raise InvalidInputError(f"--param {param!r} does not name a config field")
        out.setdefault(block, {})[name] = value
        return out
    cls = NpgConfig if cfg["algorithm"] == "npg_major" else PgenlsConfig
    if param in {f.name for f in dataclass_fields(cls)}:
        out.setdefault("solver", {})[param] = value
    elif param in _DIAG_KEYS:
        out.setdefault("diagnostics", {})[param] = value
    else:
        out.setdefault("params", {})[param] = value
    return out


def _thread_cap() -> int:
    raw = os.environ.get("KLDESCENT_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidInputError(
            f"KLDESCENT_THREADS must be a positive integer, got {raw!r}"
        ) from None
    if cap < 1:
        raise InvalidInputError(
            f"KLDESCENT_THREADS must be a positive integer, got {raw!r}"
        )
    return cap


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        diag_overrides(cfg)
        values = _parse_sweep_values(args.values)
        configs = [_apply_sweep_value(cfg, args.param, v) for v in values]
        cap = _thread_cap()
    except InvalidInputError as exc:
        _err(str(exc))
        return 1
    root = Path(cfg.get("output_dir") or _default_outdir(args.config))
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _err(f"cannot create {root}: {exc}")
        return 1

    subdirs = [root / f"{args.param.replace('.', '_')}_{v}" for v in values]
    workers = max(1, min(cap, len(values)))

    def job(pair):
        sub_cfg, subdir = pair
        sub_cfg = dict(sub_cfg, output_dir=str(subdir))
        try:
            return execute(sub_cfg, subdir)
        except Exception as exc:  # isolation: one bad run must not kill the sweep
            _err(f"{subdir.name}: unexpected failure: {exc}")
            return 2, {}

    if workers == 1:
        results = [job(p) for p in zip(configs, subdirs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, zip(configs, subdirs)))

    rows = [",".join(_AGGREGATE_COLUMNS)]
    for value, (status, fields) in zip(values, results):
        rows.append(",".join([
            _csv_cell(value), str(status),
            _csv_cell(fields.get("iterations")),
            _csv_cell(fields.get("final_f")),
            _csv_cell(fields.get("rate.verdict")),
            _csv_cell(fields.get("rate.rho")),
            _csv_cell(fields.get("rate.slope")),
            _csv_cell(fields.get("h1.degenerate_a")),
        ]))
    (root / "aggregate.csv").write_text("\n".join(rows) + "\n")
    print(f"sweep over {args.param}: {len(values)} runs, aggregate in "
          f"{root / 'aggregate.csv'}")
    return max(status for status, _ in results)


def cmd_verify(args) -> int:
    cfg = {}
    if args.delta is not None:
        cfg["delta"] = args.delta
    if args.beta_max is not None:
        cfg["beta_max"] = args.beta_max
    try:
        trace = read_trace_csv(args.trace, algorithm=args.algorithm, config=cfg)
        trace.problem_id = args.problem
        trace.terminated = args.terminated
        report = build_report(
            trace, m=args.m, a=args.a, alpha=args.alpha, delta=args.delta,
            c=args.c, lipschitz=args.lf, tau=args.tau, mu=args.mu,
            kbar=args.kbar,
        )
    except (InvalidInputError, InsufficientTraceError) as exc:
        _err(str(exc))
        return 1
    except KlDescentError as exc:
        _err(f"diagnostics failure: {exc}")
        return 2
    payload = report.to_json()
    if args.report:
        Path(args.report).write_text(payload)
    else:
        sys.stdout.write(payload)
    if not report.passed():
        _err("audit failure: " + ", ".join(report.failures()))
        return 3
    return 0


def cmd_list_problems(_args) -> int:
    for pid, desc in describe_problems():
        print(f"{pid:12s} {desc}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kldescent",
                     description="Nonmonotone proximal descent solvers with "
                                 "framework audits")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="experiment config (JSON)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config across parameter values")
    p_sweep.add_argument("config", help="experiment config (JSON)")
    p_sweep.add_argument("--param", required=True,
                         help="config field to vary (e.g. m, delta, params.lam)")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated numeric values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="re-audit an existing trace.csv")
    p_ver.add_argument("trace", help="trace CSV produced by run (or compatible)")
    p_ver.add_argument("--report", default=None,
                       help="write the report JSON here (default: stdout)")
    p_ver.add_argument("--algorithm", default="npg_major", choices=_ALGORITHMS)
    p_ver.add_argument("--m", type=int, default=None, help="window length")
    p_ver.add_argument("--a", type=float, default=None,
                       help="sufficient-decrease constant")
    p_ver.add_argument("--alpha", type=float, default=None)
    p_ver.add_argument("--delta", type=float, default=None,
                       help="proximity weight used by the run")
    p_ver.add_argument("--c", type=float, default=None,
                       help="free decrease weight (DC solver)")
    p_ver.add_argument("--beta-max", type=float, default=None, dest="beta_max")
    p_ver.add_argument("--lf", type=float, default=None,
                       help="gradient Lipschitz constant of f")
    p_ver.add_argument("--tau", type=float, default=0.5)
    p_ver.add_argument("--mu", type=float, default=None)
    p_ver.add_argument("--kbar", type=int, default=None)
    p_ver.add_argument("--problem", default="", help="problem id for the report")
    p_ver.add_argument("--terminated", default="",
                       choices=("", "tolerance", "stationary", "max_outer"),
                       help="termination reason of the original run")
    p_ver.set_defaults(func=cmd_verify)

    p_list = sub.add_parser("list-problems", help="list canned problem ids")
    p_list.set_defaults(func=cmd_list_problems)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _err(str(exc))
        return 1
    try:
        return args.func(args)
    except InvalidInputError as exc:
        _err(str(exc))
        return 1
    except KlDescentError as exc:
        _err(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
