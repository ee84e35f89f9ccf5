"""Canned problem catalog addressable by string identifiers.

Randomized instances draw every random quantity from a single
``numpy.random.default_rng(seed)`` generator (PCG64), so a given
``(id, params)`` pair always produces bit-identical data.  Matrices and
right-hand sides can instead be loaded from headerless CSV files via the
``A_csv`` / ``b_csv`` parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .oracles import (
    CompositeProblem,
    Vector,
    l0_oracle,
    l1_oracle,
    l2_norm_oracle,
    make_least_squares,
    make_power4_1d,
    zero_oracle,
)

__all__ = ["ProblemInstance", "make_problem", "problem_ids", "describe_problems"]


@dataclass(frozen=True)
class ProblemInstance:
    """A catalog problem together with its suggested start point and metadata."""

    problem_id: str
    problem: CompositeProblem
    x0: Vector
    params: dict = field(default_factory=dict)


def _load_matrix(path: str) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"could not load matrix from {path!r}: {exc}") from exc
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"matrix loaded from {path!r} has non-finite entries")
    return A


def _load_vector(path: str) -> np.ndarray:
    try:
        b = np.loadtxt(path, delimiter=",", dtype=np.float64).reshape(-1)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"could not load vector from {path!r}: {exc}") from exc
    if not np.all(np.isfinite(b)):
        raise InvalidInputError(f"vector loaded from {path!r} has non-finite entries")
    return b


def _sparse_regression_data(params: dict, rows_default: int, cols_default: int):
    """Shared data generator: A (scaled Gaussian), b = A x_true + small noise."""
    if "A_csv" in params or "b_csv" in params:
        if not ("A_csv" in params and "b_csv" in params):
            raise InvalidInputError("A_csv and b_csv must be given together")
        A = _load_matrix(params["A_csv"])
        b = _load_vector(params["b_csv"])
        if b.shape[0] != A.shape[0]:
            raise InvalidInputError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        return A, b
    if "seed" not in params:
        raise InvalidInputError("randomized problems require a 'seed' parameter")
    seed = int(params["seed"])
    rows = int(params.get("rows", rows_default))
    cols = int(params.get("cols", cols_default))
    if rows <= 0 or cols <= 0:
        raise InvalidInputError(f"rows and cols must be positive, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((rows, cols)) / np.sqrt(rows)
    x_true = np.zeros(cols)
    support = rng.choice(cols, size=max(1, cols // 10), replace=False)
    x_true[support] = rng.standard_normal(support.size)
    b = A @ x_true + 0.01 * rng.standard_normal(rows)
    return A, b


def _lam_from(params: dict, A: np.ndarray, b: np.ndarray, factor_default: float) -> float:
    if "lam" in params:
        lam = float(params["lam"])
    else:
        lam = float(params.get("lam_factor", factor_default)) * float(
            np.max(np.abs(A.T @ b))
        )
    if not np.isfinite(lam) or lam <= 0.0:
        raise InvalidInputError(f"penalty weight must be positive, got {lam!r}")
    return lam


def _make_lasso(params: dict) -> ProblemInstance:
    A, b = _sparse_regression_data(params, rows_default=50, cols_default=100)
    lam = _lam_from(params, A, b, 0.1)
    problem = CompositeProblem(
        f=make_least_squares(A, b), g=l1_oracle(lam), h=None, dimension=A.shape[1]
    )
    return ProblemInstance("lasso", problem, np.zeros(A.shape[1]), dict(params, lam=lam))


def _make_l0_ls(params: dict) -> ProblemInstance:
    A, b = _sparse_regression_data(params, rows_default=20, cols_default=40)
    lam = _lam_from(params, A, b, 0.1)
    problem = CompositeProblem(
        f=make_least_squares(A, b), g=l0_oracle(lam), h=None, dimension=A.shape[1]
    )
    return ProblemInstance("l0-ls", problem, np.zeros(A.shape[1]), dict(params, lam=lam))


def _make_l1_l2_dc(params: dict) -> ProblemInstance:
    A, b = _sparse_regression_data(params, rows_default=20, cols_default=40)
    lam = _lam_from(params, A, b, 0.1)
    problem = CompositeProblem(
        f=make_least_squares(A, b),
        g=l1_oracle(lam),
        h=l2_norm_oracle(lam),
        dimension=A.shape[1],
    )
    return ProblemInstance("l1-l2-dc", problem, np.zeros(A.shape[1]), dict(params, lam=lam))


def _make_power4_1d(params: dict) -> ProblemInstance:
    x0 = float(params.get("x0", 1.0))
    if not np.isfinite(x0):
        raise InvalidInputError("x0 must be finite")
    problem = CompositeProblem(f=make_power4_1d(), g=zero_oracle(), h=None, dimension=1)
    return ProblemInstance("power4-1d", problem, np.array([x0]), dict(params))


def _make_quad_l1(params: dict) -> ProblemInstance:
    """Strongly convex quadratic plus l1: least squares with a ridge block stacked on."""
    mu = float(params.get("mu", 1.0))
    if not np.isfinite(mu) or mu <= 0.0:
        raise InvalidInputError(f"mu must be positive, got {mu!r}")
    A, b = _sparse_regression_data(params, rows_default=30, cols_default=30)
    n = A.shape[1]
    A_full = np.vstack([A, np.sqrt(mu) * np.eye(n)])
    b_full = np.concatenate([b, np.zeros(n)])
    lam = _lam_from(params, A_full, b_full, 0.1)
    problem = CompositeProblem(
        f=make_least_squares(A_full, b_full), g=l1_oracle(lam), h=None, dimension=n
    )
    return ProblemInstance("quad-l1", problem, np.zeros(n), dict(params, lam=lam, mu=mu))


_REGISTRY = {
    "lasso": (_make_lasso, "least squares + l1 penalty (convex)"),
    "l0-ls": (_make_l0_ls, "least squares + l0 cardinality penalty (nonconvex prox term)"),
    "l1-l2-dc": (_make_l1_l2_dc, "least squares + l1 minus l2 (difference of convex terms)"),
    "power4-1d": (_make_power4_1d, "scalar x^4/4, flat minimizer at 0 (sublinear benchmark)"),
    "quad-l1": (_make_quad_l1, "strongly convex quadratic + l1 (linear-rate benchmark)"),
}


def problem_ids() -> list[str]:
    return sorted(_REGISTRY)


def describe_problems() -> list[tuple[str, str]]:
    return [(pid, _REGISTRY[pid][1]) for pid in problem_ids()]


def make_problem(problem_id: str, params: dict | None = None) -> ProblemInstance:
    """Build a catalog problem; unknown identifiers raise ``InvalidInputError``."""
    if problem_id not in _REGISTRY:
        raise InvalidInputError(
            f"unknown problem id {problem_id!r}; known ids: {', '.join(problem_ids())}"
        )
    builder, _ = _REGISTRY[problem_id]
    return builder(dict(params or {}))
