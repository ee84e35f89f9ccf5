"""Nonmonotone proximal gradient with extrapolation for ``F = f + g``.

The method tracks the paired state ``z^k = (x^k, x^{k-1})`` and the
proximity-augmented merit ``F_delta(z) = F(x) + (delta/2) ||x - u||^2``.
Each outer iteration extrapolates ``y = x + beta (x - u)``, takes a proximal
gradient step at ``y``, and accepts when

    F_delta(cand, x) <= max window F_delta
                        - (alpha*gamma/2) ||cand - x||^2
                        - (alpha*delta/2) ||x - u||^2.

On rejection the stepsize weight grows (``gamma *= rho``) while the
extrapolation weight shrinks (``beta *= nu``); requiring ``nu < 1/rho`` makes
the product ``gamma_j * beta_j`` decay geometrically, which keeps the inertial
term harmless in the limit.  Setting ``delta = 0``, ``beta_max = 0`` and
``m = 0`` recovers the classical monotone backtracking proximal gradient
method.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import (
    BacktrackingFailureError,
    InvalidInputError,
    OracleInconsistencyError,
)
from .memory import MemoryWindow
from .oracles import CompositeProblem, Vector, as_vector
from .trace import IterateRecord, Trace

__all__ = ["PgenlsConfig", "AugmentedState", "PgStepResult", "f_delta",
           "inner_schedule", "pgenls_step", "pgenls_solve", "pg_residual"]


@dataclass(frozen=True)
class PgenlsConfig:
    m: int = 5
    delta: float = 1.0
    alpha: float = 0.5
    gamma_min: float = 1e-2
    gamma_max: float = 1e10
    beta_max: float = 0.9
    rho: float = 2.0
    nu: float = 0.25
    max_outer: int = 10000
    max_inner: int = 60
    tol_step: float = 1e-8
    tol_resid: float = 1e-8
    gamma_init_rule: str = "spectral"
    beta_init_rule: str = "constant"

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 0:
            raise InvalidInputError(f"m must be a nonnegative integer, got {self.m!r}")
        if not self.delta >= 0.0:
            raise InvalidInputError(f"delta must be nonnegative, got {self.delta!r}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.gamma_min <= self.gamma_max:
            raise InvalidInputError(
                f"gamma bounds must satisfy 0 < gamma_min <= gamma_max, "
                f"got [{self.gamma_min!r}, {self.gamma_max!r}]"
            )
        if not 0.0 <= self.beta_max <= 1.0:
            raise InvalidInputError(f"beta_max must lie in [0, 1], got {self.beta_max!r}")
        if not self.rho > 1.0:
            raise InvalidInputError(f"rho must exceed 1, got {self.rho!r}")
        if not 0.0 < self.nu < 1.0 / self.rho:
            raise InvalidInputError(
                f"nu must lie strictly in (0, 1/rho) = (0, {1.0 / self.rho!r}), got {self.nu!r}"
            )
        if self.max_outer < 1:
            raise InvalidInputError(f"max_outer must be at least 1, got {self.max_outer!r}")
        if self.max_inner < 1:
            raise InvalidInputError(f"max_inner must be at least 1, got {self.max_inner!r}")
        if not self.tol_step > 0.0 or not self.tol_resid > 0.0:
            raise InvalidInputError("tolerances must be positive")
        if self.gamma_init_rule not in ("constant", "spectral"):
            raise InvalidInputError(
                f"gamma_init_rule must be 'constant' or 'spectral', got {self.gamma_init_rule!r}"
            )
        if self.beta_init_rule not in ("constant", "nesterov"):
            raise InvalidInputError(
                f"beta_init_rule must be 'constant' or 'nesterov', got {self.beta_init_rule!r}"
            )
        if self.delta == 0.0 and self.beta_max > 0.0:
            warnings.warn(
                "delta=0 with beta_max>0: the paired-state decrease constant is "
                "degenerate; audits fall back to the x-block only",
                UserWarning, stacklevel=2,
            )

    def degenerate_a(self) -> bool:
        return self.delta == 0.0 and self.beta_max > 0.0

    def h1_constant(self) -> float:
        """Audited sufficient-decrease constant.

        ``(alpha/2) * min(gamma_min, delta)`` for the paired state; with
        ``delta = 0`` the audit covers the x-block only, where the acceptance
        test still forces ``(alpha/2) * gamma_min``.
        """
        if self.delta > 0.0:
            return 0.5 * self.alpha * min(self.gamma_min, self.delta)
        return 0.5 * self.alpha * self.gamma_min

    def snapshot(self) -> dict:
        return asdict(self)


@dataclass
class AugmentedState:
    k: int
    x_curr: Vector
    x_pair: Vector                 # second block of z^k (x^{k-1}, bootstrap x^0)
    window: MemoryWindow
    gamma_prev: Optional[float]
    beta_prev: Optional[float]
    y_prev: Optional[Vector]
    grad_curr: Optional[Vector] = None   # cache of f.gradient(x_curr)
    grad_prev: Optional[Vector] = None
    t_prev: float = 1.0                  # Nesterov counters (used when enabled)
    t_curr: float = 1.0


@dataclass
class PgStepResult:
    x_next: Vector
    gamma: float
    beta: float
    j: int
    y: Vector
    grad_y: Vector
    decrement: float
    f_next: float       # F(x_next)
    merit_next: float   # F_delta((x_next, x_curr))
    step_norm: float


def f_delta(problem: CompositeProblem, x: Vector, u: Vector, delta: float) -> float:
    """Proximity-augmented objective ``F(x) + (delta/2) ||x - u||^2``."""
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    if not delta >= 0.0:
        raise InvalidInputError(f"delta must be nonnegative, got {delta!r}")
    d = x - u
    return problem.objective(x) + 0.5 * float(delta) * float(d @ d)


def inner_schedule(gamma0: float, beta0: float, rho: float, nu: float, j: int):
    """Trial pair ``(gamma0 * rho^j, beta0 * nu^j)`` for inner trial ``j``."""
    return gamma0 * rho**j, beta0 * nu**j


def _initial_gamma(state: AugmentedState, config: PgenlsConfig) -> float:
    if config.gamma_init_rule == "constant" or state.grad_prev is None:
        return config.gamma_min
    dx = state.x_curr - state.x_pair
    dg = state.grad_curr - state.grad_prev
    denom = float(dx @ dx)
    if denom == 0.0:
        return config.gamma_min
    ratio = float(dx @ dg) / denom
    if not math.isfinite(ratio):
        return config.gamma_min
    return float(min(max(ratio, config.gamma_min), config.gamma_max))


def _initial_beta(state: AugmentedState, config: PgenlsConfig) -> float:
    if config.beta_init_rule == "constant":
        return config.beta_max
    beta = (state.t_prev - 1.0) / state.t_curr
    return float(min(max(beta, 0.0), config.beta_max))


def pgenls_step(problem: CompositeProblem, state: AugmentedState,
                config: PgenlsConfig) -> PgStepResult:
    """Run one backtracked extrapolated proximal-gradient trial loop."""
    x = state.x_curr
    u = state.x_pair
    inertia = x - u
    inertia_sq = float(inertia @ inertia)
    gamma0 = _initial_gamma(state, config)
    beta0 = _initial_beta(state, config)
    delta = config.delta
    alpha = config.alpha

    last = (0, gamma0)
    for j in range(config.max_inner):
        gamma, beta = inner_schedule(gamma0, beta0, config.rho, config.nu, j)
        if beta == 0.0:
            y = x
            if state.grad_curr is None:
                state.grad_curr = problem.f.gradient(x)
            grad_y = state.grad_curr
        else:
            y = x + beta * inertia
            grad_y = problem.f.gradient(y)
        cand = problem.g.prox(y - grad_y / gamma, gamma)
        g_cand = problem.g.value(cand)
        if not math.isfinite(g_cand):
            raise OracleInconsistencyError(
                f"prox output has non-finite penalty value at outer iteration {state.k}"
            )
        F_cand = float(problem.f.value(cand) + g_cand)
        diff = cand - x
        step_sq = float(diff @ diff)
        merit_cand = F_cand + 0.5 * delta * step_sq
        decrement = 0.5 * alpha * (gamma * step_sq + delta * inertia_sq)
        last = (j, gamma)
        if not math.isnan(merit_cand) and state.window.accept(merit_cand, decrement):
            return PgStepResult(
                x_next=cand, gamma=gamma, beta=beta, j=j, y=y, grad_y=grad_y,
                decrement=decrement, f_next=F_cand, merit_next=merit_cand,
                step_norm=math.sqrt(step_sq),
            )
    raise BacktrackingFailureError(
        f"no acceptable step within {config.max_inner} trials at outer iteration "
        f"{state.k} (last gamma {last[1]:.6g})",
        k=state.k, j=last[0], gamma=last[1],
    )


def pg_residual(problem: CompositeProblem, x_curr: Vector, y_curr: Vector,
                x_prev: Vector, gamma_prev: float, delta: float) -> float:
    """Stationarity residual of the paired state after an extrapolated step.

    Norm of the exhibited merit subgradient
    ``(grad f(x) - grad f(y) - gamma (x - y) + delta (x - x_prev),
    delta (x_prev - x))``.
    """
    x_curr = as_vector(x_curr, "x_curr")
    y_curr = as_vector(y_curr, "y_curr")
    x_prev = as_vector(x_prev, "x_prev")
    if not (math.isfinite(gamma_prev) and gamma_prev > 0.0):
        raise InvalidInputError(f"gamma_prev must be positive, got {gamma_prev!r}")
    if not delta >= 0.0:
        raise InvalidInputError(f"delta must be nonnegative, got {delta!r}")
    dxp = x_curr - x_prev
    top = (problem.f.gradient(x_curr) - problem.f.gradient(y_curr)
           - gamma_prev * (x_curr - y_curr) + delta * dxp)
    return math.sqrt(float(top @ top) + float(delta * delta) * float(dxp @ dxp))


def pgenls_solve(problem: CompositeProblem, x0: Vector,
                 config: PgenlsConfig | None = None, *, problem_id: str = "",
                 seed: Optional[int] = None, algorithm_label: str = "pgenls") -> Trace:
    """Iterate :func:`pgenls_step` from the bootstrap pair ``(x^0, x^0)``.

    Problems carrying a concave ``-h`` term are rejected; use the DC solver
    for those.  Termination mirrors the DC solver: joint step / residual
    tolerance, exact stationarity, or the outer cap.
    """
    config = config or PgenlsConfig()
    if problem.h is not None:
        raise InvalidInputError(
            "the extrapolated solver handles objectives f + g only; "
            "this problem has a concave term"
        )
    x0 = as_vector(x0, "x0")
    if problem.dimension != x0.shape[0]:
        raise InvalidInputError(
            f"x0 has dimension {x0.shape[0]}, problem expects {problem.dimension}"
        )
    g0 = problem.g.value(x0)
    if not math.isfinite(g0):
        raise InvalidInputError("x0 lies outside the domain of the penalty term")
    F0 = float(problem.f.value(x0) + g0)

    window = MemoryWindow(config.m)
    window.push(0, F0)  # z^0 = (x^0, x^0) so the proximity term vanishes
    _, ell = window.window_max()
    state = AugmentedState(k=0, x_curr=x0, x_pair=x0, window=window,
                           gamma_prev=None, beta_prev=None, y_prev=None)
    trace = Trace(algorithm=algorithm_label, problem_id=problem_id,
                  config=config.snapshot(), seed=seed)
    trace.records.append(IterateRecord(
        k=0, x=x0, f_value=F0, merit=F0, ell=ell, gamma=float("nan"),
        beta=float("nan"), j_inner=-1, step_norm=0.0, residual=float("nan")))

    terminated = "max_outer"
    for k in range(config.max_outer):
        result = pgenls_step(problem, state, config)
        x_next = result.x_next
        grad_next = problem.f.gradient(x_next)
        dxp = x_next - state.x_curr
        top = (grad_next - result.grad_y - result.gamma * (x_next - result.y)
               + config.delta * dxp)
        residual = math.sqrt(float(top @ top)
                             + (config.delta * result.step_norm) ** 2)

        window.push(k + 1, result.merit_next)
        _, ell = window.window_max()
        trace.records.append(IterateRecord(
            k=k + 1, x=x_next, f_value=result.f_next, merit=result.merit_next,
            ell=ell, gamma=result.gamma, beta=result.beta, j_inner=result.j,
            step_norm=result.step_norm, residual=residual))

        x_scale = 1.0 + float(np.linalg.norm(state.x_curr))
        state.x_pair = state.x_curr
        state.x_curr = x_next
        state.gamma_prev = result.gamma
        state.beta_prev = result.beta
        state.y_prev = result.y
        state.grad_prev = state.grad_curr
        state.grad_curr = grad_next
        state.k = k + 1
        if config.beta_init_rule == "nesterov":
            state.t_prev, state.t_curr = state.t_curr, 0.5 * (
                1.0 + math.sqrt(1.0 + 4.0 * state.t_curr**2))

        if result.step_norm == 0.0:
            terminated = "stationary"
            break
        if result.step_norm <= config.tol_step * x_scale and residual <= config.tol_resid:
            terminated = "tolerance"
            break
    trace.terminated = terminated
    return trace
