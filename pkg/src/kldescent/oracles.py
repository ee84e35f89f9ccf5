"""Problem oracles: smooth terms, prox-friendly terms, and composite containers.

All vectors are dense 1-D ``numpy.float64`` arrays.  A composite objective has
the form ``F(x) = f(x) + g(x) - h(x)`` where ``f`` is smooth, ``g`` is proper
lower-semicontinuous with a cheap prox map (possibly nonconvex, e.g. a
cardinality penalty), and ``h`` is an optional continuous convex term accessed
through one deterministic subgradient per point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, TypeAlias

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidInputError

Vector: TypeAlias = NDArray[np.float64]

__all__ = [
    "Vector",
    "SmoothOracle",
    "ProxOracle",
    "ConvexOracle",
    "CompositeProblem",
    "prox_l1",
    "prox_l0",
    "prox_box",
    "subgrad_l2_norm",
    "l1_oracle",
    "l0_oracle",
    "box_oracle",
    "zero_oracle",
    "l2_norm_oracle",
    "make_least_squares",
    "make_power4_1d",
    "power_iteration_sq_norm",
    "as_vector",
]


def as_vector(x, name: str = "x") -> Vector:
    """Coerce to a finite 1-D float64 array, raising ``InvalidInputError`` otherwise."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return v


def _require_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise InvalidInputError(f"{name} must be a positive finite real, got {value!r}")
    return value


@dataclass(frozen=True)
class SmoothOracle:
    """Continuously differentiable term: value, gradient, optional curvature hint.

    ``lipschitz_hint`` is an upper bound on the gradient's Lipschitz constant
    (``None`` when no global bound exists).
    """

    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    lipschitz_hint: Optional[float] = None


@dataclass(frozen=True)
class ProxOracle:
    """Proper lsc term with an exact proximal map.

    ``value`` may return ``+inf`` outside the domain.  ``prox(v, gamma)``
    returns the minimizer of ``g(x) + (gamma/2) * ||x - v||^2``; larger
    ``gamma`` keeps the output closer to ``v``.
    """

    value: Callable[[Vector], float]
    prox: Callable[[Vector, float], Vector]


@dataclass(frozen=True)
class ConvexOracle:
    """Finite-valued convex term with one deterministic subgradient per point."""

    value: Callable[[Vector], float]
    subgradient: Callable[[Vector], Vector]


@dataclass(frozen=True)
class CompositeProblem:
    """Objective ``F = f + g - h`` with ``h`` optional."""

    f: SmoothOracle
    g: ProxOracle
    h: Optional[ConvexOracle]
    dimension: int

    def objective(self, x: Vector) -> float:
        val = self.f.value(x) + self.g.value(x)
        if self.h is not None:
            val -= self.h.value(x)
        return float(val)


# ---------------------------------------------------------------------------
# prox maps and subgradients


def prox_l1(v: Vector, lam: float, gamma: float) -> Vector:
    """Soft threshold: prox of ``lam * ||.||_1`` at ``v`` with weight ``gamma``."""
    v = as_vector(v, "v")
    lam = _require_positive(lam, "lam")
    gamma = _require_positive(gamma, "gamma")
    t = lam / gamma
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_l0(v: Vector, lam: float, gamma: float) -> Vector:
    """Hard threshold: prox of ``lam * ||.||_0`` at ``v`` with weight ``gamma``.

    Entries with ``|v_i| <= sqrt(2 * lam / gamma)`` are zeroed; the tie at
    equality is broken toward 0 so the map is single-valued.
    """
    v = as_vector(v, "v")
    lam = _require_positive(lam, "lam")
    gamma = _require_positive(gamma, "gamma")
    t = np.sqrt(2.0 * lam / gamma)
    return np.where(np.abs(v) > t, v, 0.0)


def prox_box(v: Vector, lo: float, hi: float, gamma: float) -> Vector:
    """Componentwise clamp onto ``[lo, hi]``; independent of ``gamma``."""
    v = as_vector(v, "v")
    lo = float(lo)
    hi = float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise InvalidInputError(f"box bounds must satisfy lo <= hi, got [{lo!r}, {hi!r}]")
    _require_positive(gamma, "gamma")
    return np.clip(v, lo, hi)


def subgrad_l2_norm(x: Vector, lam: float) -> Vector:
    """Deterministic subgradient of ``lam * ||.||_2``: ``lam*x/||x||``, or 0 at 0."""
    x = as_vector(x, "x")
    lam = _require_positive(lam, "lam")
    nrm = float(np.linalg.norm(x))
    if nrm == 0.0:
        return np.zeros_like(x)
    return (lam / nrm) * x


# ---------------------------------------------------------------------------
# oracle builders


def l1_oracle(lam: float) -> ProxOracle:
    lam = _require_positive(lam, "lam")
    return ProxOracle(
        value=lambda x: lam * float(np.sum(np.abs(x))),
        prox=lambda v, gamma: prox_l1(v, lam, gamma),
    )


def l0_oracle(lam: float) -> ProxOracle:
    lam = _require_positive(lam, "lam")
    return ProxOracle(
        value=lambda x: lam * float(np.count_nonzero(x)),
        prox=lambda v, gamma: prox_l0(v, lam, gamma),
    )


def box_oracle(lo: float, hi: float) -> ProxOracle:
    """Indicator of the box ``[lo, hi]^n`` (value 0 inside, +inf outside)."""
    lo_f, hi_f = float(lo), float(hi)
    if lo_f > hi_f:
        raise InvalidInputError(f"box bounds must satisfy lo <= hi, got [{lo!r}, {hi!r}]")

    def value(x):
        inside = np.all(x >= lo_f) and np.all(x <= hi_f)
        return 0.0 if inside else float("inf")

    return ProxOracle(value=value, prox=lambda v, gamma: prox_box(v, lo_f, hi_f, gamma))


def zero_oracle() -> ProxOracle:
    """The identically-zero term; its prox is the identity."""
    return ProxOracle(value=lambda x: 0.0, prox=lambda v, gamma: np.asarray(v, dtype=np.float64))


def l2_norm_oracle(lam: float) -> ConvexOracle:
    lam = _require_positive(lam, "lam")
    return ConvexOracle(
        value=lambda x: lam * float(np.linalg.norm(x)),
        subgradient=lambda x: subgrad_l2_norm(x, lam),
    )


def power_iteration_sq_norm(A: np.ndarray, rel_tol: float = 1e-6, max_iter: int = 10000) -> float:
    """Largest squared singular value of ``A`` by power iteration on ``A^T A``.

    Deterministic start vector; stops when the eigenvalue estimate changes by
    less than ``rel_tol`` relatively.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInputError(f"A must be a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A contains non-finite entries")
    n = A.shape[1]
    if A.size == 0 or not np.any(A):
        return 0.0
    # fixed start with a mild ramp so it is never orthogonal to the top
    # singular vector for simple structured matrices
    v = np.ones(n) + np.linspace(0.0, 1e-3, n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            return 0.0
        v = w / lam_new
        if abs(lam_new - lam) <= rel_tol * lam_new:
            return lam_new
        lam = lam_new
    return lam


def make_least_squares(A: np.ndarray, b: Vector) -> SmoothOracle:
    """Smooth oracle for ``0.5 * ||A x - b||^2``.

    The Lipschitz hint is the squared spectral norm of ``A`` estimated by
    power iteration at 1e-6 relative tolerance.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInputError(f"A must be a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A contains non-finite entries")
    b = as_vector(b, "b")
    if b.shape[0] != A.shape[0]:
        raise InvalidInputError(
            f"dimension mismatch: A has {A.shape[0]} rows but b has {b.shape[0]} entries"
        )
    n = A.shape[1]

    def value(x):
        if x.shape[0] != n:
            raise InvalidInputError(f"expected dimension {n}, got {x.shape[0]}")
        r = A @ x - b
        return 0.5 * float(r @ r)

    def gradient(x):
        if x.shape[0] != n:
            raise InvalidInputError(f"expected dimension {n}, got {x.shape[0]}")
        return A.T @ (A @ x - b)

    return SmoothOracle(value=value, gradient=gradient,
                        lipschitz_hint=power_iteration_sq_norm(A))


def make_power4_1d() -> SmoothOracle:
    """Smooth oracle for the scalar quartic ``x^4 / 4`` (gradient ``x^3``).

    The gradient is not globally Lipschitz, so no hint is attached.
    """

    def value(x):
        t = float(x[0])
        return 0.25 * t * t * t * t

    def gradient(x):
        t = float(x[0])
        return np.array([t * t * t])

    return SmoothOracle(value=value, gradient=gradient, lipschitz_hint=None)
