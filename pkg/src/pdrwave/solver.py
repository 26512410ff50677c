"""Projection-descent-retraction iterations for quadratic costs on the circle manifold.

The cost is ``fbar(x) = x^H (P + gamma I) x - 2 Re(q^H x)``.  On the manifold
``x^H x = L`` so ``fbar`` differs from ``f(x) = x^H P x - 2 Re(q^H x) + r`` by
the constant ``gamma * L - r``; both have the same minimisers there.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import DimensionMismatch, MonotonicityViolation
from .manifold import project_tangent, retract

# extra objective term: x -> (value, euclidean gradient)
Penalty = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

STATIONARY_TOL = 1e-12
MONOTONE_TOL = 1e-9
EIG_TOL = 1e-10


class QuadraticCost:
    """Hermitian PSD quadratic ``(P, q, r)`` with manifold regulariser ``gamma``.

    ``P`` is not copied.  Its largest eigenvalue is estimated lazily and
    shared by costs derived through :meth:`with_linear_term` and
    :meth:`with_gamma`, since the outer phase-alternation loop only changes ``q``.
    """

    __slots__ = ("P", "q", "r", "gamma", "_lam")

    def __init__(self, P, q, r: float = 0.0, gamma: float = 0.0, *, check: bool = True, _lam=None):
        P = np.asarray(P, dtype=complex)
        q = np.asarray(q, dtype=complex)
        if check:
            P = linalg.as_hermitian(P, atol=1e-10)
            q = linalg.as_vector(q, "q")
        if q.shape != (P.shape[0],):
            raise DimensionMismatch(f"P is {P.shape} but q has shape {q.shape}")
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        self.P = P
        self.q = q
        self.r = float(r)
        self.gamma = float(gamma)
        self._lam = {} if _lam is None else _lam

    @property
    def L(self) -> int:
        return self.P.shape[0]

    def lambda_max_P(self, tol: float = EIG_TOL) -> float:
        """Power-iteration estimate of the largest eigenvalue of ``P`` (cached)."""
        if tol not in self._lam:
            self._lam[tol] = linalg.largest_eigenvalue(self.P, tol=tol)
        return self._lam[tol]

    def lambda_upper_P(self, tol: float = EIG_TOL) -> float:
        """Safe over-estimate of the largest eigenvalue of ``P``."""
        return linalg.safe_upper_bound(self.lambda_max_P(tol), tol)

    def with_linear_term(self, q, r: Optional[float] = None) -> "QuadraticCost":
        return QuadraticCost(self.P, q, self.r if r is None else r, self.gamma, check=False, _lam=self._lam)

    def with_gamma(self, gamma: float) -> "QuadraticCost":
        return QuadraticCost(self.P, self.q, self.r, gamma, check=False, _lam=self._lam)

    def is_psd(self, n_samples: int = 8, seed: int = 0) -> bool:
        """Sampled check of ``v^H P v >= -1e-9 ||v||^2``."""
        rng = np.random.default_rng(seed)
        for _ in range(n_samples):
            v = rng.standard_normal(self.L) + 1j * rng.standard_normal(self.L)
            if np.vdot(v, self.P @ v).real < -1e-9 * np.vdot(v, v).real:
                return False
        return True


def _check_dim(c: QuadraticCost, x: np.ndarray) -> None:
    if x.shape != (c.L,):
        raise DimensionMismatch(f"cost has dimension {c.L}, x has shape {x.shape}")


def cost_value(c: QuadraticCost, x: np.ndarray) -> tuple[float, float]:
    """Return ``(fbar(x), f(x))``.

    ``f = fbar - gamma * ||x||^2 + r`` holds for every ``x``; on the manifold
    the middle term is ``gamma * L``.
    """
    _check_dim(c, x)
    Px = c.P @ x
    xx = np.vdot(x, x).real
    quad = np.vdot(x, Px).real
    lin = 2.0 * np.vdot(c.q, x).real
    f_bar = quad + c.gamma * xx - lin
    return float(f_bar), float(quad - lin + c.r)


def gradient(c: QuadraticCost, x: np.ndarray) -> np.ndarray:
    """Euclidean gradient ``2 (P + gamma I) x - 2 q``.

    Convention: ``fbar(x + d) - fbar(x) = Re(g^H d) + O(|d|^2)``.
    """
    _check_dim(c, x)
    return 2.0 * (c.P @ x + c.gamma * x) - 2.0 * c.q


def pdr_step(
    c: QuadraticCost,
    x: np.ndarray,
    beta: float,
    grad: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One projection-descent-retraction update.

    Returns ``(x_next, x_bar)`` where ``x_bar = x + beta * P_T(-grad)`` is the
    tangent-space point and ``x_next`` its retraction.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if grad is None:
        grad = gradient(c, x)
    x_bar = x + beta * project_tangent(x, -grad)
    return retract(x_bar), x_bar


def safe_step_size(c: QuadraticCost, margin: float = 0.99, tol: float = EIG_TOL) -> float:
    """Step size ``margin / lambda_max(P + gamma I)`` using an eigenvalue over-estimate."""
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    lam = c.lambda_upper_P(tol) + c.gamma
    if lam <= 0.0:
        # P = 0 and gamma = 0: the cost is linear, so there is no curvature bound on the step
        return math.inf
    return margin / lam


def safe_gamma(P, q, lam_P: Optional[float] = None, tol: float = EIG_TOL) -> float:
    """Smallest regulariser ``(L/8) lambda_max(P) + ||q||_2`` making retraction non-increasing.

    ``P`` may be a :class:`QuadraticCost` (its cached eigenvalue is reused) or
    a matrix.
    """
    if isinstance(P, QuadraticCost):
        lam = P.lambda_upper_P(tol) if lam_P is None else lam_P
        L = P.L
    else:
        P = np.asarray(P, dtype=complex)
        L = P.shape[0]
        lam = linalg.safe_upper_bound(linalg.largest_eigenvalue(P, tol=tol), tol) if lam_P is None else lam_P
    return L / 8.0 * lam + linalg.norms(q)[1]


class Termination(str, enum.Enum):
    COST_DELTA = "CostDelta"
    MAX_ITER = "MaxIter"
    STATIONARY = "StationaryPoint"


@dataclass
class SolverParams:
    """Inputs of the inner PDR loop.

    ``assert_monotone=None`` means "on in safe mode, off otherwise".
    """

    beta: float = 5e-5
    epsilon: float = 1e-3
    max_iter: int = 10_000
    safe_mode: bool = False
    assert_monotone: Optional[bool] = None
    safe_margin: float = 0.99

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.safe_margin < 1.0:
            raise ValueError("safe_margin must lie in (0, 1)")

    @property
    def monotone_check(self) -> bool:
        return self.safe_mode if self.assert_monotone is None else self.assert_monotone


@dataclass
class SolveTrace:
    costs: list = field(default_factory=list)
    projected_grad_norms: list = field(default_factory=list)
    iterations_run: int = 0
    termination: Termination = Termination.MAX_ITER
    beta: float = float("nan")
    gamma: float = float("nan")


def pdr_solve(
    c: QuadraticCost,
    x0: np.ndarray,
    p: SolverParams,
    penalty: Optional[Penalty] = None,
) -> tuple[np.ndarray, SolveTrace]:
    """Run PDR iterations from ``x0`` until a stopping rule fires.

    Stopping rules, checked in this order each iteration: projected gradient
    norm below ``1e-12`` (``StationaryPoint``), ``|fbar_{k+1} - fbar_k| <
    epsilon`` (``CostDelta``), ``max_iter`` steps taken (``MaxIter``).
    ``trace.costs[k]`` is the objective at ``x_k``; with a ``penalty`` the
    objective is ``fbar + penalty``.

    In safe mode ``gamma`` and ``beta`` are replaced by the values from
    :func:`safe_gamma` and :func:`safe_step_size` before iterating.
    """
    _check_dim(c, x0)
    beta = p.beta
    if p.safe_mode:
        c = c.with_gamma(safe_gamma(c, c.q))
        beta = safe_step_size(c, p.safe_margin)
    check = p.monotone_check

    def objective(x):
        val = cost_value(c, x)[0]
        g = gradient(c, x)
        if penalty is not None:
            pv, pg = penalty(x)
            val += pv
            g = g + pg
        return val, g

    trace = SolveTrace(beta=beta, gamma=c.gamma)
    x = x0
    val, g = objective(x)
    trace.costs.append(val)
    for k in range(p.max_iter):
        direction = project_tangent(x, -g)
        gnorm = float(np.linalg.norm(direction))
        trace.projected_grad_norms.append(gnorm)
        if gnorm < STATIONARY_TOL:
            trace.termination = Termination.STATIONARY
            return x, trace
        x_new = retract(x + beta * direction)
        new_val, new_g = objective(x_new)
        if check and new_val > val + MONOTONE_TOL * max(1.0, abs(val)):
            raise MonotonicityViolation(
                f"cost rose from {val!r} to {new_val!r} at iteration {k + 1}"
            )
        trace.costs.append(new_val)
        trace.iterations_run = k + 1
        x, g = x_new, new_g
        if abs(new_val - val) < p.epsilon:
            trace.termination = Termination.COST_DELTA
            val = new_val
            break
        val = new_val
    else:
        trace.termination = Termination.MAX_ITER
    trace.projected_grad_norms.append(float(np.linalg.norm(project_tangent(x, -g))))
    return x, trace
