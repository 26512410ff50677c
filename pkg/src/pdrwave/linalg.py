"""Dense complex linear algebra used by the solver.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
Products go through ``numpy.matmul`` (BLAS); for a fixed BLAS thread count
the summation order, and hence the result, is deterministic.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import ConvergenceWarning, DimensionMismatch

HERMITIAN_ATOL = 1e-12


def as_vector(v, name: str = "v") -> np.ndarray:
    """Return ``v`` as a finite 1-D complex array."""
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_hermitian(A, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate a square Hermitian matrix and return it as complex128."""
    arr = np.asarray(A, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if not np.allclose(arr, arr.conj().T, rtol=0.0, atol=atol * scale):
        raise ValueError("matrix is not Hermitian")
    return arr


def hermitian_matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return ``A @ v`` after checking dimensions."""
    if A.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"matrix is {A.shape}, vector has length {v.shape[0]}")
    return A @ v


def norms(v) -> tuple[float, float, float]:
    """l1, l2 and l-infinity norms of the element moduli of ``v``."""
    mod = np.abs(np.asarray(v, dtype=complex))
    if mod.size == 0:
        return 0.0, 0.0, 0.0
    linf = float(mod.max())
    if linf == 0.0:
        return 0.0, 0.0, 0.0
    # scale by the largest modulus so tiny or huge entries do not under/overflow
    s = mod / linf
    return float(mod.sum()), linf * float(np.sqrt(np.sum(s * s))), linf


def power_start_vector(n: int) -> np.ndarray:
    """Deterministic start vector: all ones with a small bump on the first entry."""
    v = np.ones(n, dtype=complex)
    v[0] += 1e-3 + 1e-3j
    return v / np.linalg.norm(v)


def largest_eigenvalue(
    A: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 20000,
    return_info: bool = False,
):
    """Dominant eigenvalue of a Hermitian PSD matrix by power iteration.

    The estimate is the Rayleigh quotient of the current iterate.  Iteration
    stops once the eigen-residual ``||A v - rho v||`` falls below
    ``tol * rho``; for Hermitian ``A`` that bounds the distance from ``rho``
    to the spectrum.

    Parameters
    ----------
    A : (L, L) complex array
        Hermitian positive semidefinite matrix.
    tol : float
        Relative tolerance.
    max_iter : int
        Iteration cap.  Hitting it emits a :class:`ConvergenceWarning` and the
        best Rayleigh quotient seen so far is returned.
    return_info : bool
        If true, return ``(estimate, converged, iterations)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    v = power_start_vector(n)
    best = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = A @ v
        rho = float(np.vdot(v, w).real)
        best = max(best, rho)
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            # v lies in the null space; A restricted to span(v) is zero
            converged = not np.any(A)
            break
        resid = np.linalg.norm(w - rho * v)
        if resid <= tol * abs(rho):
            converged = True
            break
        v = w / wnorm
    if not converged:
        warnings.warn(
            f"power iteration stopped after {it} iterations without reaching tol={tol}",
            ConvergenceWarning,
            stacklevel=2,
        )
    if return_info:
        return best, converged, it
    return best


def safe_upper_bound(estimate: float, tol: float) -> float:
    """Inflate an eigenvalue estimate so it can be used as an upper bound."""
    return estimate * (1.0 + 10.0 * tol)
