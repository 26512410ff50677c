"""Operations on the complex circle manifold ``{x in C^L : |x_l| = 1}``."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NegativePsi, ZeroModulusElement

FEASIBILITY_TOL = 1e-10
TANGENCY_TOL = 1e-9
ZERO_MODULUS = 1e-300
PSI_TOL = 1e-10


def is_feasible(x, tol: float = FEASIBILITY_TOL) -> bool:
    """True if every element of ``x`` has unit modulus within ``tol``."""
    x = np.asarray(x)
    return bool(np.all(np.abs(np.abs(x) - 1.0) <= tol))


def is_tangent(z, v, tol: float = TANGENCY_TOL) -> bool:
    """True if ``v`` lies in the tangent space at ``z`` (``Re(conj(v) z) = 0``)."""
    return bool(np.all(np.abs(np.real(np.conj(v) * z)) <= tol))


def random_point(L: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus vector with phases drawn uniformly from ``[0, 2*pi)``."""
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=L))


def project_tangent(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``w`` onto the tangent space at ``z``.

    Removes the radial part of each element: ``w - Re(conj(w) * z) * z``.
    """
    if z.shape != w.shape:
        raise DimensionMismatch(f"point has shape {z.shape}, direction has shape {w.shape}")
    return w - np.real(np.conj(w) * z) * z


def retract(w: np.ndarray) -> np.ndarray:
    """Map ``w`` back to the manifold by elementwise normalisation."""
    mod = np.abs(w)
    bad = np.flatnonzero(mod < ZERO_MODULUS)
    if bad.size:
        raise ZeroModulusElement(f"zero-modulus element(s) at index {bad.tolist()}")
    return w / mod


def renormalize(x: np.ndarray) -> np.ndarray:
    """Remove accumulated modulus drift from a (nearly) feasible point."""
    return x / np.abs(x)


def psi_decomposition(x_bar: np.ndarray, x_next: np.ndarray) -> np.ndarray:
    """Radial excess ``psi`` with ``x_bar = (1 + psi) * x_next``.

    ``x_next`` must be the retraction of ``x_bar``.  A tangent-space update
    from a feasible point never shrinks an element, so ``psi >= 0``; a
    negative entry raises :class:`NegativePsi`.
    """
    if x_bar.shape != x_next.shape:
        raise DimensionMismatch(f"shapes {x_bar.shape} and {x_next.shape} differ")
    psi = np.abs(x_bar) - 1.0
    neg = np.flatnonzero(psi < -PSI_TOL)
    if neg.size:
        raise NegativePsi(f"negative radial excess at index {neg.tolist()}: min {psi.min():.3e}")
    recon = np.max(np.abs(x_bar - (1.0 + psi) * x_next), initial=0.0)
    if recon > PSI_TOL * max(1.0, float(np.max(np.abs(x_bar), initial=0.0))):
        raise ValueError(f"x_next is not the retraction of x_bar (residual {recon:.3e})")
    return psi
