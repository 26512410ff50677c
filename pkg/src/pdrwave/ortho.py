"""Orthogonality penalty, lag-zero ISL, LFM reference set and transmit/receive mismatch.

``X`` is the ``N x M`` waveform matrix whose column ``m`` holds antenna
``m``'s samples, so ``x = vec(X)`` is the antenna-major code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beampattern import C_LIGHT, RadarConfig
from .errors import DegenerateDenominator, DimensionMismatch
from .solver import QuadraticCost, gradient

ISL_CLAMP_DB = -350.0
ALPHA_PRESETS = (80.0, 100.0, 200.0)


def waveform_matrix(x, M: int, N: int) -> np.ndarray:
    """``N x M`` view of an antenna-major code."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (M * N,):
        raise DimensionMismatch(f"code must have length {M * N}, got shape {x.shape}")
    return x.reshape(M, N).T


def code_from_matrix(X) -> np.ndarray:
    """Inverse of :func:`waveform_matrix` (column-major ``vec``)."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-D")
    return X.T.reshape(-1)


def _gram_residual(X: np.ndarray) -> np.ndarray:
    N, M = X.shape
    return X.conj().T @ X - N * np.eye(M)


def penalty_value(X, alpha: float) -> float:
    """``alpha ||X^H X - N I||_F^2``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    X = np.asarray(X, dtype=complex)
    return float(alpha * np.sum(np.abs(_gram_residual(X)) ** 2))


def penalty_gradient(X, alpha: float) -> np.ndarray:
    """Euclidean gradient ``4 alpha vec(X (X^H X - N I))`` as an antenna-major code.

    Uses the same convention as the quadratic gradient: the first-order
    change of the penalty along ``delta`` is ``Re(g^H delta)``.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    X = np.asarray(X, dtype=complex)
    return code_from_matrix(4.0 * alpha * (X @ _gram_residual(X)))


def penalty_gradient_reduced(X, alpha: float) -> np.ndarray:
    """``4 alpha vec(X X^H X)``.

    Differs from :func:`penalty_gradient` by ``4 alpha N x``, which is radial
    at unit-modulus points, so both agree after tangent projection there.
    """
    X = np.asarray(X, dtype=complex)
    return code_from_matrix(4.0 * alpha * (X @ (X.conj().T @ X)))


def gradient_h(c: QuadraticCost, X, alpha: float) -> np.ndarray:
    """Gradient of the penalised cost: quadratic part plus :func:`penalty_gradient`."""
    x = code_from_matrix(X)
    if x.shape != (c.L,):
        raise DimensionMismatch(f"code length {x.size} does not match cost dimension {c.L}")
    return gradient(c, x) + penalty_gradient(X, alpha)


def orthogonality_penalty(M: int, N: int, alpha: float):
    """Penalty callback ``x -> (value, gradient)`` for :func:`pdrwave.solver.pdr_solve`."""

    def fn(x):
        X = waveform_matrix(x, M, N)
        return penalty_value(X, alpha), penalty_gradient(X, alpha)

    return fn


def isl0(X) -> float:
    """Lag-zero integrated sidelobe level in dB, clamped below at -350 dB."""
    X = np.asarray(X, dtype=complex)
    N, M = X.shape
    num = np.linalg.norm(_gram_residual(X))
    if num == 0.0:
        return ISL_CLAMP_DB
    return max(20.0 * math.log10(num / math.sqrt(M * N * N)), ISL_CLAMP_DB)


def lfm_set(M: int, N: int) -> np.ndarray:
    """Chirp ``exp(j pi n^2 / N)`` shifted to ``M`` distinct DFT offsets; columns are exactly orthogonal."""
    if M > N:
        raise ValueError(f"need M <= N for distinct frequency offsets, got M={M}, N={N}")
    n = np.arange(N)[:, None]
    m = np.arange(M)[None, :]
    # reduce the exponents mod 2N before scaling so the phases stay exact
    chirp = np.exp(1j * np.pi * ((n * n) % (2 * N)) / N)
    return chirp * np.exp(2j * np.pi * ((m * n) % N) / N)


# ---------------------------------------------------------------- mismatch


@dataclass(frozen=True)
class MismatchSetup:
    """Narrowband transmit/receive geometry at the carrier.

    Spacings default to half a wavelength at the top of a 200 MHz band
    around ``f_c``; ``M_R=None`` means ``M_R = M``.
    """

    M: int = 10
    M_R: Optional[int] = None
    theta_steer: float = 125.0
    theta_true: float = 125.0
    f_c: float = 1e9
    tx_spacing: Optional[float] = None
    rx_spacing: Optional[float] = None
    c: float = C_LIGHT

    def __post_init__(self):
        if self.M < 1 or (self.M_R is not None and self.M_R < 1):
            raise ValueError("antenna counts must be at least 1")
        for name in ("theta_steer", "theta_true"):
            if not 0.0 <= getattr(self, name) <= 180.0:
                raise ValueError(f"{name} must lie in [0, 180] degrees")
        if self.M_R is None:
            object.__setattr__(self, "M_R", self.M)
        if self.tx_spacing is None:
            object.__setattr__(self, "tx_spacing", self.c / (2.0 * (self.f_c + 100e6)))
        if self.rx_spacing is None:
            object.__setattr__(self, "rx_spacing", self.tx_spacing)
        if self.tx_spacing <= 0 or self.rx_spacing <= 0:
            raise ValueError("spacings must be positive")

    @classmethod
    def from_radar(cls, cfg: RadarConfig, **kw) -> "MismatchSetup":
        return cls(M=cfg.M, f_c=cfg.f_c, tx_spacing=cfg.d, c=cfg.c, **kw)

    @property
    def delta(self) -> float:
        return self.theta_steer - self.theta_true


def _ula(count: int, spacing: float, f: float, c: float, theta_deg) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    m = np.arange(count)[None, :]
    return np.exp(-2j * np.pi * f * m * spacing * np.cos(np.deg2rad(theta))[:, None] / c)


def tx_steering(setup: MismatchSetup, theta_deg) -> np.ndarray:
    """Transmit steering vectors, shape ``(len(theta), M)``."""
    return _ula(setup.M, setup.tx_spacing, setup.f_c, setup.c, theta_deg)


def rx_steering(setup: MismatchSetup, theta_deg) -> np.ndarray:
    return _ula(setup.M_R, setup.rx_spacing, setup.f_c, setup.c, theta_deg)


def correlation_matrix(X, setup: MismatchSetup) -> np.ndarray:
    """``R_s = (X^T . a_T(theta_steer)) (X^T . a_T(theta_steer))^H`` (rows weighted by steering)."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[1] != setup.M:
        raise DimensionMismatch(f"X must be N x {setup.M}")
    W = X.T * tx_steering(setup, setup.theta_steer)[0][:, None]
    R = W @ W.conj().T
    return 0.5 * (R + R.conj().T)


def coherent_set(setup: MismatchSetup, N: int, s=None) -> np.ndarray:
    """Every antenna sends ``s`` phase-aligned for the steered direction, so ``R_s = N * ones``."""
    s = np.ones(N, dtype=complex) if s is None else np.asarray(s, dtype=complex)
    return s[:, None] * tx_steering(setup, setup.theta_steer)[0].conj()[None, :]


def _frame(setup: MismatchSetup, theta_deg) -> np.ndarray:
    # steering expressed relative to the steered direction, matching the weighting in R_s
    return tx_steering(setup, theta_deg) * tx_steering(setup, setup.theta_steer)[0].conj()[None, :]


def g_tr(setup: MismatchSetup, R_s, N: int, theta_deg) -> np.ndarray:
    """Transmit/receive pattern with the target at ``theta_true`` and the receiver steered to each ``theta``.

    ``G(theta) = N |a_R^H(theta) a_R(theta0) a_T^H(theta0) R^T a_T(theta)|^2
    / (M_R a_T^H(theta) R^T a_T(theta))`` with ``theta0 = theta_true``.
    """
    R = np.asarray(R_s, dtype=complex)
    if R.shape != (setup.M, setup.M):
        raise DimensionMismatch(f"R_s must be {setup.M} x {setup.M}")
    aT = _frame(setup, theta_deg)
    aT0 = _frame(setup, setup.theta_true)[0]
    aR = rx_steering(setup, theta_deg)
    aR0 = rx_steering(setup, setup.theta_true)[0]
    RT_aT = aT @ R  # row k holds (R^T a_T(theta_k))^T
    num = np.abs((aR.conj() @ aR0) * (RT_aT @ aT0.conj())) ** 2
    den = np.einsum("km,km->k", aT.conj(), RT_aT).real
    if np.any(den <= 1e-13 * abs(np.trace(R)) * setup.M):
        raise DegenerateDenominator("transmit quadratic form vanishes at a grid angle")
    return N * num / (setup.M_R * den)


def g_tr_orthogonal(setup: MismatchSetup, N: int, theta_deg) -> np.ndarray:
    """Closed form for ``R_s = I``: ``N |a_R^H(theta) a_R(theta0)|^2 |a_T^H(theta0) a_T(theta)|^2 / (M_R M)``."""
    aT = tx_steering(setup, theta_deg)
    aT0 = tx_steering(setup, setup.theta_true)[0]
    aR = rx_steering(setup, theta_deg)
    aR0 = rx_steering(setup, setup.theta_true)[0]
    return N * np.abs(aR.conj() @ aR0) ** 2 * np.abs(aT @ aT0.conj()) ** 2 / (setup.M_R * setup.M)


def g_tr_coherent(setup: MismatchSetup, N: int, theta_deg) -> np.ndarray:
    """Closed form for ``R_s = ones``: ``N |a_R^H(theta) a_R(theta0)|^2 |a~_T^H(theta0) 1|^2 / M_R``."""
    aR = rx_steering(setup, theta_deg)
    aR0 = rx_steering(setup, setup.theta_true)[0]
    tx = abs(np.sum(_frame(setup, setup.theta_true)[0])) ** 2
    return N * np.abs(aR.conj() @ aR0) ** 2 * tx / setup.M_R * np.ones(aR.shape[0])


def fine_grid() -> np.ndarray:
    return np.linspace(0.0, 180.0, 1801)


def peak_loss_db(matched: np.ndarray, mismatched: np.ndarray) -> float:
    """``10 log10(max matched / max mismatched)``."""
    return 10.0 * math.log10(float(np.max(matched)) / float(np.max(mismatched)))


def mismatch_curves(setup: MismatchSetup, X, deltas, theta_grid=None) -> tuple[dict, dict]:
    """``G_TR`` curves and peak losses for each ``delta = theta_steer - theta_true``.

    The matched reference uses ``delta = 0``.
    """
    theta = fine_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    X = np.asarray(X, dtype=complex)
    N = X.shape[0]

    def curve(delta):
        st = MismatchSetup(
            M=setup.M, M_R=setup.M_R, theta_steer=setup.theta_steer, theta_true=setup.theta_steer - delta,
            f_c=setup.f_c, tx_spacing=setup.tx_spacing, rx_spacing=setup.rx_spacing, c=setup.c,
        )
        return g_tr(st, correlation_matrix(X, st), N, theta)

    ref = curve(0.0)
    curves, losses = {}, {}
    for delta in deltas:
        curves[float(delta)] = ref if delta == 0 else curve(float(delta))
        losses[float(delta)] = 0.0 if delta == 0 else peak_loss_db(ref, curves[float(delta)])
    return curves, losses


def closed_form_peak_loss(setup: MismatchSetup, mode: str, delta: float) -> float:
    """Peak loss from the closed forms: 0 for orthogonal sets, ``M^2 / |a~^H(theta0) 1|^2`` for coherent."""
    if mode in ("lfm", "orthogonal"):
        return 0.0
    if mode != "coherent":
        raise ValueError(f"unknown mode {mode!r}")
    st = MismatchSetup(
        M=setup.M, M_R=setup.M_R, theta_steer=setup.theta_steer, theta_true=setup.theta_steer - delta,
        f_c=setup.f_c, tx_spacing=setup.tx_spacing, rx_spacing=setup.rx_spacing, c=setup.c,
    )
    s = abs(np.sum(_frame(st, st.theta_true)[0])) ** 2
    return 10.0 * math.log10(setup.M**2 / s)
