"""Wideband transmit beampattern model and the alternating design loop.

Layout conventions
------------------
* A waveform code ``x`` has length ``L = M * N`` and is stacked antenna-major:
  ``x[m * N + n]`` is sample ``n`` of antenna ``m``.
* Frequency bins are ``p = -N/2, ..., N/2 - 1``; bin ``p`` sits at
  ``f_c + p / (N * T_s)``.  Arrays over bins are indexed by ``p + N/2``.
* Pattern grids are ``(S, N)``: angle along rows, bin along columns.

Desired amplitudes are expressed relative to ``RadarConfig.gain`` (default
``N``, the coherent DFT gain of a unit-modulus tone), so a level of 1 is what
a full-power constant-modulus code can reach.  The quadratic cost is built
against ``gain * d`` and deviations are reported as
``sum (d - |a^H y_p| / gain)^2``.  With ``gain=1`` every formula is the raw one.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import DimensionMismatch, SolverError
from .manifold import is_feasible
from .solver import (
    Penalty,
    QuadraticCost,
    SolverParams,
    SolveTrace,
    Termination,
    cost_value,
    pdr_solve,
)

C_LIGHT = 299_792_458.0
DB_FLOOR = -100.0


def default_theta_grid(S: int = 180) -> np.ndarray:
    """Bin centres of ``S`` equal sub-intervals of [0, 180] degrees."""
    return (np.arange(S) + 0.5) * (180.0 / S)


@dataclass(frozen=True, eq=False)
class RadarConfig:
    """Uniform linear array and sampling geometry.

    ``d=None`` gives half a wavelength at the top of the band,
    ``c / (2 (f_c + B/2))``.  ``gain=None`` means ``N``.
    """

    M: int = 10
    N: int = 32
    f_c: float = 1e9
    B: float = 200e6
    d: Optional[float] = None
    c: float = C_LIGHT
    theta_grid: Optional[np.ndarray] = None
    gain: Optional[float] = None

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be a positive even integer")
        if self.B <= 0 or self.c <= 0:
            raise ValueError("B and c must be positive")
        if self.d is None:
            object.__setattr__(self, "d", self.c / (2.0 * (self.f_c + self.B / 2.0)))
        if self.d <= 0:
            raise ValueError("d must be positive")
        grid = default_theta_grid() if self.theta_grid is None else np.asarray(self.theta_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("theta_grid must be a non-empty 1-D sequence")
        if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > 180:
            raise ValueError("theta_grid must be strictly increasing within [0, 180]")
        grid.setflags(write=False)
        object.__setattr__(self, "theta_grid", grid)
        if self.gain is None:
            object.__setattr__(self, "gain", float(self.N))
        if self.gain <= 0:
            raise ValueError("gain must be positive")

    @property
    def T_s(self) -> float:
        return 1.0 / self.B

    @property
    def L(self) -> int:
        return self.M * self.N

    @property
    def S(self) -> int:
        return self.theta_grid.size

    @property
    def bins(self) -> np.ndarray:
        return np.arange(-self.N // 2, self.N // 2)

    @property
    def bin_freqs(self) -> np.ndarray:
        return self.bins / (self.N * self.T_s) + self.f_c

    @cached_property
    def steering(self) -> np.ndarray:
        """All steering vectors, shape ``(N, S, M)`` indexed ``[p, s, m]``."""
        return steering_vectors(self, self.theta_grid)

    @cached_property
    def dft(self) -> np.ndarray:
        """DFT rows for every bin, shape ``(N, N)`` indexed ``[p, n]``."""
        return dft_matrix(self.N)


def _check_bin(N: int, p: int) -> None:
    if not -N // 2 <= p <= N // 2 - 1:
        raise ValueError(f"bin {p} outside [{-N // 2}, {N // 2 - 1}]")


def steering_vectors(cfg: RadarConfig, theta_deg) -> np.ndarray:
    """Steering vectors for every bin at the given angles, shape ``(N, len(theta), M)``."""
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    delay = np.arange(cfg.M)[None, :] * cfg.d * np.cos(np.deg2rad(theta))[:, None] / cfg.c
    return np.exp(2j * np.pi * cfg.bin_freqs[:, None, None] * delay[None, :, :])


def steering_vector(cfg: RadarConfig, theta_deg: float, p: int) -> np.ndarray:
    """Steering vector at angle ``theta_deg`` and bin ``p``; element 0 is exactly 1."""
    _check_bin(cfg.N, p)
    f = p / (cfg.N * cfg.T_s) + cfg.f_c
    delay = np.arange(cfg.M) * cfg.d * math.cos(math.radians(theta_deg)) / cfg.c
    return np.exp(2j * np.pi * f * delay)


def dft_row(N: int, p: int) -> np.ndarray:
    """``exp(-j 2 pi n p / N)`` for ``n = 0..N-1``."""
    _check_bin(N, p)
    return np.exp(-2j * np.pi * np.arange(N) * p / N)


def dft_matrix(N: int) -> np.ndarray:
    p = np.arange(-N // 2, N // 2)
    return np.exp(-2j * np.pi * np.outer(p, np.arange(N)) / N)


def _code_matrix(cfg: RadarConfig, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (cfg.L,):
        raise DimensionMismatch(f"code must have length M*N={cfg.L}, got shape {x.shape}")
    return x.reshape(cfg.M, cfg.N)


def spectrum_at(cfg: RadarConfig, x, p: int) -> np.ndarray:
    """Per-antenna DFT value at bin ``p``, length ``M``."""
    return _code_matrix(cfg, x) @ dft_row(cfg.N, p)


def spectra(cfg: RadarConfig, x) -> np.ndarray:
    """Per-antenna DFT at every bin, shape ``(N, M)`` indexed ``[p, m]``."""
    return (_code_matrix(cfg, x) @ cfg.dft.T).T


def beam_response(cfg: RadarConfig, x) -> np.ndarray:
    """Complex array response ``a_sp^H y_p`` on the grid, shape ``(S, N)``."""
    y = spectra(cfg, x)
    return np.einsum("psm,pm->sp", cfg.steering.conj(), y)


def evaluate_pattern(cfg: RadarConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """Beampattern ``|a_sp^H y_p|^2`` and its dB grid relative to ``gain^2``.

    The dB grid is floored at -100 dB.
    """
    power = np.abs(beam_response(cfg, x)) ** 2
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(power / cfg.gain**2)
    return power, np.maximum(db, DB_FLOOR)


# ---------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class Region:
    """Rectangle in (angle, frequency) with a constant desired amplitude.

    Angles are matched inclusively; frequencies by half-open containment
    ``f_lo <= f < f_hi`` of the bin centre.
    """

    theta_deg: tuple
    f_hz: tuple
    amplitude: float


@dataclass(frozen=True)
class Scenario:
    name: str
    regions: tuple = ()
    default_amplitude: float = 0.0

    def __post_init__(self):
        for reg in self.regions:
            lo, hi = reg.theta_deg
            if not 0.0 <= lo <= hi <= 180.0:
                raise ValueError(f"{self.name}: angle interval {reg.theta_deg} outside [0, 180]")
            if reg.f_hz[0] > reg.f_hz[1]:
                raise ValueError(f"{self.name}: empty frequency interval {reg.f_hz}")
            if reg.amplitude < 0:
                raise ValueError(f"{self.name}: negative amplitude")
        if self.default_amplitude < 0:
            raise ValueError(f"{self.name}: negative default amplitude")


@dataclass
class DesiredPattern:
    """Desired amplitudes ``d_sp`` (relative to ``gain``) and auxiliary phases, both ``(S, N)``."""

    amplitudes: np.ndarray
    phases: np.ndarray = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.phases is None:
            self.phases = np.zeros_like(self.amplitudes)
        self.phases = np.asarray(self.phases, dtype=float)
        if self.amplitudes.ndim != 2 or self.phases.shape != self.amplitudes.shape:
            raise DimensionMismatch("amplitudes and phases must be equal-shape 2-D grids")
        if not np.all(np.isfinite(self.amplitudes)) or np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be finite and non-negative")


def scenario_cases(f_c: float = 1e9, B: float = 200e6) -> dict:
    """The three desired-pattern cases used in the experiments."""
    band = (f_c - B / 2.0, f_c + B / 2.0 + 1.0)  # +1 Hz keeps the top edge inside a half-open test
    full = (0.0, 180.0)
    case1 = Scenario("case1", (Region((95.0, 145.0), band, 1.0),), default_amplitude=0.0)
    case2 = Scenario(
        "case2",
        (
            Region((10.0, 80.0), (f_c - B / 2.0, f_c), 0.0),
            Region((95.0, 145.0), (f_c, f_c + B / 2.0 + 1.0), 0.0),
        ),
        default_amplitude=1.0,
    )
    case3 = Scenario(
        "case3",
        (
            Region((40.0, 80.0), (943.75e6, 981.25e6), 0.0),
            Region((120.0, 160.0), (962.5e6, 1000e6), 0.0),
            # restricted transmit band, suppressed at every angle
            Region(full, (1.025e9, 1.0625e9), 0.0),
        ),
        default_amplitude=1.0,
    )
    return {"case1": case1, "case2": case2, "case3": case3}


def desired_pattern(cfg: RadarConfig, scenario: Scenario) -> DesiredPattern:
    """Rasterise a scenario onto the angle/bin grid (later regions override earlier ones)."""
    amp = np.full((cfg.S, cfg.N), float(scenario.default_amplitude))
    theta = cfg.theta_grid
    freqs = cfg.bin_freqs
    for reg in scenario.regions:
        rows = (theta >= reg.theta_deg[0]) & (theta <= reg.theta_deg[1])
        cols = (freqs >= reg.f_hz[0]) & (freqs < reg.f_hz[1])
        amp[np.ix_(rows, cols)] = reg.amplitude
    return DesiredPattern(amp)


def _as_pattern(cfg: RadarConfig, target: Union[Scenario, DesiredPattern]) -> DesiredPattern:
    pat = desired_pattern(cfg, target) if isinstance(target, Scenario) else target
    if pat.amplitudes.shape != (cfg.S, cfg.N):
        raise DimensionMismatch(f"pattern grid {pat.amplitudes.shape} does not match (S, N)=({cfg.S}, {cfg.N})")
    return pat


# ------------------------------------------------------------ cost assembly


def quadratic_matrix(cfg: RadarConfig) -> np.ndarray:
    """``P = sum_p (A_p F_p)^H (A_p F_p)``, an ``(L, L)`` Hermitian PSD matrix."""
    a = cfg.steering  # [p, s, m]
    E = cfg.dft  # [p, n]
    K = np.einsum("psa,psb->pab", a, a.conj())  # sum over angles of a a^H
    T = E.conj()[:, :, None] * E[:, None, :]  # [p, n, k]
    M, N = cfg.M, cfg.N
    P4 = (K.reshape(N, M * M).T @ T.reshape(N, N * N)).reshape(M, M, N, N)
    P = P4.transpose(0, 2, 1, 3).reshape(cfg.L, cfg.L)
    # exact Hermitian symmetry, removes rounding asymmetry
    return 0.5 * (P + P.conj().T)


def linear_term(cfg: RadarConfig, pattern: DesiredPattern) -> tuple[np.ndarray, float]:
    """``q = sum_p (A_p F_p)^H d_p`` and ``r = sum |d_sp|^2`` with ``d_sp = gain * amp * e^{j phase}``."""
    pat = _as_pattern(cfg, pattern)
    t = cfg.gain * pat.amplitudes * np.exp(1j * pat.phases)  # [s, p]
    u = np.einsum("psm,sp->pm", cfg.steering, t)
    q = (u.T @ cfg.dft.conj()).reshape(cfg.L)
    r = float(np.sum((cfg.gain * pat.amplitudes) ** 2))
    return q, r


def assemble_quadratic(cfg: RadarConfig, pattern: DesiredPattern, P: Optional[np.ndarray] = None) -> QuadraticCost:
    """Quadratic form of the phase-lifted cost ``sum |d_sp e^{j phi_sp} - a_sp^H y_p|^2``."""
    if P is None:
        P = quadratic_matrix(cfg)
    q, r = linear_term(cfg, pattern)
    return QuadraticCost(P, q, r, check=False)


def update_phases(cfg: RadarConfig, pattern: DesiredPattern, x) -> DesiredPattern:
    """Set every auxiliary phase to ``arg(a_sp^H y_p)`` (``arg 0 = 0``)."""
    pat = _as_pattern(cfg, pattern)
    return DesiredPattern(pat.amplitudes, np.angle(beam_response(cfg, x)))


def deviation(cfg: RadarConfig, target: Union[Scenario, DesiredPattern], x) -> float:
    """Amplitude deviation ``sum (d_sp - |a_sp^H y_p| / gain)^2`` (phases ignored)."""
    pat = _as_pattern(cfg, target)
    return float(np.sum((pat.amplitudes - np.abs(beam_response(cfg, x)) / cfg.gain) ** 2))


def to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


def deviation_db(cfg: RadarConfig, target: Union[Scenario, DesiredPattern], x) -> float:
    """``10 log10`` of :func:`deviation`; ``-inf`` for an exact match."""
    return to_db(deviation(cfg, target, x))


# ------------------------------------------------------------ design loops


@dataclass
class OuterRecord:
    index: int
    deviation_db: float
    inner_iterations: int
    termination: Termination
    step_norm: float
    cost: float


@dataclass
class DesignResult:
    x: np.ndarray
    outer: list = field(default_factory=list)
    inner: list = field(default_factory=list)  # one SolveTrace per outer pass
    wall_time_s: float = 0.0

    @property
    def total_iterations(self) -> int:
        return sum(t.iterations_run for t in self.inner)

    @property
    def deviation_db(self) -> float:
        return self.outer[-1].deviation_db if self.outer else math.nan


def design_beampattern(
    cfg: RadarConfig,
    target: Union[Scenario, DesiredPattern],
    params: SolverParams,
    x0,
    zeta: Optional[float] = None,
    outer_max: int = 50,
    penalty: Optional[Penalty] = None,
    P: Optional[np.ndarray] = None,
) -> DesignResult:
    """Alternate phase updates and PDR solves (warm-started) until the code settles.

    Stops when ``||x^(m) - x^(m-1)|| < zeta`` (default ``1e-3 sqrt(L)``) or
    after ``outer_max`` passes.  ``penalty`` adds a term to the inner
    objective; monotonicity is then never asserted.
    """
    start = time.perf_counter()
    if not is_feasible(x0):
        raise ValueError("x0 must be unit-modulus")
    if outer_max < 1:
        raise ValueError("outer_max must be at least 1")
    zeta = 1e-3 * math.sqrt(cfg.L) if zeta is None else zeta
    pat = _as_pattern(cfg, target)
    base = assemble_quadratic(cfg, pat, P)
    inner_params = params
    if penalty is not None and params.assert_monotone is not False:
        inner_params = replace(params, assert_monotone=False)
    result = DesignResult(x=np.asarray(x0, dtype=complex))
    x = result.x
    for m in range(1, outer_max + 1):
        pat = update_phases(cfg, pat, x)
        q, r = linear_term(cfg, pat)
        cost = base.with_linear_term(q, r)
        x_new, trace = pdr_solve(cost, x, inner_params, penalty=penalty)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        result.inner.append(trace)
        result.outer.append(
            OuterRecord(m, deviation_db(cfg, pat, x), trace.iterations_run, trace.termination, step, trace.costs[-1])
        )
        if step < zeta:
            break
    result.x = x
    result.wall_time_s = time.perf_counter() - start
    return result


def unconstrained_baseline(
    cfg: RadarConfig,
    target: Union[Scenario, DesiredPattern],
    outer_iters: int = 200,
    x0=None,
    seed: int = 0,
    cg_maxiter: int = 2000,
    P: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """Relaxed design without the modulus constraint.

    Alternates the phase update with a conjugate-gradient solve of
    ``(P + delta I) x = q``, ``delta = 1e-9 trace(P) / L``, warm-started from
    the previous code.  Returns the code and its deviation in dB.
    """
    pat = _as_pattern(cfg, target)
    if not np.any(pat.amplitudes):
        x = np.zeros(cfg.L, dtype=complex)
        return x, deviation_db(cfg, pat, x)
    P = quadratic_matrix(cfg) if P is None else P
    delta = 1e-9 * np.trace(P).real / cfg.L
    A = LinearOperator(P.shape, matvec=lambda v: P @ v + delta * v, dtype=complex)
    if x0 is None:
        x0 = np.exp(1j * np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, cfg.L))
    x = np.asarray(x0, dtype=complex)
    for _ in range(outer_iters):
        pat = update_phases(cfg, pat, x)
        q, _ = linear_term(cfg, pat)
        x, info = cg(A, q, x0=x, rtol=1e-10, atol=0.0, maxiter=cg_maxiter)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
    return x, deviation_db(cfg, pat, x)
