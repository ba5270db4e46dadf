"""Sampled waveforms, rate functions, gain statistics, and receiver constants.

Conventions used throughout the library:

* Time is discretized on a uniform grid over [0, T] with n samples placed at
  midpoints t_i = (i + 1/2) * dt, dt = T / n.
* All integrals are midpoint-rule quadratures, dt * sum(values): second-order
  accurate and exactly consistent with the sample convention.
* A rate function stores the *total* arrival rate (signal plus dark current)
  in photo-electrons per second; the dark component is recorded separately so
  estimation code can split signal from background.
* The avalanche gain g of each photo-electron is either deterministic (g = 1,
  the PIN-diode case) or geometrically distributed on {1, 2, ...} with
  P(g) = (exp(zeta) - 1) * exp(-zeta * g); the deterministic case is the
  zeta -> inf limit.
* The single-electron current pulse is idealized as q_e * delta(t); thermal
  noise is white and Gaussian with two-sided spectral density N0 / 2.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Reduced Planck constant, J*s (CODATA 2018).
HBAR = 1.054571817e-34


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid on [0, T] with n samples."""

    T: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"grid horizon T must be positive and finite, got {self.T}")
        if not isinstance(self.n, int) or self.n < 16:
            raise DomainError(f"grid needs an integer sample count n >= 16, got {self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    def times(self) -> np.ndarray:
        """Midpoint sample times t_i = (i + 1/2) * dt."""
        return (np.arange(self.n) + 0.5) * self.dt


@dataclass(frozen=True, eq=False)
class SampledWaveform:
    """Real-valued function sampled on a Grid (units depend on context)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != (self.grid.n,):
            raise DomainError(
                f"waveform needs {self.grid.n} samples, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise DomainError("waveform samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def integral(self) -> float:
        """Midpoint quadrature of the waveform over [0, T]."""
        return float(self.grid.dt * self.values.sum())

    def power(self) -> float:
        """Mean square value (1/T) * integral of w^2."""
        return float(self.grid.dt * (self.values @ self.values) / self.grid.T)


def same_grid(a: SampledWaveform, b: SampledWaveform) -> None:
    if a.grid != b.grid:
        raise DomainError("waveforms live on different grids")


@dataclass(frozen=True)
class GainModel:
    """Avalanche gain law: deterministic unit gain or geometric with zeta > 0."""

    zeta: float | None = None

    def __post_init__(self):
        if self.zeta is not None and not (math.isfinite(self.zeta) and self.zeta > 0):
            raise DomainError(f"geometric gain needs zeta > 0, got {self.zeta}")

    @classmethod
    def deterministic(cls) -> "GainModel":
        return cls(None)

    @classmethod
    def geometric(cls, zeta: float) -> "GainModel":
        return cls(float(zeta))

    @property
    def is_deterministic(self) -> bool:
        return self.zeta is None


def gain_moments(gain: GainModel) -> tuple[float, float]:
    """First and second moments (E{g}, E{g^2}) of the avalanche gain.

    Deterministic gain gives (1, 1).  For the geometric law with q = exp(-zeta)
    the mean is 1/(1-q) and the second moment (1+q)/(1-q)^2; both decrease
    monotonically to 1 as zeta grows.
    """
    if gain.is_deterministic:
        return 1.0, 1.0
    q = math.exp(-gain.zeta)
    mean = 1.0 / (1.0 - q)
    second = (1.0 + q) / (1.0 - q) ** 2
    return mean, second


@dataclass(frozen=True, eq=False)
class RateFunction:
    """Total arrival rate on a grid, with the dark component recorded."""

    waveform: SampledWaveform
    dark_rate: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dark_rate) and self.dark_rate >= 0):
            raise DomainError(f"dark rate must be >= 0, got {self.dark_rate}")
        if np.any(self.waveform.values < 0):
            raise DomainError("rate samples must be non-negative")

    @property
    def grid(self) -> Grid:
        return self.waveform.grid

    @property
    def values(self) -> np.ndarray:
        return self.waveform.values

    @property
    def total(self) -> float:
        """Expected arrival count Lambda = integral of the rate over [0, T]."""
        return self.waveform.integral()

    def signal_values(self) -> np.ndarray:
        """Rate samples with the dark component removed (clipped at zero)."""
        sig = self.values - self.dark_rate
        floor = -1e-9 * max(float(self.values.max()), 1.0)
        if np.any(sig < floor):
            raise DomainError("rate drops below its own dark level")
        return np.maximum(sig, 0.0)


@dataclass(frozen=True)
class ReceiverConfig:
    """Physical constants of the receiver and the correlator power budget.

    N0 is twice the two-sided thermal spectral density (the noise n(t) has
    spectral density N0/2), q_e the electron charge, P the power budget
    (1/T) * integral w^2 <= P, and T the observation horizon in seconds.
    In normalized-unit scenarios q_e = 1 and N0 carries the ratio N0/q_e^2.
    """

    N0: float
    q_e: float
    P: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.N0) and self.N0 >= 0):
            raise DomainError(f"N0 must be >= 0, got {self.N0}")
        for name in ("q_e", "P", "T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")


def check_horizon(grid: Grid, cfg: ReceiverConfig) -> None:
    """Reject mismatched grid/receiver horizons early."""
    if abs(grid.T - cfg.T) > 1e-12 * max(grid.T, cfg.T):
        raise DomainError(f"grid horizon {grid.T} differs from receiver horizon {cfg.T}")


# ----------------------------------------------------------------------
# rate constructors
# ----------------------------------------------------------------------

def rate_from_physical(optical_power: SampledWaveform, eta: float, omega: float,
                       dark_rate: float = 0.0) -> RateFunction:
    """Arrival rate eta * P(t) / (hbar * omega) + dark_rate from optical power.

    eta is the detector quantum efficiency in (0, 1], omega the optical
    angular frequency in rad/s, P(t) the instantaneous power in watts.
    """
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"quantum efficiency must be in (0, 1], got {eta}")
    if not (math.isfinite(omega) and omega > 0):
        raise DomainError(f"optical angular frequency must be positive, got {omega}")
    if np.any(optical_power.values < 0):
        raise DomainError("optical power samples must be non-negative")
    lam = eta * optical_power.values / (HBAR * omega) + dark_rate
    return RateFunction(SampledWaveform(optical_power.grid, lam), dark_rate)


def two_level_rate(lambda1: float, lambda2: float, grid: Grid,
                   dark_rate: float = 0.0) -> RateFunction:
    """Rate lambda1 on [0, T/2) and lambda2 on [T/2, T), plus dark_rate."""
    for name, lam in (("lambda1", lambda1), ("lambda2", lambda2)):
        if not (math.isfinite(lam) and lam >= 0):
            raise DomainError(f"{name} must be >= 0, got {lam}")
    vals = np.where(grid.times() < grid.T / 2, lambda1, lambda2) + dark_rate
    return RateFunction(SampledWaveform(grid, vals), dark_rate)


def raised_cosine_rate(amplitude: float, grid: Grid, start: float = 0.0,
                       width: float | None = None, dark_rate: float = 0.0) -> RateFunction:
    """Rate a * (1 - cos(2*pi*(t-start)/width)) on [start, start+width], else 0.

    Peak value 2*a, zero value and slope at both pulse edges; the default
    width = T spans the whole horizon.  Mean arrival count is
    amplitude * width (+ dark), since the raised cosine averages to a.
    """
    if not (math.isfinite(amplitude) and amplitude >= 0):
        raise DomainError(f"amplitude must be >= 0, got {amplitude}")
    if width is None:
        width = grid.T - start
    if width <= 0 or start < 0 or start + width > grid.T * (1 + 1e-12):
        raise DomainError("pulse [start, start+width] must lie inside [0, T]")
    t = grid.times()
    inside = (t >= start) & (t <= start + width)
    vals = np.where(inside, amplitude * (1.0 - np.cos(2 * np.pi * (t - start) / width)), 0.0)
    vals = vals + dark_rate
    return RateFunction(SampledWaveform(grid, vals), dark_rate)


def tabulated_rate(samples, grid: Grid, dark_rate: float = 0.0) -> RateFunction:
    """Rate from explicit per-bin samples of the total rate (incl. dark)."""
    return RateFunction(SampledWaveform(grid, np.asarray(samples, dtype=float)), dark_rate)


# ----------------------------------------------------------------------
# waveform algebra
# ----------------------------------------------------------------------

def normalize_power(w: SampledWaveform, P: float, T: float) -> SampledWaveform:
    """Scale w so that integral of w^2 equals P*T exactly (midpoint quadrature).

    Idempotent and scale-equivariant: normalize(c*w) == normalize(w) for c > 0.
    """
    if not (math.isfinite(P) and P > 0):
        raise DomainError(f"power budget must be positive, got {P}")
    if abs(T - w.grid.T) > 1e-12 * max(T, w.grid.T):
        raise DomainError(f"horizon {T} differs from waveform grid horizon {w.grid.T}")
    energy = w.grid.dt * float(w.values @ w.values)
    if energy <= 0.0:
        raise DomainError("cannot power-normalize an identically zero waveform")
    alpha = math.sqrt(P * T / energy)
    return SampledWaveform(w.grid, alpha * w.values)


def first_derivative(w: SampledWaveform) -> SampledWaveform:
    """Central-difference derivative, second-order one-sided at the ends."""
    v = w.values
    dt = w.grid.dt
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * dt)
    out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dt)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dt)
    return SampledWaveform(w.grid, out)


def second_derivative(w: SampledWaveform) -> SampledWaveform:
    """Three-point second difference, second-order one-sided at the ends."""
    v = w.values
    dt2 = w.grid.dt ** 2
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dt2
    out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / dt2
    out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / dt2
    return SampledWaveform(w.grid, out)


def pearson_correlation(a: SampledWaveform, b: SampledWaveform,
                        mask: np.ndarray | None = None) -> float:
    """Pearson correlation of two waveforms, optionally restricted by a mask."""
    same_grid(a, b)
    x, y = a.values, b.values
    if mask is not None:
        x, y = x[mask], y[mask]
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DomainError("correlation undefined for constant or empty samples")
    return float(np.corrcoef(x, y)[0, 1])
