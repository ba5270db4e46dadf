"""Independent stochastic simulator of the Poisson + gain + Gaussian model.

Validates the analytic exponents and the delay-MSE predictions by simulating
the physical model directly:

    y(t) = sum_k g_k * q_e * delta(t - t_k) + n(t)

with K ~ Poisson(Lambda), arrival times i.i.d. with density lam(t)/Lambda,
gains deterministic or geometric, and white Gaussian noise of spectral density
N0/2 (discrete variance N0/(2*dt) per bin).  Only the type layer is shared
with the analytic modules; none of their formulas are reused here.

Determinism: every trial owns a counter-based Philox stream keyed by
(seed, trial index), and per-trial results are stored by index before
aggregation, so reports are bitwise identical for any worker count and any
execution order.  Antithetic pairing (odd trials replay the even twin with
negated thermal noise) and Poisson-count stratification are optional variance
reduction switches; both preserve determinism.

Impulses are deposited into their containing bin (error O(dt) in the
correlator output, acceptable for smooth templates).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.signal
import scipy.stats

from .errors import DomainError
from .signal_model import (
    GainModel,
    Grid,
    RateFunction,
    ReceiverConfig,
    SampledWaveform,
    check_horizon,
    same_grid,
)

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    """Trial count, base seed, simulation grid, and variance-reduction flags."""

    trials: int
    seed: int
    grid: Grid
    antithetic: bool = False
    stratified: bool = False

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials}")
        if not isinstance(self.seed, int):
            raise DomainError(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class MonteCarloReport:
    """Aggregated trial outcome: rate-style or MSE-style fields are populated."""

    trials: int
    half_width: float
    error_count: int | None = None
    empirical_rate: float | None = None
    squared_error_sum: float | None = None
    empirical_mse: float | None = None
    anomaly_fraction: float | None = None
    mean_error: float | None = None

    def __post_init__(self):
        if self.half_width < 0:
            raise DomainError("half_width must be >= 0")
        if self.empirical_rate is not None and not (0.0 <= self.empirical_rate <= 1.0):
            raise DomainError("empirical_rate must lie in [0, 1]")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of all the others."""
    key = np.array([seed % (1 << 64), trial % (1 << 64)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """(empirical rate, Wilson score half-width) at confidence level z."""
    phat = errors / trials
    denom = 1.0 + z * z / trials
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return phat, half


# ----------------------------------------------------------------------
# elementary samplers
# ----------------------------------------------------------------------

def sample_arrivals(rate: RateFunction, rng: np.random.Generator,
                    count: int | None = None) -> np.ndarray:
    """Arrival times of one realization of the inhomogeneous Poisson process.

    Draws K ~ Poisson(Lambda) (or uses ``count`` when stratification supplies
    it) and then K i.i.d. times by inverse CDF on the piecewise-constant bin
    density lam(t_i).  Returns an unordered array; empty when Lambda = 0.
    """
    lam = rate.values
    total = rate.total
    if total <= 0.0:
        return np.empty(0)
    k = int(rng.poisson(total)) if count is None else int(count)
    if k <= 0:
        return np.empty(0)
    masses = np.cumsum(lam)
    cdf = np.concatenate(([0.0], masses / masses[-1]))
    u = rng.random(k)
    idx = np.searchsorted(cdf, u, side="right") - 1
    idx = np.clip(idx, 0, rate.grid.n - 1)
    width = cdf[idx + 1] - cdf[idx]
    frac = np.where(width > 0, (u - cdf[idx]) / np.where(width > 0, width, 1.0), 0.0)
    return (idx + frac) * rate.grid.dt


def sample_gains(rng: np.random.Generator, count: int, gain: GainModel) -> np.ndarray:
    """Avalanche gains for ``count`` arrivals (inverse-CDF geometric sampler)."""
    if count == 0:
        return np.empty(0)
    if gain.is_deterministic:
        return np.ones(count)
    u = rng.random(count)
    g = np.ceil(-np.log1p(-u) / gain.zeta)
    return np.maximum(g, 1.0)


def synthesize_signal(arrivals: np.ndarray, gain: GainModel, cfg: ReceiverConfig,
                      grid: Grid, rng: np.random.Generator,
                      noise_scale: float = 1.0) -> SampledWaveform:
    """Receiver output for given arrivals: impulse train plus thermal noise.

    Each arrival deposits q_e * g / dt into its containing bin; thermal noise
    adds i.i.d. Gaussians of variance N0/(2*dt) per bin so that any correlator
    integral picks up variance N0 * E / 2.  ``noise_scale = -1`` replays the
    same stream with negated noise (antithetic pairing).
    """
    y = np.zeros(grid.n)
    arrivals = np.asarray(arrivals, dtype=float)
    if arrivals.size:
        if np.any(arrivals < 0) or np.any(arrivals >= grid.T):
            raise DomainError("arrival times must lie in [0, T)")
        gains = sample_gains(rng, arrivals.size, gain)
        bins = np.minimum((arrivals / grid.dt).astype(int), grid.n - 1)
        np.add.at(y, bins, cfg.q_e * gains / grid.dt)
    if cfg.N0 > 0.0:
        y += noise_scale * math.sqrt(cfg.N0 / (2.0 * grid.dt)) * rng.standard_normal(grid.n)
    return SampledWaveform(grid, y)


# ----------------------------------------------------------------------
# experiment plumbing
# ----------------------------------------------------------------------

def _trial_plan(i: int, sim: SimConfig) -> tuple[int, float]:
    """(stream index, noise sign) for trial i under the antithetic flag."""
    if sim.antithetic:
        return i // 2, (1.0 if i % 2 == 0 else -1.0)
    return i, 1.0


def _stratified_count(base: int, n_bases: int, rng: np.random.Generator,
                      total: float) -> int:
    u = (base + rng.random()) / n_bases
    return int(scipy.stats.poisson.ppf(u, total)) if total > 0 else 0


def _n_bases(sim: SimConfig) -> int:
    return (sim.trials + 1) // 2 if sim.antithetic else sim.trials


def _run_indexed(worker, trials: int, workers: int) -> None:
    if workers <= 1:
        for i in range(trials):
            worker(i)
        return
    chunk = max(1, trials // (workers * 4))
    ranges = [range(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda r: [worker(i) for i in r], ranges))


def detection_experiment(w: SampledWaveform, theta: float, hypothesis: str,
                         rate: RateFunction, gain: GainModel, cfg: ReceiverConfig,
                         sim: SimConfig, workers: int = 1) -> MonteCarloReport:
    """Empirical FA (H0) or MD (H1) rate of the correlate-and-threshold test.

    Under H0 only dark-current arrivals (rate lam_d, if any) plus thermal
    noise are present; under H1 the full rate drives the arrivals.  The error
    event is {statistic > theta*T} under H0 and {statistic <= theta*T} under
    H1; the report carries the Wilson 95% half-width.
    """
    if hypothesis not in ("H0", "H1"):
        raise DomainError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    same_grid(w, rate.waveform)
    if sim.grid != w.grid:
        raise DomainError("simulation grid differs from waveform grid")
    check_horizon(w.grid, cfg)
    if hypothesis == "H0":
        level = rate.dark_rate
        rate_sim = RateFunction(
            SampledWaveform(rate.grid, np.full(rate.grid.n, level)), level)
    else:
        rate_sim = rate

    thr = theta * cfg.T
    dt = w.grid.dt
    wv = w.values
    total = rate_sim.total
    n_bases = _n_bases(sim)
    errors = np.zeros(sim.trials, dtype=bool)

    def worker(i: int) -> None:
        base, sign = _trial_plan(i, sim)
        rng = trial_rng(sim.seed, base)
        count = _stratified_count(base, n_bases, rng, total) if sim.stratified else None
        arrivals = sample_arrivals(rate_sim, rng, count=count)
        y = synthesize_signal(arrivals, gain, cfg, w.grid, rng, noise_scale=sign)
        stat = dt * float(wv @ y.values)
        errors[i] = (stat > thr) if hypothesis == "H0" else (stat <= thr)

    _run_indexed(worker, sim.trials, workers)
    k = int(errors.sum())
    phat, half = wilson_interval(k, sim.trials)
    return MonteCarloReport(trials=sim.trials, half_width=half,
                            error_count=k, empirical_rate=phat)


def _support_bounds(values: np.ndarray, dt: float) -> tuple[float, float]:
    nz = np.flatnonzero(np.abs(values) > 1e-12 * max(float(np.abs(values).max()), 1e-300))
    if nz.size == 0:
        raise DomainError("waveform has empty support")
    return nz[0] * dt, (nz[-1] + 1) * dt


def _fwhm(values: np.ndarray, dt: float) -> float:
    peak = float(values.max())
    if peak <= 0:
        raise DomainError("rate has no peak to measure a pulse width from")
    return float(np.count_nonzero(values >= 0.5 * peak)) * dt


def delay_experiment(w: SampledWaveform, rate: RateFunction, true_delay: float,
                     window: tuple[float, float], gain: GainModel,
                     cfg: ReceiverConfig, sim: SimConfig,
                     workers: int = 1) -> MonteCarloReport:
    """Empirical MSE of the correlation-peak delay estimator.

    Per trial the rate is shifted by the true delay, a realization is
    synthesized, and argmax_theta int y(t) w(t-theta) dt is located on the lag
    grid (step dt) with parabolic refinement of the discrete peak.  An anomaly
    is an estimate farther from the truth than the rate's FWHM pulse width.
    The supports of both the shifted rate and the shifted template must stay
    inside [0, T] over the whole search window.
    """
    same_grid(w, rate.waveform)
    if sim.grid != w.grid:
        raise DomainError("simulation grid differs from waveform grid")
    check_horizon(w.grid, cfg)
    lo, hi = float(window[0]), float(window[1])
    if not (lo < hi):
        raise DomainError(f"empty search window [{lo}, {hi}]")
    if not (lo <= true_delay <= hi):
        raise DomainError("true delay lies outside the search window")
    dt = w.grid.dt
    sig = rate.signal_values()

    for name, vals in (("rate", sig), ("template", w.values)):
        left, right = _support_bounds(vals, dt)
        if left + lo < -1e-9 * w.grid.T or right + hi > w.grid.T * (1 + 1e-9):
            raise DomainError(
                f"shifted {name} support [{left + lo:.6g}, {right + hi:.6g}] "
                f"leaves [0, {w.grid.T:.6g}]"
            )

    t = w.grid.times()
    shifted = np.interp(t - true_delay, t, sig, left=0.0, right=0.0) + rate.dark_rate
    rate_sim = RateFunction(SampledWaveform(rate.grid, shifted), rate.dark_rate)
    total = rate_sim.total

    n = w.grid.n
    j_lo = math.ceil(lo / dt - 1e-9)
    j_hi = math.floor(hi / dt + 1e-9)
    if j_hi - j_lo < 2:
        raise DomainError("search window must span at least three lag-grid steps")
    pulse_width = _fwhm(sig, dt)
    n_bases = _n_bases(sim)
    wv = w.values

    sq_err = np.zeros(sim.trials)
    err = np.zeros(sim.trials)
    anomalies = np.zeros(sim.trials, dtype=bool)

    def worker(i: int) -> None:
        base, sign = _trial_plan(i, sim)
        rng = trial_rng(sim.seed, base)
        count = _stratified_count(base, n_bases, rng, total) if sim.stratified else None
        arrivals = sample_arrivals(rate_sim, rng, count=count)
        y = synthesize_signal(arrivals, gain, cfg, w.grid, rng, noise_scale=sign)
        corr = scipy.signal.correlate(y.values, wv, mode="full", method="fft")
        q = corr[j_lo + n - 1: j_hi + n]
        k = int(np.argmax(q))
        delta = 0.0
        if 0 < k < q.size - 1:
            denom = q[k - 1] - 2.0 * q[k] + q[k + 1]
            if denom < 0:
                delta = float(np.clip(0.5 * (q[k - 1] - q[k + 1]) / denom, -0.5, 0.5))
        theta_hat = (j_lo + k + delta) * dt
        e = theta_hat - true_delay
        err[i] = e
        sq_err[i] = e * e
        anomalies[i] = abs(e) > pulse_width

    _run_indexed(worker, sim.trials, workers)
    total_sq = float(sq_err.sum())
    mse = total_sq / sim.trials
    if sim.trials > 1:
        half = _Z95 * float(sq_err.std(ddof=1)) / math.sqrt(sim.trials)
    else:
        half = 0.0
    return MonteCarloReport(trials=sim.trials, half_width=half,
                            squared_error_sum=total_sq, empirical_mse=mse,
                            anomaly_fraction=float(anomalies.mean()),
                            mean_error=float(err.mean()))
