"""Correlator design and MSE analysis for high-SNR time-delay estimation.

The delay estimator slides a template against the received signal,
theta_hat = argmax_theta int y(t) w(t - theta) dt, and at high SNR its error
linearizes to U_n / A with

    A       = E{g} * q_e * int lam(t) * wddot(t) dt        (peak curvature)
    E{U_n^2} = int [N0/2 + E{g^2} * q_e^2 * lam(t)] * wdot(t)^2 dt,

so MSE ~ E{U_n^2} / A^2.  The total noise driving U_n is thermal plus shot
plus multiplicative (gain fluctuation) noise; the latter two are white with
intensity proportional to the local rate, which is why the weight
N0/2 + E{g^2} q_e^2 lam(t) appears.

Minimizing the MSE over twice-differentiable templates gives the logarithmic
correlator  w(t) ∝ log(1 + lam(t) / ell0)  with the rate scale

    ell0 = N0 / (2 * E{g^2} * q_e^2),

the arrival rate at which shot noise power crosses the thermal density.  A
dark-current component adds 2*E{g^2}*q_e^2*lam_d to the effective N0 and drops
out of the timing signal, so designs treat the rate's dark part as noise.

For non-white or non-stationary thermal noise with kernel R0(s, t) the
optimal template derivative solves the integral equation R0 * v = lam_dot;
``nonwhite_optimal_correlator`` discretizes and solves that system directly.

All derivatives are central differences with second-order one-sided stencils
at the boundary; everything is pure and re-entrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .signal_model import (
    GainModel,
    Grid,
    RateFunction,
    ReceiverConfig,
    SampledWaveform,
    check_horizon,
    first_derivative,
    gain_moments,
    normalize_power,
    same_grid,
    second_derivative,
)

_TINY = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class DelayLinearization:
    """Deterministic curvature A and noise power E{U_n^2} of the error expansion."""

    A: float
    var_un: float


@dataclass(frozen=True, eq=False)
class NoiseKernel:
    """Discretized noise autocorrelation R0 over grid x grid.

    Delta components are represented as 1/dt on the diagonal.  The matrix must
    be symmetric; positive definiteness is exercised (and reported) by the
    solver rather than eagerly factorized at construction.
    """

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float, copy=True)
        n = self.grid.n
        if m.shape != (n, n):
            raise DomainError(f"kernel matrix must be {n}x{n}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("kernel matrix must be finite")
        scale = float(np.abs(m).max())
        if scale > 0 and float(np.abs(m - m.T).max()) > 1e-9 * scale:
            raise DomainError("kernel matrix must be symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def plus_colored(self, colored: np.ndarray) -> "NoiseKernel":
        """New kernel with a smooth colored component added."""
        return NoiseKernel(self.grid, self.matrix + np.asarray(colored, dtype=float))


def white_shot_kernel(rate: RateFunction, gain: GainModel,
                      cfg: ReceiverConfig) -> NoiseKernel:
    """Thermal + shot/multiplicative diagonal kernel [N0/2 + E{g^2} q_e^2 lam]/dt."""
    check_horizon(rate.grid, cfg)
    _, g2 = gain_moments(gain)
    diag = (0.5 * cfg.N0 + g2 * cfg.q_e ** 2 * rate.values) / rate.grid.dt
    return NoiseKernel(rate.grid, np.diag(diag))


def _effective_thermal(rate: RateFunction, gain: GainModel, cfg: ReceiverConfig) -> float:
    """N0 with the dark-current shot contribution folded in."""
    _, g2 = gain_moments(gain)
    return cfg.N0 + 2.0 * g2 * cfg.q_e ** 2 * rate.dark_rate


def _rate_scale(rate: RateFunction, gain: GainModel, cfg: ReceiverConfig) -> float:
    _, g2 = gain_moments(gain)
    n_eff = _effective_thermal(rate, gain, cfg)
    if n_eff <= 0.0:
        raise DomainError("log correlator needs N0 > 0 (or a dark-current floor)")
    return n_eff / (2.0 * g2 * cfg.q_e ** 2)


def _boundary_values(values: np.ndarray) -> tuple[float, float]:
    """Quadratic extrapolation of midpoint samples to t = 0 and t = T."""
    left = (15.0 * values[0] - 10.0 * values[1] + 3.0 * values[2]) / 8.0
    right = (15.0 * values[-1] - 10.0 * values[-2] + 3.0 * values[-3]) / 8.0
    return left, right


def _check_zero_boundary(sig: np.ndarray) -> None:
    left, right = _boundary_values(sig)
    tol = 1e-9 * max(float(sig.max()), _TINY)
    if abs(left) > tol or abs(right) > tol:
        raise DomainError(
            f"rate must vanish at both ends: lambda(0)~{left:.6g}, lambda(T)~{right:.6g} "
            f"exceed tolerance {tol:.3g}"
        )


def optimal_delay_correlator(rate: RateFunction, gain: GainModel,
                             cfg: ReceiverConfig) -> SampledWaveform:
    """MSE-optimal template log(1 + lam_signal/ell0), power-normalized.

    Requires the signal part of the rate to vanish at both ends of the
    horizon (the integration-by-parts step behind the design needs it).  The
    MSE is scale-invariant, so the returned power-P normalization is a pure
    convention.
    """
    check_horizon(rate.grid, cfg)
    sig = rate.signal_values()
    _check_zero_boundary(sig)
    ell0 = _rate_scale(rate, gain, cfg)
    w = np.log1p(sig / ell0)
    return normalize_power(SampledWaveform(rate.grid, w), cfg.P, cfg.T)


def delay_mse(w: SampledWaveform, rate: RateFunction, gain: GainModel,
              cfg: ReceiverConfig) -> tuple[float, DelayLinearization]:
    """Linearized delay MSE of a template, with its (A, E{U_n^2}) breakdown.

    Preconditions: the template peak must be stationary at zero lag
    (int lam * wdot = 0 within 1e-6 * ||lam|| * ||wdot||), and the curvature A
    must be meaningfully non-zero, else the correlation peak is flat and the
    linearization void.
    """
    same_grid(w, rate.waveform)
    check_horizon(w.grid, cfg)
    gmean, g2 = gain_moments(gain)
    lam = rate.values
    dt = w.grid.dt
    wdot = first_derivative(w).values
    wddot = second_derivative(w).values

    lam_norm = math.sqrt(dt * float(lam @ lam))
    wdot_norm = math.sqrt(dt * float(wdot @ wdot))
    stat = dt * float(lam @ wdot)
    if abs(stat) > 1e-6 * lam_norm * wdot_norm:
        raise DomainError(
            f"stationarity violated: int lam*wdot = {stat:.6g} exceeds "
            f"1e-6*||lam||*||wdot|| = {1e-6 * lam_norm * wdot_norm:.6g}"
        )

    A = gmean * cfg.q_e * dt * float(lam @ wddot)
    wddot_norm = math.sqrt(dt * float(wddot @ wddot))
    if abs(A) <= 1e-12 * gmean * cfg.q_e * lam_norm * wddot_norm:
        raise NumericError("flat correlation peak: int lam * wddot is negligibly small")

    var_un = dt * float((0.5 * cfg.N0 + g2 * cfg.q_e ** 2 * lam) @ (wdot * wdot))
    return var_un / (A * A), DelayLinearization(A, var_un)


def mse_closed_forms(rate: RateFunction, gain: GainModel,
                     cfg: ReceiverConfig) -> tuple[float, float]:
    """High-SNR MSE of the matched template and of the optimal log template.

    With ell0 = N_eff / (2 E{g^2} q_e^2) and weight W = 1 + lam/ell0:

        mse_matched = ell0 * int W * lamdot^2 / [int lamdot^2]^2
        mse_opt     = ell0 / int (lamdot^2 / W)

    mse_opt <= mse_matched always (Cauchy-Schwarz), with equality when the
    weight is constant over the support of lamdot.  The prefactor assumes
    unit-gain statistics (E{g}^2 = E{g^2}); for a random gain both values
    share the omitted common factor E{g^2}/E{g}^2, so the comparison and the
    ratio are unaffected.
    """
    check_horizon(rate.grid, cfg)
    sig = rate.signal_values()
    _check_zero_boundary(sig)
    ell0 = _rate_scale(rate, gain, cfg)
    dt = rate.grid.dt
    lamdot = first_derivative(SampledWaveform(rate.grid, sig)).values
    d2 = dt * float(lamdot @ lamdot)
    if d2 <= 0.0:
        raise DomainError("rate carries no timing information (lamdot is zero)")
    weight = 1.0 + sig / ell0
    mse_matched = ell0 * dt * float(weight @ (lamdot * lamdot)) / (d2 * d2)
    mse_opt = ell0 / (dt * float((lamdot * lamdot / weight).sum()))
    return mse_matched, mse_opt


def nonwhite_optimal_correlator(kernel: NoiseKernel, rate: RateFunction,
                                cfg: ReceiverConfig) -> SampledWaveform:
    """Optimal template under a general noise kernel R0.

    Solves the discretized stationarity system (R0 * dt) v = lamdot and
    integrates v cumulatively; with the white + shot diagonal kernel this
    reproduces the closed-form log correlator up to scale.  A failed or
    inaccurate solve raises NumericError carrying a condition estimate.
    """
    if kernel.grid != rate.grid:
        raise DomainError("kernel and rate live on different grids")
    check_horizon(rate.grid, cfg)
    sig = rate.signal_values()
    _check_zero_boundary(sig)
    lamdot = first_derivative(SampledWaveform(rate.grid, sig)).values
    dt = rate.grid.dt
    system = kernel.matrix * dt

    v = None
    try:
        v = scipy.linalg.solve(system, lamdot, assume_a="pos")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError):
        v = None
    if v is None or not np.all(np.isfinite(v)):
        # regularize only after the plain solve failed
        eps = 1e-10 * float(np.trace(system)) / rate.grid.n
        try:
            v = scipy.linalg.solve(system + eps * np.eye(rate.grid.n), lamdot,
                                   assume_a="pos")
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
            cond = float(np.linalg.cond(system))
            raise NumericError(
                f"kernel solve failed even with regularization; condition estimate {cond:.3e}"
            ) from exc

    resid = float(np.linalg.norm(system @ v - lamdot))
    lamdot_norm = float(np.linalg.norm(lamdot))
    if resid > 1e-8 * max(lamdot_norm, _TINY):
        cond = float(np.linalg.cond(system))
        raise NumericError(
            f"kernel solve residual {resid:.3e} exceeds 1e-8*||lamdot||; "
            f"condition estimate {cond:.3e}"
        )

    w = (np.cumsum(v) - 0.5 * v) * dt
    return normalize_power(SampledWaveform(rate.grid, w), cfg.P, cfg.T)


def delay_design_csv(rate: RateFunction, gain: GainModel, cfg: ReceiverConfig) -> str:
    """CSV of (t, lambda, w_matched, w_opt) plus a trailing MSE summary block."""
    w_opt = optimal_delay_correlator(rate, gain, cfg)
    w_matched = normalize_power(rate.waveform, cfg.P, cfg.T)
    mse_matched, mse_opt = mse_closed_forms(rate, gain, cfg)
    t = rate.grid.times()
    lines = ["t,lambda,w_matched,w_opt"]
    for i in range(rate.grid.n):
        lines.append(",".join("%.12g" % v for v in
                              (t[i], rate.values[i], w_matched.values[i], w_opt.values[i])))
    lines.append("# mse_matched = %.12g" % mse_matched)
    lines.append("# mse_opt = %.12g" % mse_opt)
    return "\n".join(lines) + "\n"
