"""False-alarm / missed-detection error exponents and optimal correlators.

The detector correlates the received signal y(t) against a deterministic
waveform w(t) and compares the integral to theta * T.  With white thermal
noise only, the FA exponent is theta^2 / (N0 * P) and depends on w through its
power P = (1/T) * integral w^2 alone, so trading FA against MD at fixed FA
exponent is a power-constrained design problem for the MD exponent.

The MD exponent of a given correlator is a Chernoff supremum

    E_MD = sup_{s >= 0} [ (1/T) * int lam(t) * G(s*q_e*w(t)) dt
                          - s*theta - s^2*N0*P_w/4 ],

where the arrival-averaged integrand factor is

    G(x) = 1 - exp(-x)                          deterministic unit gain,
    G(x) = (1 - exp(-x)) / (1 - exp(-x-zeta))   geometric gain,

the second form being the overflow-safe rewriting of
``e^zeta (e^x - 1)/(e^(x+zeta) - 1)``.  For fixed s, calculus of variations
gives the power-constrained optimum w(t) = p[c*lam(t)] / (s*q_e) where p is
the monotone inverse from :mod:`optcorr.special_functions` (the geometric-gain
case uses the zeta variant) and c > 0 calibrates the power constraint
``int p^2[c*lam] dt = s^2 q_e^2 P T``.

With dark current, the H0 statistic also contains Poisson arrivals and the FA
exponent becomes waveform-dependent; the Chernoff objective and the joint
FA/MD Lagrangian are evaluated here, with a coarse grid-search utility for
exploration (no global-optimality claim is made for the joint problem).

s-optimization everywhere: 64-point logarithmic grid followed by
golden-section refinement of the bracketing interval; ties prefer smaller s.
All operations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericError
from .signal_model import (
    GainModel,
    RateFunction,
    ReceiverConfig,
    SampledWaveform,
    check_horizon,
    gain_moments,
    normalize_power,
    same_grid,
)
from .special_functions import (
    DEFAULT_SETTINGS,
    InversionSettings,
    lambert_p_log,
    p_zeta_log,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class DetectorDesign:
    """Optimal correlator with its operating point and exponent pair."""

    w_star: SampledWaveform
    s_star: float
    c_star: float
    E_MD: float
    E_FA: float
    theta: float


@dataclass(frozen=True, eq=False)
class ExponentCurve:
    """FA/MD exponents over a threshold sweep; e_md is keyed by correlator label."""

    theta: np.ndarray
    e_fa: np.ndarray
    e_md: dict
    s_opt: np.ndarray
    c_opt: np.ndarray


# ----------------------------------------------------------------------
# exponents of a given correlator
# ----------------------------------------------------------------------

def fa_exponent(theta: float, P: float, N0: float) -> float:
    """FA exponent theta^2 / (N0 * P); +inf flags the noise-free N0 = 0 case."""
    if not (math.isfinite(theta) and theta >= 0):
        raise DomainError(f"theta must be >= 0, got {theta}")
    if not (math.isfinite(P) and P > 0):
        raise DomainError(f"P must be positive, got {P}")
    if not (math.isfinite(N0) and N0 >= 0):
        raise DomainError(f"N0 must be >= 0, got {N0}")
    if N0 == 0.0:
        return math.inf
    return theta * theta / (N0 * P)


def _md_factor(x: np.ndarray, gain: GainModel) -> np.ndarray:
    """Arrival-averaged Chernoff integrand factor G(x); may contain -inf at poles."""
    if gain.is_deterministic:
        return -np.expm1(-x)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.expm1(-x) / np.expm1(-(x + gain.zeta))


def _first_term(s: float, lam: np.ndarray, qw: np.ndarray, gain: GainModel,
                dt: float, T: float, times: np.ndarray) -> float:
    fac = _md_factor(s * qw, gain)
    with np.errstate(invalid="ignore"):
        contrib = np.where(lam > 0, lam * fac, 0.0)
    bad = np.isnan(contrib)
    if bad.any():
        idx = int(np.argmax(bad))
        raise NumericError(
            f"non-finite Chernoff integrand at t={times[idx]:.9g} "
            f"(lam={lam[idx]:.6g}, s*q_e*w={s * qw[idx]:.6g})"
        )
    return dt * float(contrib.sum()) / T


def _s_upper_bound(theta: float, lam_mean: float, N0: float, Pw: float,
                   q_e: float, gain: GainModel, w_min: float) -> float:
    """Smallest available bound beyond which the Chernoff objective is <= 0."""
    bounds = []
    if N0 > 0 and Pw > 0:
        # quadratic penalty alone exceeds the bounded first term (<= Lambda/T)
        bounds.append(2.0 * math.sqrt(lam_mean / (N0 * Pw)))
    if theta > 0 and lam_mean > 0:
        bounds.append(lam_mean / theta)
    if not gain.is_deterministic and w_min < 0:
        bounds.append((1.0 - 1e-12) * gain.zeta / (q_e * (-w_min)))
    return min(bounds) if bounds else 1e6


def _golden_max(f, a: float, b: float, x_seed: float, f_seed: float,
                tol_rel: float = 1e-11, max_iter: int = 200):
    """Golden-section maximization on [a, b]; ties keep the smaller abscissa."""
    best_x, best_f = x_seed, f_seed
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        if (b - a) <= tol_rel * max(abs(a) + abs(b), 1e-300):
            break
    for x, v in ((c, fc), (d, fd)):
        if v > best_f or (v == best_f and x < best_x):
            best_x, best_f = x, v
    return best_x, best_f


def _maximize_over_s(phi, s_hi: float):
    """Grid + golden-section maximization of phi over s in (0, s_hi].

    phi(0) = 0 is the implicit baseline: a non-positive maximum returns
    (0.0, 0.0), i.e. the exponent is zero and the tilt degenerate.
    """
    if not (s_hi > 0 and math.isfinite(s_hi)):
        return 0.0, 0.0
    lo = min(1e-6, s_hi * 1e-8)
    grid = np.geomspace(lo, s_hi, 64)
    vals = [phi(float(s)) for s in grid]
    k = int(np.argmax(vals))
    if not (vals[k] > 0):
        return 0.0, 0.0
    a = float(grid[k - 1]) if k > 0 else 0.0
    b = float(grid[k + 1]) if k < len(grid) - 1 else float(grid[-1])
    s_best, v_best = _golden_max(phi, a, b, float(grid[k]), vals[k])
    if not (v_best > 0):
        return 0.0, 0.0
    return v_best, s_best


def md_exponent_for_correlator(w: SampledWaveform, theta: float, rate: RateFunction,
                               gain: GainModel, cfg: ReceiverConfig):
    """Chernoff MD exponent of a fixed correlator and its maximizing tilt s.

    Returns (E_MD, s_opt) with E_MD >= 0 always (s = 0 yields objective 0).
    The correlator is evaluated at its own power; normalize beforehand when
    comparing candidates at a common budget.
    """
    same_grid(w, rate.waveform)
    check_horizon(w.grid, cfg)
    if not (math.isfinite(theta) and theta >= 0):
        raise DomainError(f"theta must be >= 0, got {theta}")
    lam = rate.values
    wv = w.values
    qw = cfg.q_e * wv
    Pw = w.power()
    dt = w.grid.dt
    times = w.grid.times()

    def phi(s: float) -> float:
        if s <= 0.0:
            return 0.0
        first = _first_term(s, lam, qw, gain, dt, cfg.T, times)
        return first - s * theta - 0.25 * s * s * cfg.N0 * Pw

    s_hi = _s_upper_bound(theta, rate.total / cfg.T, cfg.N0, Pw, cfg.q_e,
                          gain, float(wv.min()))
    value, s_opt = _maximize_over_s(phi, s_hi)
    return value, s_opt


# ----------------------------------------------------------------------
# the optimal power-constrained correlator
# ----------------------------------------------------------------------

def _plog(log_y: np.ndarray, gain: GainModel, settings: InversionSettings) -> np.ndarray:
    if gain.is_deterministic:
        return lambert_p_log(log_y, settings)
    return p_zeta_log(log_y, gain.zeta, settings)


def _forward_log(x: float, gain: GainModel) -> float:
    """log of the forward map at scalar x > 0."""
    base = math.log(x) + x
    if gain.is_deterministic:
        return base
    z = gain.zeta
    return base + 2.0 * math.log1p(-math.exp(-(x + z))) - math.log(-math.expm1(-z))


def _positive_rate_weights(rate: RateFunction):
    """Unique positive rate values with their quadrature weights (counts * dt).

    Zero-rate samples contribute nothing to either the power target or the
    Chernoff first term, so they are dropped.
    """
    lam_u, counts = np.unique(rate.values, return_counts=True)
    wts = counts * rate.grid.dt
    pos = lam_u > 0
    return lam_u[pos], wts[pos]


def _solve_log_power_constant(s: float, loglam: np.ndarray, wts: np.ndarray,
                              gain: GainModel, cfg: ReceiverConfig,
                              settings: InversionSettings) -> float:
    """log of the constant c making int p^2[c*lam] dt equal s^2 q_e^2 P T.

    Solved in u = log c so that targets far beyond float range stay
    representable; unique by strict monotonicity of the inverse map.
    """
    target = (s * cfg.q_e) ** 2 * cfg.P * cfg.T

    def h(u: float) -> float:
        x = _plog(u + loglam, gain, settings)
        return float(wts @ (x * x)) - target

    weight = float(wts.sum())
    xbar = math.sqrt(target / weight)
    u0 = _forward_log(xbar, gain) - float(wts @ loglam) / weight

    lo, hi = u0 - 2.0, u0 + 2.0
    step = 2.0
    for _ in range(settings.max_iter):
        if h(lo) <= 0.0:
            break
        lo -= step
        step *= 2.0
    else:
        raise NumericError("power-constant bracket expansion failed (low side)")
    step = 2.0
    for _ in range(settings.max_iter):
        if h(hi) >= 0.0:
            break
        hi += step
        step *= 2.0
    else:
        raise NumericError("power-constant bracket expansion failed (high side)")

    u = brentq(h, lo, hi, xtol=1e-10, maxiter=200)
    if abs(h(u)) > 1e-8 * target:
        raise NumericError("power-constant solve missed the 1e-8 relative target")
    return u


def solve_power_constant(s: float, rate: RateFunction, gain: GainModel,
                         cfg: ReceiverConfig,
                         settings: InversionSettings = DEFAULT_SETTINGS) -> float:
    """Constant c > 0 calibrating the designed correlator's power to the budget.

    May return +inf when c exceeds float range (deep log regime); the design
    path works in log c throughout and is unaffected.
    """
    if not (math.isfinite(s) and s > 0):
        raise DomainError(f"s must be positive, got {s}")
    check_horizon(rate.grid, cfg)
    lam_u, wts = _positive_rate_weights(rate)
    if lam_u.size == 0:
        raise DomainError("rate is identically zero")
    u = _solve_log_power_constant(s, np.log(lam_u), wts, gain, cfg, settings)
    with np.errstate(over="ignore"):
        return float(np.exp(u))


def design_detector(theta: float, rate: RateFunction, gain: GainModel,
                    cfg: ReceiverConfig,
                    settings: InversionSettings = DEFAULT_SETTINGS) -> DetectorDesign:
    """Power-constrained correlator maximizing the MD exponent at threshold theta.

    Returns the waveform (normalized to the budget P), the maximizing tilt
    s_star, the power constant c_star, and the resulting exponent pair.  When
    theta is beyond the reach of any power-P correlator the exponent is zero
    and the matched-shape limit (w proportional to lam) is returned with
    s_star = c_star = 0.
    """
    check_horizon(rate.grid, cfg)
    if not (math.isfinite(theta) and theta >= 0):
        raise DomainError(f"theta must be >= 0, got {theta}")
    lam = rate.values
    if not np.any(lam > 0):
        raise DomainError("cannot design a detector for an identically zero rate")
    lam_u, wts = _positive_rate_weights(rate)
    loglam = np.log(lam_u)
    lam_mean = rate.total / cfg.T

    def phi(s: float) -> float:
        if s <= 0.0:
            return 0.0
        u = _solve_log_power_constant(s, loglam, wts, gain, cfg, settings)
        x = _plog(u + loglam, gain, settings)
        fac = _md_factor(x, gain)
        first = float(wts @ (lam_u * fac)) / cfg.T
        return first - s * theta - 0.25 * s * s * cfg.N0 * cfg.P

    s_hi = _s_upper_bound(theta, lam_mean, cfg.N0, cfg.P, cfg.q_e, gain, 0.0)
    value, s_star = _maximize_over_s(phi, s_hi)

    e_fa = fa_exponent(theta, cfg.P, cfg.N0)
    grid = rate.grid
    if s_star == 0.0:
        w = normalize_power(SampledWaveform(grid, lam), cfg.P, cfg.T)
        return DetectorDesign(w, 0.0, 0.0, 0.0, e_fa, theta)

    u = _solve_log_power_constant(s_star, loglam, wts, gain, cfg, settings)
    x_full = np.zeros(grid.n)
    pos = lam > 0
    x_full[pos] = _plog(u + np.log(lam[pos]), gain, settings)
    w = SampledWaveform(grid, x_full / (s_star * cfg.q_e))
    w = normalize_power(w, cfg.P, cfg.T)
    with np.errstate(over="ignore"):
        c_star = float(np.exp(u))
    return DetectorDesign(w, s_star, c_star, value, e_fa, theta)


def omf_correlator(rate: RateFunction, gain: GainModel,
                   cfg: ReceiverConfig) -> SampledWaveform:
    """Optical matched correlator lam/(lam + N0/(2 q_e^2 E{g^2})), at power P.

    The SNR-maximizing baseline under the Gaussian approximation; for N0 = 0
    it degenerates to an indicator of the rate support (a pure integrator).
    """
    check_horizon(rate.grid, cfg)
    lam = rate.values
    if not np.any(lam > 0):
        raise DomainError("optical matched correlator undefined for a zero rate")
    _, g2 = gain_moments(gain)
    if cfg.N0 == 0.0:
        shape = (lam > 0).astype(float)
    else:
        shape = lam / (lam + cfg.N0 / (2.0 * cfg.q_e ** 2 * g2))
    return normalize_power(SampledWaveform(rate.grid, shape), cfg.P, cfg.T)


def exponent_tradeoff_curve(theta_grid, correlators, rate: RateFunction,
                            gain: GainModel, cfg: ReceiverConfig,
                            settings: InversionSettings = DEFAULT_SETTINGS) -> ExponentCurve:
    """Exponent pairs over a threshold sweep.

    The optimal correlator is re-designed at every theta; each entry of
    ``correlators`` is a (label, waveform) pair, power-normalized to the
    budget before evaluation so all curves share the same FA exponent.
    Sweep entries are independent of each other (no shared state).
    """
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise DomainError("theta grid must be a non-empty 1-d array")
    if np.any(thetas < 0):
        raise DomainError("theta grid must be non-negative")
    if thetas.size > 1 and np.any(np.diff(thetas) <= 0):
        raise DomainError("theta grid must be strictly increasing")
    fixed = [(label, normalize_power(w, cfg.P, cfg.T)) for label, w in correlators]

    e_fa = np.empty_like(thetas)
    e_md = {"optimal": np.empty_like(thetas)}
    for label, _ in fixed:
        e_md[label] = np.empty_like(thetas)
    s_opt = np.empty_like(thetas)
    c_opt = np.empty_like(thetas)

    for i, theta in enumerate(thetas):
        design = design_detector(float(theta), rate, gain, cfg, settings)
        e_fa[i] = design.E_FA
        e_md["optimal"][i] = design.E_MD
        s_opt[i] = design.s_star
        c_opt[i] = design.c_star
        for label, w in fixed:
            e_md[label][i], _ = md_exponent_for_correlator(w, float(theta), rate, gain, cfg)
    return ExponentCurve(thetas, e_fa, e_md, s_opt, c_opt)


def curve_to_csv(curve: ExponentCurve) -> str:
    """CSV rendering: theta, E_FA, E_MD per label, s_opt, c_opt (%.12g, LF)."""
    labels = [k for k in curve.e_md if k != "optimal"]
    header = ["theta", "E_FA", "E_MD_optimal"] + [f"E_MD_{k}" for k in labels] \
        + ["s_opt", "c_opt"]
    lines = [",".join(header)]
    for i in range(curve.theta.size):
        row = [curve.theta[i], curve.e_fa[i], curve.e_md["optimal"][i]]
        row += [curve.e_md[k][i] for k in labels]
        row += [curve.s_opt[i], curve.c_opt[i]]
        lines.append(",".join("%.12g" % v for v in row))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# positive dark current
# ----------------------------------------------------------------------

def _dark_factor(x: np.ndarray, zeta: float) -> np.ndarray:
    """e^zeta (e^x - 1)/(e^zeta - e^x) in stable form; requires x < zeta."""
    return np.expm1(x) / (-np.expm1(x - zeta))


def fa_exponent_dark(theta: float, w: SampledWaveform, dark_rate: float,
                     gain: GainModel, cfg: ReceiverConfig):
    """Dark-current FA exponent of a correlator, with its maximizing tilt.

    The Chernoff supremum runs over 0 <= s < zeta / (q_e * max w): at the
    upper end the dark-arrival moment generating function diverges.  The q_e
    factor in the bound keeps the exponent s*q_e*w(t) dimensionless.  With
    dark_rate = 0 the closed-form quadratic optimum is returned directly.
    """
    if gain.is_deterministic:
        raise DomainError("dark-current FA exponent needs a geometric gain; "
                          "use a large zeta for the unit-gain limit")
    check_horizon(w.grid, cfg)
    if not (math.isfinite(theta) and theta > 0):
        raise DomainError(f"theta must be positive, got {theta}")
    if not (math.isfinite(dark_rate) and dark_rate >= 0):
        raise DomainError(f"dark rate must be >= 0, got {dark_rate}")
    wv = w.values
    wmax = float(wv.max())
    if wmax <= 0:
        raise DomainError("feasible s-interval is empty: max w(t) must be positive")
    Pw = w.power()
    s_ub = gain.zeta / (cfg.q_e * wmax)

    if dark_rate == 0.0:
        if cfg.N0 > 0.0:
            s0 = 2.0 * theta / (cfg.N0 * Pw)
            if s0 < s_ub:
                return theta * theta / (cfg.N0 * Pw), s0
            return s_ub * theta - 0.25 * s_ub ** 2 * cfg.N0 * Pw, s_ub
        # noise-free and dark-free: objective s*theta, supremum at the edge
        return s_ub * theta, s_ub

    dt = w.grid.dt

    def phi(s: float) -> float:
        if s <= 0.0:
            return 0.0
        dark = dt * float(_dark_factor(s * cfg.q_e * wv, gain.zeta).sum()) / cfg.T
        return s * theta - 0.25 * s * s * cfg.N0 * Pw - dark_rate * dark

    s_hi = s_ub * (1.0 - 1e-9)
    if cfg.N0 > 0.0 and float(wv.min()) >= 0.0:
        # beyond 4*theta/(N0*Pw) even the dark-free part of the objective is < 0
        s_hi = min(s_hi, 4.0 * theta / (cfg.N0 * Pw))
    value, s_opt = _maximize_over_s(phi, s_hi)
    return value, s_opt


def dark_lagrangian_objective(s: float, sigma: float, theta: float, mu: float,
                              w: SampledWaveform, rate: RateFunction,
                              gain: GainModel, cfg: ReceiverConfig) -> float:
    """Joint MD + mu * FA Chernoff objective in the dark-current trade-off.

    Evaluates, at tilts (sigma for MD, s for FA),

        (1/T) * int [ lam * G(sigma*q_e*w) - mu*lam_d * D(s*q_e*w) ] dt
        + (mu*s - sigma) * theta - (sigma^2 + mu*s^2) * N0 * P_w / 4,

    where G is the MD factor and D the dark FA factor (both gain-averaged for
    geometric gain, their zeta -> inf limits for deterministic gain).  Exposed
    for grid-search exploration; no stationarity or optimality is implied.
    """
    for name, v in (("s", s), ("sigma", sigma), ("theta", theta), ("mu", mu)):
        if not (math.isfinite(v) and v >= 0):
            raise DomainError(f"{name} must be >= 0, got {v}")
    same_grid(w, rate.waveform)
    check_horizon(w.grid, cfg)
    wv = w.values
    lam = rate.values
    if not gain.is_deterministic:
        if s * cfg.q_e * float(wv.max()) >= gain.zeta:
            raise DomainError("infeasible s: s*q_e*max(w) must stay below zeta")
        if sigma * cfg.q_e * float(-wv.min()) >= gain.zeta:
            raise DomainError("infeasible sigma: sigma*q_e*min(w) must stay above -zeta")
        G = _md_factor(sigma * cfg.q_e * wv, gain)
        D = _dark_factor(s * cfg.q_e * wv, gain.zeta)
    else:
        G = -np.expm1(-sigma * cfg.q_e * wv)
        D = np.expm1(s * cfg.q_e * wv)
    Pw = w.power()
    dt = w.grid.dt
    integ = dt * float((lam * G - mu * rate.dark_rate * D).sum()) / cfg.T
    return integ + (mu * s - sigma) * theta - 0.25 * (sigma ** 2 + mu * s ** 2) * cfg.N0 * Pw


def dark_tradeoff_grid_search(mu: float, waveforms, rate: RateFunction,
                              gain: GainModel, cfg: ReceiverConfig,
                              s_grid, sigma_grid, theta_grid):
    """Coarse 4-D grid search of the dark-current Lagrangian.

    Scans (s, sigma, theta, waveform) combinations, skipping infeasible
    tilts, and returns (best_value, best_point) where best_point is a dict
    with keys label, s, sigma, theta.  Exploration aid only.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    best_value = -math.inf
    best_point = None
    for label, w in waveforms:
        for s in s_grid:
            for sigma in sigma_grid:
                try:
                    base = dark_lagrangian_objective(float(s), float(sigma), 0.0, mu,
                                                     w, rate, gain, cfg)
                except DomainError:
                    continue
                vals = base + (mu * float(s) - float(sigma)) * thetas
                j = int(np.argmax(vals))
                if vals[j] > best_value:
                    best_value = float(vals[j])
                    best_point = {"label": label, "s": float(s),
                                  "sigma": float(sigma), "theta": float(thetas[j])}
    if best_point is None:
        raise DomainError("no feasible grid point in the dark-current search")
    return best_value, best_point
