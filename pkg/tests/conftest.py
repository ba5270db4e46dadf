"""Shared fixtures and independent oracles for the test suite.

Oracles deliberately avoid the library's own solution paths: bisection on the
raw defining equations, brute-force 2-D maximization of the two-level Chernoff
objective, and truncated series for the geometric-gain moments.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

import optcorr as oc


# ----------------------------------------------------------------------
# independent oracles
# ----------------------------------------------------------------------

def bisect_increasing(f, target, lo, hi, tol=1e-14, max_iter=300):
    """Plain bisection for f(x) = target with f increasing on [lo, hi]."""
    flo, fhi = f(lo) - target, f(hi) - target
    assert flo <= 0 <= fhi, "oracle bracket does not straddle the target"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid) - target
        if fm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def geometric_series_moments(zeta, tol=1e-18):
    """Mean and second moment of P(g) = (e^zeta - 1) e^(-zeta g) by summation."""
    norm = math.expm1(zeta)
    mean = 0.0
    second = 0.0
    g = 1
    while True:
        p = norm * math.exp(-zeta * g)
        mean += g * p
        second += g * g * p
        if g > 2 and g * g * p < tol * max(second, 1.0):
            break
        g += 1
        assert g < 10_000_000, "series oracle failed to converge"
    return mean, second


def two_level_md_oracle(theta, lam1, lam2, P, N0, q_e=1.0, zeta=None):
    """Direct (s, w) maximization of the two-level Chernoff MD objective.

    Searches a coarse 2-D grid and polishes with Nelder-Mead, entirely
    independent of the library's variational solution.
    """

    def factor(x):
        if zeta is None:
            return -np.expm1(-x)
        return np.expm1(-x) / np.expm1(-(x + zeta))

    def objective(s, w):
        w2 = math.sqrt(max(2.0 * P - w * w, 0.0))
        return (0.5 * lam1 * factor(s * q_e * w)
                + 0.5 * lam2 * factor(s * q_e * w2)
                - s * theta - 0.25 * s * s * N0 * P)

    lam_mean = 0.5 * (lam1 + lam2)
    s_hi = 2.0 * math.sqrt(lam_mean / (N0 * P))
    best_val, best_arg = 0.0, None
    for s in np.geomspace(1e-4, s_hi, 200):
        vals = [objective(s, w) for w in np.linspace(0.0, math.sqrt(2 * P), 201)]
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_arg = vals[k], (s, np.linspace(0.0, math.sqrt(2 * P), 201)[k])
    if best_arg is None:
        return 0.0
    s0, w0 = best_arg
    res = minimize(lambda p: -objective(math.exp(p[0]), p[1]),
                   [math.log(s0), w0], method="Nelder-Mead",
                   options=dict(xatol=1e-12, fatol=1e-14, maxiter=5000, maxfev=5000))
    return max(0.0, -float(res.fun))


# ----------------------------------------------------------------------
# canonical scenarios
# ----------------------------------------------------------------------

FIG_N0 = 1e-4      # N0/q_e^2 of the two-level benchmark
FIG_P = 10.0


@pytest.fixture(scope="session")
def fig_grid():
    return oc.Grid(T=1.0, n=4096)


@pytest.fixture(scope="session")
def fig_rate(fig_grid):
    return oc.two_level_rate(1.0, 10.0, fig_grid)


@pytest.fixture(scope="session")
def fig_cfg():
    return oc.ReceiverConfig(N0=FIG_N0, q_e=1.0, P=FIG_P, T=1.0)


@pytest.fixture(scope="session")
def det_gain():
    return oc.GainModel.deterministic()


@pytest.fixture(scope="session")
def geo_gain():
    return oc.GainModel.geometric(0.1)


def omf_theta_end(rate, gain, cfg):
    """Threshold where the OMF correlator's MD exponent first reaches zero."""
    gbar, _ = oc.gain_moments(gain)
    w = oc.omf_correlator(rate, gain, cfg)
    return gbar * cfg.q_e * rate.grid.dt * float(rate.values @ w.values) / cfg.T
