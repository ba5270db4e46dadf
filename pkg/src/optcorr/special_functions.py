"""Monotone scalar inversions behind the optimal-correlator formulas.

Two strictly increasing maps on x >= 0 are inverted numerically:

* ``lambert_forward``:  x * exp(x)             (inverse: ``lambert_p``)
* ``p_zeta_forward``:   the gain-averaged variant with parameter zeta > 0
                        (inverse: ``p_zeta``)

``p_zeta_forward`` is evaluated in the overflow-safe factored form

    x * exp(x) * (1 - exp(-x - zeta))**2 / (1 - exp(-zeta)),

algebraically identical to the textbook ratio
``x*(e^(x+zeta)-1)^2 / (e^(x+2*zeta) - e^(x+zeta))`` but stable for large
``x + zeta``.  As zeta -> inf it reduces to ``x * exp(x)``; near x = 0 it is
approximately linear with slope ``1 - exp(-zeta)``.

Inversion uses a bracketed Newton iteration with bisection fallback, which is
globally convergent because both maps are smooth and strictly increasing.  For
arguments given directly in log space (``lambert_p_log`` / ``p_zeta_log``) the
same scheme runs on ``log f(x) = log y``, so targets far beyond float range
(log y up to ~7e2**2) are handled without overflow.

All functions accept scalars or numpy arrays and are pure (thread-safe).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

_TINY = float(np.finfo(float).tiny)

# Above this value of log(y) the inversion switches to the log-space residual.
_LOG_SWITCH = 30.0


@dataclass(frozen=True)
class InversionSettings:
    """Tolerances for the monotone inversions.

    rel_tol bounds the residual |forward(x) - y| relative to max(y, tiny);
    max_iter caps both bracket expansion and Newton sweeps.
    """

    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0):
            raise DomainError(f"rel_tol must be positive and finite, got {self.rel_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_SETTINGS = InversionSettings()


# ----------------------------------------------------------------------
# forward maps
# ----------------------------------------------------------------------

def lambert_forward(x):
    """x * exp(x), the map inverted by lambert_p."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(x)


def p_zeta_forward(x, zeta: float):
    """Gain-averaged forward map inverted by p_zeta (stable factored form)."""
    x = np.asarray(x, dtype=float)
    _check_zeta(zeta)
    one_minus = -np.expm1(-(x + zeta))
    return x * np.exp(x) * one_minus * one_minus / (-math.expm1(-zeta))


def _lambert_dforward(x):
    return np.exp(x) * (1.0 + x)


def _p_zeta_dforward(x, zeta: float):
    u = np.exp(-(x + zeta))
    one_minus = 1.0 - u
    return np.exp(x) * one_minus * ((1.0 + x) * one_minus + 2.0 * x * u) / (-math.expm1(-zeta))


def _lambert_logforward(x):
    # log(x e^x)
    return np.log(x) + x


def _lambert_dlogforward(x):
    return 1.0 + 1.0 / x


def _p_zeta_logforward(x, zeta: float):
    return np.log(x) + x + 2.0 * np.log1p(-np.exp(-(x + zeta))) - math.log(-math.expm1(-zeta))


def _p_zeta_dlogforward(x, zeta: float):
    u = np.exp(-(x + zeta))
    return 1.0 + 1.0 / x + 2.0 * u / (1.0 - u)


# ----------------------------------------------------------------------
# bracketed Newton with bisection fallback
# ----------------------------------------------------------------------

def _newton_bracketed(f, fprime, y, lo, hi, x0, tol_abs, settings):
    """Solve f(x) = y elementwise on brackets [lo, hi] with f increasing.

    Brackets must already satisfy f(lo) <= y <= f(hi).  Newton steps that
    leave the current bracket (or go non-finite) fall back to bisection.
    """
    x = np.array(x0, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(settings.max_iter):
        fx = f(x)
        err = fx - y
        done = np.abs(err) <= tol_abs
        if done.all():
            return x
        lo = np.where((err < 0) & ~done, x, lo)
        hi = np.where((err > 0) & ~done, x, hi)
        with np.errstate(all="ignore"):
            xn = x - err / fprime(x)
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
    fx = f(x)
    if np.all(np.abs(fx - y) <= tol_abs):
        return x
    raise NumericError(
        f"monotone inversion failed to reach rel_tol={settings.rel_tol} "
        f"within {settings.max_iter} iterations"
    )


def _invert_direct(f, fprime, y, settings):
    """Invert on the natural scale; y must be a 1-d float array >= 0."""
    x = np.zeros_like(y)
    pos = y > 0
    if not pos.any():
        return x
    yp = y[pos]
    # initial bracket [0, max(1, log1p(y)) + 1], grown geometrically if needed
    hi = np.maximum(1.0, np.log1p(yp)) + 1.0
    for _ in range(settings.max_iter):
        short = f(hi) < yp
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise NumericError("bracket expansion failed")
    lo = np.zeros_like(yp)
    x0 = np.minimum(np.log1p(yp), hi)  # f(log1p(y)) >= y, so start from above
    tol = settings.rel_tol * np.maximum(yp, _TINY)
    x[pos] = _newton_bracketed(f, fprime, yp, lo, hi, x0, tol, settings)
    return x


def _invert_log(g, gprime, ly, settings):
    """Invert via the log-space residual g(x) = log f(x); ly is log(y)."""
    x = np.empty_like(ly)
    lo = np.full_like(ly, _TINY)
    hi = np.maximum(2.0, ly) + 2.0
    for _ in range(settings.max_iter):
        short = g(hi) < ly
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise NumericError("bracket expansion failed (log domain)")
    x0 = np.clip(ly - np.log(np.maximum(ly, 2.0)), _TINY, hi)
    return _newton_bracketed(g, gprime, ly, lo, hi, x0, settings.rel_tol, settings)


def _as_checked_array(y, name):
    arr = np.asarray(y, dtype=float)
    if arr.ndim > 1:
        raise DomainError(f"{name} must be scalar or 1-d")
    flat = np.atleast_1d(arr)
    if not np.all(np.isfinite(flat)):
        raise DomainError(f"{name} must be finite")
    if np.any(flat < 0):
        raise DomainError(f"{name} must be non-negative")
    return arr, flat


def _check_zeta(zeta):
    if not (isinstance(zeta, (int, float)) and math.isfinite(zeta) and zeta > 0):
        raise DomainError(f"zeta must be a positive finite number, got {zeta!r}")


# ----------------------------------------------------------------------
# public inverses
# ----------------------------------------------------------------------

def lambert_p(y, settings: InversionSettings = DEFAULT_SETTINGS):
    """Inverse of x*exp(x) on x >= 0.

    Strictly increasing with lambert_p(0) = 0; satisfies
    |x*exp(x) - y| <= rel_tol * max(y, tiny).
    """
    arr, flat = _as_checked_array(y, "y")
    out = _invert_direct(lambert_forward, _lambert_dforward, flat, settings)
    return float(out[0]) if arr.ndim == 0 else out


def p_zeta(y, zeta: float, settings: InversionSettings = DEFAULT_SETTINGS):
    """Inverse of p_zeta_forward(., zeta) on x >= 0.

    Strictly increasing with p_zeta(0) = 0; approximately
    y / (1 - exp(-zeta)) for small y and log-like for large y.  Converges to
    lambert_p as zeta -> inf.
    """
    _check_zeta(zeta)
    arr, flat = _as_checked_array(y, "y")
    out = _invert_direct(
        lambda x: p_zeta_forward(x, zeta),
        lambda x: _p_zeta_dforward(x, zeta),
        flat,
        settings,
    )
    return float(out[0]) if arr.ndim == 0 else out


def _log_split_invert(log_y, direct, g, gprime, settings):
    arr = np.asarray(log_y, dtype=float)
    if arr.ndim > 1:
        raise DomainError("log_y must be scalar or 1-d")
    flat = np.atleast_1d(arr).astype(float)
    if np.any(np.isnan(flat)) or np.any(flat == np.inf):
        raise DomainError("log_y must be < +inf and not NaN")
    out = np.zeros_like(flat)
    small = flat <= _LOG_SWITCH
    if small.any():
        out[small] = direct(np.exp(flat[small]))
    big = ~small
    if big.any():
        out[big] = _invert_log(g, gprime, flat[big], settings)
    return float(out[0]) if arr.ndim == 0 else out


def lambert_p_log(log_y, settings: InversionSettings = DEFAULT_SETTINGS):
    """lambert_p(exp(log_y)) without forming exp(log_y).

    Accepts any log_y < +inf (including -inf, mapping to 0); used wherever the
    target x*exp(x) = y would overflow float range.
    """
    return _log_split_invert(
        log_y,
        lambda yv: _invert_direct(lambert_forward, _lambert_dforward, yv, settings),
        _lambert_logforward,
        _lambert_dlogforward,
        settings,
    )


def p_zeta_log(log_y, zeta: float, settings: InversionSettings = DEFAULT_SETTINGS):
    """p_zeta(exp(log_y), zeta) without forming exp(log_y)."""
    _check_zeta(zeta)
    return _log_split_invert(
        log_y,
        lambda yv: _invert_direct(
            lambda x: p_zeta_forward(x, zeta),
            lambda x: _p_zeta_dforward(x, zeta),
            yv,
            settings,
        ),
        lambda x: _p_zeta_logforward(x, zeta),
        lambda x: _p_zeta_dlogforward(x, zeta),
        settings,
    )
