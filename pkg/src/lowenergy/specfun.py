"""Cylinder Bessel and Hankel functions of real order at positive argument.

Values come from the AMOS-backed routines in :mod:`scipy.special`; this module
adds the domain checks, the validated-range warning, the Hankel combinations
and recurrence-based derivatives used by the radial solvers.
"""
from __future__ import annotations

import enum
import warnings

import numpy as np
from scipy import special

NU_MAX = 60.5
X_VALID = (1e-6, 1e4)


class BesselKind(str, enum.Enum):
    J = "J"
    Y = "Y"
    H1 = "H1"
    H2 = "H2"


class AccuracyWarning(UserWarning):
    """Argument outside the range where the relative accuracy was validated."""


def _raw(kind: BesselKind, nu, x):
    # no checks: negative orders are needed by the derivative recurrence
    if kind is BesselKind.J:
        return special.jv(nu, x)
    if kind is BesselKind.Y:
        return special.yv(nu, x)
    j = special.jv(nu, x)
    y = special.yv(nu, x)
    if kind is BesselKind.H1:
        return j + 1j * y
    return j - 1j * y


def _flush(nu):
    # AMOS returns Y = 0 for subnormal orders; the functions are continuous in nu
    nu = np.asarray(nu, dtype=float)
    return np.where(np.abs(nu) < np.finfo(float).tiny, 0.0, nu)


def _check(nu, x, nu_max: float, warn: bool):
    x = np.asarray(x, dtype=float)
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("cylinder functions are evaluated for x > 0 only")
    if np.any(nu_arr < 0):
        raise ValueError("order must be non-negative")
    if np.any(nu_arr > nu_max):
        raise ValueError(f"order exceeds nu_max={nu_max}")
    if warn and (np.any(x < X_VALID[0]) or np.any(x > X_VALID[1])):
        warnings.warn(
            f"argument outside validated range {X_VALID}", AccuracyWarning, stacklevel=3
        )
    return _flush(nu_arr), x


def cyl_bessel(kind, nu, x, *, nu_max: float = NU_MAX, warn: bool = True):
    """Evaluate J_nu, Y_nu, H1_nu or H2_nu at real x > 0.

    ``kind`` may be a :class:`BesselKind` or its string tag. Array arguments
    broadcast. The result is complex for every kind so that callers can mix
    kinds freely; H1 and H2 are formed as J +/- iY from the same J and Y values.
    """
    kind = BesselKind(kind)
    nu_arr, x_arr = _check(nu, x, nu_max, warn)
    out = np.asarray(_raw(kind, nu_arr, x_arr), dtype=complex)
    return out[()] if out.ndim == 0 else out


def cyl_bessel_deriv(kind, nu, x, *, nu_max: float = NU_MAX, warn: bool = True):
    """d/dx of the cylinder function via C' = (C_{nu-1} - C_{nu+1}) / 2."""
    kind = BesselKind(kind)
    nu_arr, x_arr = _check(nu, x, nu_max, warn)
    out = 0.5 * (_raw(kind, nu_arr - 1.0, x_arr) - _raw(kind, nu_arr + 1.0, x_arr))
    out = np.asarray(out, dtype=complex)
    return out[()] if out.ndim == 0 else out


def hankel_pair(sign: int, nu: float, x):
    """Return (H, H') with H = H1 for sign=+1 and H2 for sign=-1.

    Internal fast path for the solvers: no range warning, one extra order
    evaluation for the derivative through H' = H_{nu-1} - (nu/x) H_nu.
    """
    x = np.asarray(x, dtype=float)
    nu = _flush(nu)
    h = special.hankel1(nu, x) if sign > 0 else special.hankel2(nu, x)
    hm = special.hankel1(nu - 1.0, x) if sign > 0 else special.hankel2(nu - 1.0, x)
    return h, hm - (nu / x) * h


def bessel_pair(nu: float, x):
    """Return (J, Y, J', Y') at real x > 0.

    J and Y are evaluated separately: taking them as parts of H1 would bury the
    small one under the rounding error of the large one when x << nu.
    """
    x = np.asarray(x, dtype=float)
    nu = _flush(nu)
    j = special.jv(nu, x)
    y = special.yv(nu, x)
    dj = special.jv(nu - 1.0, x) - (nu / x) * j
    dy = special.yv(nu - 1.0, x) - (nu / x) * y
    return j, y, dj, dy
