"""Per-mode limiting resolvents (Delta + V - (sigma +/- i0)^2)^{-1} and zero-energy data.

Each mode reduces to -w'' + q w = r^{(n-1)/2} f with w = r^{(n-1)/2} u and
q = (nu^2 - 1/4)/r^2 + V - sigma^2. Numerically we work with v = r^{-1/2} w in
t = log r, where the equation reads v_tt = (nu^2 + r^2 (V - sigma^2)) v and has
no first-order term. Near the origin the ODE is integrated with DOP853; beyond
``r_free`` (outside the support, or the numerically negligible part, of V) the
exact free solutions are used: Hankel functions for sigma > 0 and the Euler
powers r^{1/2 +/- nu} for sigma = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, optimize, special
from scipy.integrate import solve_ivp

from .geometry import ModeSpec, PotentialSpec, RadialGrid, potential_value
from .mellin_sobolev import ModeFunction
from .specfun import bessel_pair, hankel_pair

RTOL = 1e-13
# bounding the step keeps the dense-output interpolant error far below RTOL,
# which matters once samples are differenced
MAX_STEP = 0.02
FREE_RADIUS_MIN = 4.0
NEAR_SINGULAR = 1e-12


class SolverError(RuntimeError):
    """Integration failure or a configuration the solver cannot honor."""


@dataclass(frozen=True)
class ReducedODE:
    mode: ModeSpec
    V: PotentialSpec
    sigma: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def r_free(self) -> float:
        return max(self.V.cutoff_radius(self.sigma), FREE_RADIUS_MIN)


def reduced_potential(mode: ModeSpec, V: PotentialSpec, sigma: float, r):
    """q(r) = (nu^2 - 1/4)/r^2 + V(r) - sigma^2."""
    r = np.asarray(r, dtype=float)
    out = (mode.nu**2 - 0.25) / r**2 + potential_value(V, r) - sigma * sigma
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadialSolution:
    """Samples of w and dw/dr on a grid."""

    grid: RadialGrid
    w: np.ndarray
    dw: np.ndarray
    r_free: float

    def u(self, n: int) -> np.ndarray:
        return self.grid.r ** (-(n - 1) / 2) * self.w


def wronskian(a: RadialSolution, b: RadialSolution) -> np.ndarray:
    """a.w * b.w' - a.w' * b.w at every grid point."""
    return a.w * b.dw - a.dw * b.w


@dataclass(frozen=True)
class GreenPair:
    w_reg: RadialSolution
    w_out: RadialSolution
    W: complex
    wronskian_spread: float
    scale: float

    @property
    def relative_W(self) -> float:
        return abs(self.W) / self.scale if self.scale > 0 else 0.0


@dataclass(frozen=True)
class ConnectionCoefficients:
    """w_reg ~ a r^{nu+1/2} + b r^{-nu+1/2} in the free region at zero energy."""

    a: float
    b: float
    r1: float
    r2: float
    mismatch: float

    @property
    def conditioning(self) -> float:
        return self.r2 / self.r1


# ----------------------------------------------------------------------------- ODE core

def _scalar_potential(V: PotentialSpec) -> Callable[[float], float]:
    if V.kind == "zero" or V.g == 0:
        return lambda r: 0.0
    if V.kind == "square_well":
        g, a = V.g, V.a
        return lambda r: -g if r < a else 0.0
    if V.kind == "barrier":
        g, a = V.g, V.a
        return lambda r: g if r < a else 0.0
    g, s = V.g, V.s
    return lambda r: g * (1.0 + r * r) ** (-s / 2)


def _integrate(ode: ReducedODE, kappa: float, t_start: float, t_end: float,
               y0: tuple[complex, complex], t_eval: np.ndarray):
    """Integrate vt = e^{-kappa t} v from t_start to t_end (either direction).

    The rescaled unknown obeys vt'' = -2 kappa vt' + (nu^2 - kappa^2 + r^2 (V - sigma^2)) vt,
    which keeps it O(1) when kappa matches the dominant indicial growth.
    Returns (vt, vt') at t_eval (ordered like t_eval) and the solution at t_end.
    """
    Vs = _scalar_potential(ode.V)
    nu2 = ode.mode.nu ** 2
    s2 = ode.sigma ** 2
    k2 = nu2 - kappa * kappa

    def rhs(t, y):
        r = math.exp(t)
        return [y[1], -2 * kappa * y[1] + (k2 + r * r * (Vs(r) - s2)) * y[0]]

    forward = t_end > t_start
    cuts = sorted(math.log(b) for b in ode.V.breakpoints
                  if min(t_start, t_end) < math.log(b) < max(t_start, t_end))
    if not forward:
        cuts = cuts[::-1]
    nodes = [t_start, *cuts, t_end]
    y = np.array(y0, dtype=complex if np.iscomplexobj(np.asarray(y0)) else float)
    scale = max(abs(y[0]), abs(y[1]), 1e-300)
    out_v = np.empty(t_eval.size, dtype=y.dtype)
    out_d = np.empty(t_eval.size, dtype=y.dtype)
    filled = np.zeros(t_eval.size, dtype=bool)
    for a, b in zip(nodes[:-1], nodes[1:]):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=RTOL, atol=1e-14 * scale,
                        dense_output=True, max_step=MAX_STEP)
        if sol.status != 0:
            raise SolverError(f"ODE integration failed near r={math.exp(sol.t[-1]):.6g}: "
                              f"{sol.message}")
        lo, hi = min(a, b), max(a, b)
        sel = np.nonzero((t_eval >= lo) & (t_eval <= hi) & ~filled)[0]
        if sel.size:
            vals = sol.sol(t_eval[sel])
            out_v[sel] = vals[0]
            out_d[sel] = vals[1]
            filled[sel] = True
        y = sol.y[:, -1]
    return out_v, out_d, y


def _to_w(kappa: float, t: np.ndarray, vt: np.ndarray, vtd: np.ndarray):
    # v = e^{kappa t} vt, w = r^{1/2} v, dw/dr = r^{-1/2} (v/2 + v_t)
    e = np.exp(kappa * t)
    v = e * vt
    v_t = e * (kappa * vt + vtd)
    r = np.exp(t)
    return np.sqrt(r) * v, (0.5 * v + v_t) / np.sqrt(r)


def _from_w(kappa: float, t: float, w: complex, dw: complex):
    r = math.exp(t)
    v = w / math.sqrt(r)
    v_t = math.sqrt(r) * dw - 0.5 * v
    e = math.exp(-kappa * t)
    return e * v, e * (v_t - kappa * v)


def _regular_inner(ode: ReducedODE, t_eval: np.ndarray, t_end: float):
    """Frobenius start at the first grid point, outward to t_end."""
    nu = ode.mode.nu
    t0 = float(t_eval[0]) if t_eval.size else t_end
    r0 = math.exp(t0)
    V0 = ode.V.value_at_origin
    if abs(V0 - ode.sigma**2) * r0 * r0 > 1e-6:
        raise SolverError("grid.r_min too large for the series start of the regular solution")
    c = (V0 - ode.sigma**2) / (4 * (nu + 1))
    # vt = e^{-nu t} v with v = r^nu (1 + c r^2)
    y0 = (1.0 + c * r0 * r0, 2 * c * r0 * r0)
    vt, vtd, y_end = _integrate(ode, nu, t0, t_end, y0, t_eval)
    return vt, vtd, y_end


# ----------------------------------------------------------------------------- solutions

def regular_solution(ode: ReducedODE, grid: RadialGrid) -> RadialSolution:
    """Solution with w ~ r^{nu+1/2} as r -> 0.

    Beyond r_free it is continued exactly by the free solutions matched in
    value and derivative at r_free.
    """
    t = grid.t
    r_free = ode.r_free
    t_free = min(math.log(r_free), t[-1])
    inner = t <= t_free
    vt, vtd, y_end = _regular_inner(ode, t[inner], t_free)
    w = np.empty(grid.N)
    dw = np.empty(grid.N)
    w[inner], dw[inner] = _to_w(ode.mode.nu, t[inner], vt, vtd)
    outer = ~inner
    if np.any(outer):
        wf, dwf = _to_w(ode.mode.nu, np.array([t_free]), np.array([y_end[0]]),
                        np.array([y_end[1]]))
        alpha, beta = _match_free(ode, math.exp(t_free), float(wf[0]), float(dwf[0]))
        F1, dF1, F2, dF2 = _free_basis(ode, grid.r[outer])
        w[outer] = alpha * F1 + beta * F2
        dw[outer] = alpha * dF1 + beta * dF2
    return RadialSolution(grid=grid, w=w, dw=dw, r_free=r_free)


def _free_basis(ode: ReducedODE, r):
    """Real free solutions (F1, F1', F2, F2') with Wronskian F1 F2' - F1' F2 = const."""
    nu = ode.mode.nu
    r = np.asarray(r, dtype=float)
    if ode.sigma == 0:
        F1 = r ** (nu + 0.5)
        F2 = r ** (-nu + 0.5)
        return F1, (nu + 0.5) * F1 / r, F2, (-nu + 0.5) * F2 / r
    s = ode.sigma
    J, Y, dJ, dY = bessel_pair(nu, s * r)
    sq = np.sqrt(r)
    return sq * J, J / (2 * sq) + s * sq * dJ, sq * Y, Y / (2 * sq) + s * sq * dY


def _free_wronskian(ode: ReducedODE) -> float:
    return -2 * ode.mode.nu if ode.sigma == 0 else 2 / math.pi


def _match_free(ode: ReducedODE, r: float, w: float, dw: float):
    F1, dF1, F2, dF2 = (float(x) for x in _free_basis(ode, r))
    W12 = _free_wronskian(ode)
    alpha = (w * dF2 - dw * F2) / W12
    beta = (F1 * dw - dF1 * w) / W12
    return alpha, beta


def _outer_exact(ode: ReducedODE, r):
    """w and w' of the outgoing (sigma > 0) or decaying (sigma = 0) free solution."""
    r = np.asarray(r, dtype=float)
    nu = ode.mode.nu
    if ode.sigma == 0:
        w = r ** (-nu + 0.5)
        return w, (-nu + 0.5) * w / r
    s = ode.sigma
    H, dH = hankel_pair(ode.sign, nu, s * r)
    c = math.sqrt(math.pi * s / 2)
    sq = np.sqrt(r)
    return c * sq * H, c * (H / (2 * sq) + s * sq * dH)


def _inward_solution(ode: ReducedODE, grid: RadialGrid) -> RadialSolution:
    t = grid.t
    r_free = ode.r_free
    if r_free >= grid.r_max:
        raise SolverError(f"free radius {r_free:.6g} is not inside the grid (r_max={grid.r_max:.6g})")
    t_free = math.log(r_free)
    nu = ode.mode.nu
    complex_valued = ode.sigma > 0
    w = np.empty(grid.N, dtype=complex if complex_valued else float)
    dw = np.empty_like(w)
    outer = t > t_free
    w[outer], dw[outer] = _outer_exact(ode, grid.r[outer])
    w0, dw0 = _outer_exact(ode, r_free)
    y0 = _from_w(-nu, t_free, complex(w0) if complex_valued else float(w0),
                 complex(dw0) if complex_valued else float(dw0))
    inner = ~outer
    t_in = t[inner][::-1]
    vt, vtd, _ = _integrate(ode, -nu, t_free, float(t[0]), y0, t_in)
    wi, dwi = _to_w(-nu, t_in, vt, vtd)
    w[inner] = wi[::-1]
    dw[inner] = dwi[::-1]
    return RadialSolution(grid=grid, w=w, dw=dw, r_free=r_free)


def outgoing_solution(ode: ReducedODE, grid: RadialGrid) -> RadialSolution:
    """w = sqrt(pi sigma r / 2) H_nu^{(1)}(sigma r) for r >= r_free (H^{(2)} for sign=-1),
    integrated inward below r_free."""
    if ode.sigma <= 0:
        raise ValueError("outgoing solution needs sigma > 0")
    return _inward_solution(ode, grid)


def decaying_solution(mode: ModeSpec, V: PotentialSpec, grid: RadialGrid) -> RadialSolution:
    """Zero-energy solution equal to r^{-nu+1/2} beyond r_free."""
    return _inward_solution(ReducedODE(mode, V, 0.0), grid)


def green_pair(ode: ReducedODE, grid: RadialGrid) -> GreenPair:
    reg = regular_solution(ode, grid)
    out = outgoing_solution(ode, grid) if ode.sigma > 0 else _inward_solution(ode, grid)
    Wr = wronskian(reg, out)
    i = int(np.searchsorted(grid.r, min(ode.r_free, grid.r_max)) - 1)
    i = min(max(i, 0), grid.N - 1)
    W = complex(Wr[i])
    scale = float(max(abs(reg.w[i] * out.dw[i]), abs(reg.dw[i] * out.w[i])))
    spread = float(np.max(np.abs(Wr - W)) / abs(W)) if W != 0 else math.inf
    return GreenPair(w_reg=reg, w_out=out, W=W, wronskian_spread=spread, scale=scale)


# ----------------------------------------------------------------------------- Green operator

def _tail_integral(ode: ReducedODE, R: float, c: complex) -> complex:
    """int_R^inf w_out(s) s^{(n-1)/2} c s^{-nu-(n-2)/2} ds for the exact free continuation."""
    nu = ode.mode.nu
    if ode.sigma > 0:
        s = ode.sigma
        H = special.hankel1(nu - 1, s * R) if ode.sign > 0 else special.hankel2(nu - 1, s * R)
        return c * math.sqrt(math.pi * s / 2) * R ** (1 - nu) * H / s
    if nu <= 1:
        raise ValueError("zero-energy tail integral diverges for nu <= 1")
    return c * R ** (2 - 2 * nu) / (2 * nu - 2)


SPLINE_K = 5


def _antiderivative(t: np.ndarray, y: np.ndarray):
    # quintic interpolant: its quadrature error is smooth from node to node, so
    # finite differences of the result do not see a sawtooth as with Simpson
    spl = interpolate.make_interp_spline(t, y, k=min(SPLINE_K, t.size - 1))
    return spl.antiderivative()


def cumulative_piecewise(y: np.ndarray, t: np.ndarray, jumps: Sequence[float] = (),
                         node_side: str = "right") -> np.ndarray:
    """Cumulative integral of samples y(t) (t increasing) from t[0], y smooth between jumps.

    Each smooth segment is integrated through a quintic spline; across a jump
    the two one-sided splines are extrapolated to the jump. A node sitting
    exactly on a jump belongs to the segment named by ``node_side``.
    """
    side = "left" if node_side == "right" else "right"
    cuts = {}
    for tj in jumps:
        c = int(np.searchsorted(t, tj, side=side))
        if SPLINE_K < c < t.size - SPLINE_K:
            cuts[c] = tj
    out = np.empty(y.shape, dtype=complex if np.iscomplexobj(y) else float)
    start, offset, prev = 0, 0.0, None
    for c in [*sorted(cuts), t.size]:
        F = _antiderivative(t[start:c], y[start:c])
        if prev is not None:
            Fp, tj = prev
            offset = offset + (Fp(tj) - Fp(t[start - 1])) + (F(t[start]) - F(tj))
        out[start:c] = F(t[start:c]) - F(t[start]) + offset
        if c < t.size:
            offset = out[c - 1]
            prev = (F, cuts[c])
        start = c
    return out


def green_apply(ode: ReducedODE, grid: RadialGrid, f: ModeFunction,
                pair: GreenPair | None = None, jumps: Sequence[float] = ()) -> ModeFunction:
    """u = P_j(sigma)^{-1} f for one mode by variation of parameters.

    u(r) = -r^{-(n-1)/2} [w_out(r) int_0^r w_reg f~ + w_reg(r) int_r^inf w_out f~] / W,
    f~ = s^{(n-1)/2} f, W = w_reg w_out' - w_reg' w_out. For sigma = 0 the
    decaying solution takes the place of w_out. Integrals are cumulative
    quintic-spline quadratures in t, split at potential breakpoints and at ``jumps`` (radii
    where f is discontinuous); an exact tail c r^{-nu-(n-2)/2} of f beyond the grid is
    integrated analytically.
    """
    if f.grid != grid:
        raise ValueError("input lives on a different grid")
    if f.mode != ode.mode:
        raise ValueError("input mode does not match the ODE mode")
    if pair is None:
        pair = green_pair(ode, grid)
    if pair.relative_W < NEAR_SINGULAR:
        raise SolverError(f"near-singular Wronskian |W|/scale = {pair.relative_W:.3e}")
    n = ode.mode.n
    r, dt = grid.r, grid.dt
    ft = r ** ((n - 1) / 2) * f.samples * r
    tj = [math.log(x) for x in set(ode.V.breakpoints) | set(jumps) if x > 0]
    i1 = cumulative_piecewise(pair.w_reg.w * ft, grid.t, tj)
    # outgoing integral accumulated from r_max inward, in the variable -t
    i2 = cumulative_piecewise((pair.w_out.w * ft)[::-1], -grid.t[::-1], [-x for x in tj],
                              node_side="left")[::-1]
    if f.tail != 0:
        i2 = i2 + _tail_integral(ode, grid.r_max, f.tail)
    w = -(pair.w_out.w * i1 + pair.w_reg.w * i2) / pair.W
    tail = 0.0
    if ode.sigma == 0:
        # beyond the grid u = -I1(inf)/W r^{-nu+1/2} r^{-(n-1)/2}
        tail = complex(-i1[-1] / pair.W)
    return ModeFunction(mode=ode.mode, grid=grid, samples=r ** (-(n - 1) / 2) * w, tail=tail)


FD_STEP = 0.032
FD_PHASE = 0.2
FD_HALF = 5  # 11-point, 10th-order central stencils


def central_weights(half: int, deriv: int) -> np.ndarray:
    """Weights c_k, k = -half..half, with sum c_k y(k h) = h^deriv y^(deriv)(0) + O(h^{2 half+1})."""
    k = np.arange(-half, half + 1, dtype=float)
    A = np.vander(k, increasing=True).T
    rhs = np.zeros(2 * half + 1)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(A, rhs)


_D1 = central_weights(FD_HALF, 1)
_D2 = central_weights(FD_HALF, 2)


def _strides(ode: ReducedODE, grid: RadialGrid) -> np.ndarray:
    # per-point stencil step: about FD_STEP in t, but at most FD_PHASE radians of
    # outgoing phase sigma*r per step
    h = np.full(grid.N, FD_STEP)
    if ode.sigma > 0:
        h = np.minimum(h, FD_PHASE / (ode.sigma * grid.r))
    return np.maximum(1, np.rint(h / grid.dt)).astype(int)


def apply_operator(ode: ReducedODE, u: ModeFunction) -> np.ndarray:
    """P_j(sigma) u = Delta_j u + (V - sigma^2) u by 10th-order central differences in t.

    The stencil step is chosen per point (see ``_strides``) so that rounding
    noise in u is not amplified by 1/dt^2 on fine grids. Points whose stencil
    leaves the grid are NaN.
    """
    grid = u.grid
    y = u.samples
    strides = _strides(ode, grid)
    idx = np.arange(grid.N)
    ok = (idx - FD_HALF * strides >= 0) & (idx + FD_HALF * strides <= grid.N - 1)
    k = np.arange(-FD_HALF, FD_HALF + 1)
    s = strides[ok]
    window = y[idx[ok, None] + k[None, :] * s[:, None]]
    h = s * grid.dt
    ut = np.full(grid.N, np.nan, dtype=complex)
    utt = np.full(grid.N, np.nan, dtype=complex)
    ut[ok] = window @ _D1 / h
    utt[ok] = window @ _D2 / h**2
    lap = -(utt + (ode.mode.n - 2) * ut - ode.mode.lam * y) / grid.r**2
    Vr = potential_value(ode.V, grid.r)
    return lap + (Vr - ode.sigma**2) * y


def residual_mask(ode: ReducedODE, grid: RadialGrid,
                  breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Points whose stencil stays on the grid and off jumps of V or of the input
    (where u'' jumps)."""
    strides = _strides(ode, grid)
    idx = np.arange(grid.N)
    reach = FD_HALF * strides
    mask = (idx - reach >= 0) & (idx + reach <= grid.N - 1)
    for b in (*ode.V.breakpoints, *breakpoints):
        k = int(np.searchsorted(grid.r, b))
        mask &= np.abs(idx - k + 0.5) > reach + 1
    return mask


def green_residual(ode: ReducedODE, f: ModeFunction, u: ModeFunction,
                   breakpoints: Sequence[float] = ()) -> float:
    """Relative L^2(r^{n-1} dr) size of P_j(sigma) u - f; ``breakpoints`` lists
    radii where f jumps."""
    grid = u.grid
    mask = residual_mask(ode, grid, breakpoints)
    res = apply_operator(ode, u) - f.samples
    meas = grid.r ** ode.mode.n
    num = np.sum(np.abs(res[mask]) ** 2 * meas[mask])
    den = np.sum(np.abs(f.samples[mask]) ** 2 * meas[mask])
    return float(math.sqrt(num / den)) if den > 0 else float(math.sqrt(num))


@dataclass
class ResolventCache:
    """Memo of Green pairs keyed by (mode, V, sigma, sign, grid)."""

    pairs: dict

    def __init__(self):
        self.pairs = {}

    def get(self, ode: ReducedODE, grid: RadialGrid) -> GreenPair:
        key = (ode, grid)
        if key not in self.pairs:
            self.pairs[key] = green_pair(ode, grid)
        return self.pairs[key]


def resolvent_apply(f: Sequence[ModeFunction], sigma: float, sign: int, j_max: int,
                    V: PotentialSpec | None = None,
                    cache: ResolventCache | None = None) -> list[ModeFunction]:
    """Apply P(sigma +/- i0)^{-1} mode by mode."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    V = V if V is not None else PotentialSpec()
    cache = cache if cache is not None else ResolventCache()
    out = []
    for fj in f:
        if fj.mode.j > j_max:
            raise ValueError(f"mode j={fj.mode.j} exceeds j_max={j_max}")
        ode = ReducedODE(fj.mode, V, sigma, sign)
        out.append(green_apply(ode, fj.grid, fj, cache.get(ode, fj.grid)))
    return out


# ----------------------------------------------------------------------------- zero energy

def connection_coefficients(mode: ModeSpec, V: PotentialSpec, r_min: float = 1e-4,
                            factors: tuple[float, float] = (4.0, 16.0)) -> ConnectionCoefficients:
    """Fit w_reg = a r^{nu+1/2} + b r^{-nu+1/2} at r1 = 4 r_cut and r2 = 16 r_cut.

    Each coefficient comes from a Wronskian with the opposite free branch, so the
    fit is exact wherever V vanishes; ``mismatch`` is the relative disagreement
    between the two radii.
    """
    r_cut = V.cutoff_radius(0.0) or 1.0
    r1, r2 = factors[0] * r_cut, factors[1] * r_cut
    if r2 / r1 < 1.5:
        raise ValueError("matching radii too close for a conditioned fit")
    ode = ReducedODE(mode, V, 0.0)
    t_eval = np.array([math.log(r_min), math.log(r1), math.log(r2)])
    vt, vtd, _ = _regular_inner(ode, t_eval, float(t_eval[-1]))
    w, dw = _to_w(mode.nu, t_eval, vt, vtd)
    nu = mode.nu
    coeffs = []
    for k in (1, 2):
        r = math.exp(t_eval[k])
        F, dF = r ** (nu + 0.5), (nu + 0.5) * r ** (nu - 0.5)
        G, dG = r ** (-nu + 0.5), (-nu + 0.5) * r ** (-nu - 0.5)
        a = (w[k] * dG - dw[k] * G) / (-2 * nu)
        b = (F * dw[k] - dF * w[k]) / (-2 * nu)
        coeffs.append((float(a), float(b)))
    (a1, b1), (a2, b2) = coeffs
    size = max(abs(a2), abs(b2))
    mismatch = max(abs(a1 - a2), abs(b1 - b2)) / size if size > 0 else math.inf
    return ConnectionCoefficients(a=a2, b=b2, r1=r1, r2=r2, mismatch=mismatch)


def find_critical_coupling(mode: ModeSpec, family: PotentialSpec,
                           bracket: tuple[float, float], tol: float = 1e-10) -> float:
    """Coupling g* in the bracket where the growing coefficient a(g) vanishes."""
    g_lo, g_hi = bracket

    def a_of(g: float) -> float:
        return connection_coefficients(mode, family.with_coupling(g)).a

    a_lo, a_hi = a_of(g_lo), a_of(g_hi)
    if family.kind == "zero" or not (a_lo * a_hi < 0):
        raise ValueError(f"bracket {bracket} does not enclose a sign change of a(g) "
                         f"(a={a_lo:.3e}, {a_hi:.3e})")
    g_star = optimize.brentq(a_of, g_lo, g_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                             maxiter=200)
    if abs(a_of(g_star)) > tol:
        # brentq stops on x-tolerance; report rather than hide a loose root
        raise SolverError(f"root refinement stalled with |a| = {abs(a_of(g_star)):.3e}")
    return float(g_star)


def zero_energy_state(mode: ModeSpec, V: PotentialSpec, grid: RadialGrid,
                      regular_inside: bool = False) -> ModeFunction:
    """Decaying zero-energy solution u = r^{-(n-1)/2} w_dec, w_dec = r^{-nu+1/2} beyond r_free.

    At a critical coupling this is the half-bound state (j = 0, n = 3) or the
    bound state (j >= 1); ``tail`` carries the coefficient of r^{-nu-(n-2)/2}.
    With ``regular_inside`` the part below r_free is the regular solution scaled
    to match there. At a critical coupling the two agree, but inward integration
    picks up the singular branch at the size of the residual a(g) times
    r^{-2 nu}, which the regular form avoids.
    """
    sol = decaying_solution(mode, V, grid)
    w = sol.w
    if regular_inside:
        reg = regular_solution(ReducedODE(mode, V, 0.0), grid)
        k = int(np.searchsorted(grid.r, sol.r_free))
        w = np.where(np.arange(grid.N) < k, reg.w * (sol.w[k] / reg.w[k]), sol.w)
    samples = grid.r ** (-(mode.n - 1) / 2) * w
    return ModeFunction(mode=mode, grid=grid, samples=samples, tail=1.0)


def far_exponent(u: ModeFunction, r_lo: float, r_hi: float) -> float:
    """Least-squares slope of log|u| against log r on [r_lo, r_hi]."""
    sel = (u.grid.r >= r_lo) & (u.grid.r <= r_hi)
    if np.count_nonzero(sel) < 4:
        raise ValueError("too few grid points in the fit window")
    return float(np.polyfit(u.grid.t[sel], np.log(np.abs(u.samples[sel])), 1)[0])
