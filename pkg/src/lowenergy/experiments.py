"""Low-energy experiments: the explicit Euclidean integral, uniform norm-ratio
sweeps, constant-weight sweeps and the block structure at critical coupling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .geometry import ModeSpec, PotentialSpec, RadialGrid, sphere_modes
from .mellin_sobolev import (ModeFunction, WeightOrderSpec, b_norm, pairing,
                             weighted_L2_norm)
from .radial_resolvent import (ReducedODE, ResolventCache, green_apply, green_pair,
                               green_residual, resolvent_apply, zero_energy_state)

# ----------------------------------------------------------------------------- Euclidean integral


def _quad_complex(fun, a: float, b: float, eps: float) -> complex:
    opts = dict(limit=2000, epsabs=1e-13, epsrel=1e-12)
    pts = None
    if math.isfinite(b):
        pts = [p for p in (1.0 - 10 * eps, 1.0 + 10 * eps) if a < p < b] or None
    re, err_re = integrate.quad(lambda x: fun(x).real, a, b, points=pts, **opts) \
        if pts else integrate.quad(lambda x: fun(x).real, a, b, **opts)
    im, err_im = integrate.quad(lambda x: fun(x).imag, a, b, points=pts, **opts) \
        if pts else integrate.quad(lambda x: fun(x).imag, a, b, **opts)
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ArithmeticError("quadrature did not converge")
    return complex(re, im)


def euclid_integral(sign: int = 1, eps: float = 1e-4) -> complex:
    """4 pi int_0^inf (rho^2 - (1 + sign i eps)^2)^{-1} d rho by adaptive quadrature."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not (0 < eps <= 1e-2):
        raise ValueError("eps must lie in (0, 1e-2]")
    z2 = (1.0 + sign * 1j * eps) ** 2

    def fun(x):
        return 1.0 / (x * x - z2)

    # the far piece is mapped to (0, 1] through rho = 1/s
    near = _quad_complex(fun, 0.0, 1.0, eps)
    far = _quad_complex(lambda s: fun(1.0 / s) / (s * s), 0.0, 1.0, eps)
    return 4 * math.pi * (near + far)


def euclid_richardson(sign: int = 1, eps_list: Sequence[float] = (1e-2, 1e-3, 1e-4)) -> complex:
    """Richardson extrapolation to eps -> 0 assuming an expansion in powers of eps."""
    eps = np.asarray(eps_list, dtype=float)
    vals = np.array([euclid_integral(sign, e) for e in eps])
    # polynomial in eps through all points, evaluated at 0 (Neville)
    table = vals.copy()
    for k in range(1, len(eps)):
        for i in range(len(eps) - k):
            table[i] = (eps[i + k] * table[i] - eps[i] * table[i + 1]) / (eps[i + k] - eps[i])
    return complex(table[0])


# ----------------------------------------------------------------------------- sample inputs


def sample_inputs(modes: Sequence[ModeSpec], grid: RadialGrid, seed: int) -> list[ModeFunction]:
    """Band-limited radial bumps exp(-(log(r/c)/w)^2), one per mode.

    Centers c ~ U(1, 3), log-widths w ~ U(0.5, 1) and amplitudes 0.7^j times a
    random sign; the draw depends only on the seed. The Mellin transform of each
    bump is Gaussian and the profile vanishes to all orders at r = 0 and r = inf.
    """
    rng = np.random.default_rng(seed)
    out = []
    for m in modes:
        c = rng.uniform(1.0, 3.0)
        w = rng.uniform(0.5, 1.0)
        amp = 0.7 ** m.j * rng.choice((-1.0, 1.0))
        out.append(ModeFunction(m, grid, amp * np.exp(-((grid.t - math.log(c)) / w) ** 2)))
    return out


# ----------------------------------------------------------------------------- fits


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    points: int


def fit_exponent(sigmas, values, decades: float = 1.0) -> ExponentFit:
    """Least-squares slope of log|values| against log sigma over the lowest decade(s)."""
    s = np.asarray(sigmas, dtype=float)
    v = np.abs(np.asarray(values))
    sel = (s <= s.min() * 10 ** decades * (1 + 1e-9)) & (v > 0)
    if np.count_nonzero(sel) < 2:
        raise ValueError("need at least two nonzero points in the fit window")
    x, y = np.log(s[sel]), np.log(v[sel])
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(float(res[0]) / x.size) if res.size else 0.0
    return ExponentFit(float(coef[0]), float(coef[1]), rms, int(x.size))


# ----------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    weight: WeightOrderSpec = field(default_factory=lambda: WeightOrderSpec(l=-1.0, beta=1.0))
    sigmas: tuple[float, ...] = tuple(np.logspace(-3, -1, 12))
    sign: int = 1
    j_max: int = 8
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    include_zero_input: bool = False

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float)
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("sigma values must be positive and strictly increasing")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.j_max < 0:
            raise ValueError("j_max must be non-negative")
        object.__setattr__(self, "sigmas", tuple(float(x) for x in s))
        object.__setattr__(self, "seeds", tuple(int(x) for x in self.seeds))


@dataclass(frozen=True)
class SweepReport:
    sigmas: tuple[float, ...]
    ratios: np.ndarray            # shape (len(sigmas), inputs); NaN for excluded inputs
    max_ratio: np.ndarray
    fit: ExponentFit
    wronskian_spread: float
    green_residual: float

    @property
    def variation(self) -> float:
        return float(np.max(self.max_ratio) / np.min(self.max_ratio))

    def to_dict(self) -> dict:
        return {
            "sigma": list(self.sigmas),
            "ratios": [[None if math.isnan(x) else float(x) for x in row] for row in self.ratios],
            "max_ratio": [float(x) for x in self.max_ratio],
            "slope": self.fit.slope,
            "slope_residual": self.fit.residual,
            "variation": self.variation,
            "wronskian_spread": self.wronskian_spread,
            "green_residual": self.green_residual,
        }


def _sweep(cfg: SweepConfig, ratio_fns: dict) -> dict:
    modes = sphere_modes(cfg.weight.n, cfg.j_max)
    rows = {k: [] for k in ratio_fns}
    spread, resid = 0.0, 0.0
    for sigma in cfg.sigmas:
        grid = RadialGrid.for_frequency(sigma)
        cache = ResolventCache()
        inputs = [sample_inputs(modes, grid, s) for s in cfg.seeds]
        if cfg.include_zero_input:
            inputs.append([ModeFunction(m, grid, np.zeros(grid.N)) for m in modes])
        row = {k: [] for k in ratio_fns}
        for i, f in enumerate(inputs):
            if not any(np.any(fj.samples) for fj in f):
                for k in ratio_fns:
                    row[k].append(math.nan)  # 0/0 is excluded from the max
                continue
            u = resolvent_apply(f, sigma, cfg.sign, cfg.j_max, cfg.potential, cache)
            for k, fn in ratio_fns.items():
                row[k].append(fn(u, f))
            if i == 0:
                for fj, uj in zip(f, u):
                    ode = ReducedODE(fj.mode, cfg.potential, sigma, cfg.sign)
                    resid = max(resid, green_residual(ode, fj, uj))
        for pair in cache.pairs.values():
            spread = max(spread, pair.wronskian_spread)
        for k in ratio_fns:
            rows[k].append(row[k])
    out = {}
    for k in ratio_fns:
        ratios = np.array(rows[k], dtype=float)
        max_ratio = np.nanmax(ratios, axis=1)
        fit = (fit_exponent(cfg.sigmas, max_ratio) if len(cfg.sigmas) > 1
               else ExponentFit(math.nan, math.nan, math.nan, 1))
        out[k] = SweepReport(cfg.sigmas, ratios, max_ratio, fit, spread, resid)
    return out


def _b_ratio(w: WeightOrderSpec):
    def ratio(u, f):
        return b_norm(u, w) / b_norm(f, w, order_shift=-1.0, decay_shift=2.0)
    return ratio


def _const_ratio(beta: float):
    def ratio(u, f):
        return weighted_L2_norm(u, -(1.0 + beta)) / weighted_L2_norm(f, 1.0 + beta)
    return ratio


def uniform_sweep(cfg: SweepConfig) -> SweepReport:
    """||u||_{H_b^{r~, l}} / ||f||_{H_b^{r~-1, l+2}} with u = P(sigma +/- i0)^{-1} f."""
    cfg.weight.require_admissible()
    return _sweep(cfg, {"b": _b_ratio(cfg.weight)})["b"]


def constant_weight_sweep(cfg: SweepConfig, beta: float) -> SweepReport:
    """||<r>^{-1-beta} u||_{L^2} / ||<r>^{1+beta} f||_{L^2}."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _sweep(cfg, {"const": _const_ratio(beta)})["const"]


def combined_sweep(cfg: SweepConfig, beta: float) -> tuple[SweepReport, SweepReport]:
    """Both sweeps from one set of solves: (variable order, constant weight)."""
    cfg.weight.require_admissible()
    if beta <= 0:
        raise ValueError("beta must be positive")
    out = _sweep(cfg, {"b": _b_ratio(cfg.weight), "const": _const_ratio(beta)})
    return out["b"], out["const"]


# ----------------------------------------------------------------------------- block structure

BLOCK_SIGMAS = tuple(np.logspace(-3, -1, 17))
DEGENERATE = 1e-8


def local_grid(dt: float = 0.005, r_max: float = 10.0) -> RadialGrid:
    """Grid for pairings against compactly supported data (V u lives in r < a)."""
    return RadialGrid.with_spacing(1e-4, r_max, dt)


@dataclass(frozen=True)
class BlockEntry:
    name: str
    values: np.ndarray          # complex, one per sigma
    fit: ExponentFit | None
    expected: float | None
    note: str = ""


@dataclass(frozen=True)
class BlockReport:
    sigmas: tuple[float, ...]
    entries: dict
    leading_11: complex          # fitted lim sigma / E11(sigma)
    leading_11_error: float      # relative deviation from 4 pi i
    regular_variation: float
    identity_errors: dict
    wronskian_spread: float = 0.0
    green_residual: float = 0.0
    diagnostics: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        ent = {}
        for k, e in self.entries.items():
            ent[k] = {
                "re": [float(x.real) for x in e.values],
                "im": [float(x.imag) for x in e.values],
                "exponent": None if e.fit is None else e.fit.slope,
                "fit_residual": None if e.fit is None else e.fit.residual,
                "expected": e.expected,
                "note": e.note,
            }
        return {
            "sigma": list(self.sigmas),
            "entries": ent,
            "leading_11": [self.leading_11.real, self.leading_11.imag],
            "leading_11_error": self.leading_11_error,
            "regular_variation": self.regular_variation,
            "identity_errors": {str(k): v for k, v in self.identity_errors.items()},
            "wronskian_spread": self.wronskian_spread,
            "green_residual": self.green_residual,
            "diagnostics": list(self.diagnostics),
        }


def _pair1(u: ModeFunction, v: ModeFunction) -> complex:
    # one harmonic: the multiplicity is not included
    return pairing([u], [v]) / u.mode.mult


def _bilinear(u: ModeFunction, v: ModeFunction) -> complex:
    # <u, conj v>: the symmetric form in which the outgoing resolvent is symmetric
    return _pair1(u, v.conj())


@dataclass
class _Fidelity:
    """Worst Wronskian spread and Green residual over a set of solves."""

    spread: float = 0.0
    residual: float = 0.0
    breakpoints: tuple[float, ...] = ()

    def solve(self, F: ModeFunction, V: PotentialSpec, sigma: float, sign: int) -> ModeFunction:
        ode = ReducedODE(F.mode, V, sigma, sign)
        pair = green_pair(ode, F.grid)
        u = green_apply(ode, F.grid, F, pair)
        self.spread = max(self.spread, pair.wronskian_spread)
        self.residual = max(self.residual, green_residual(ode, F, u, self.breakpoints))
        return u


def resonant_state(V: PotentialSpec, j: int, grid: RadialGrid, n: int = 3) -> ModeFunction:
    """Zero-energy state of mode j; for j = 0 scaled so that, as a function on R^n,
    its far field is 1/(4 pi r) (mode coefficient 1/(sqrt(4 pi) r) when n = 3)."""
    mode = sphere_modes(n, j)[j]
    u = zero_energy_state(mode, V, grid, regular_inside=True)
    if j == 0:
        area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        u = u.scale(1.0 / (area * (n - 2)) * math.sqrt(area))
    return u


def block_structure(V: PotentialSpec, sigmas: Sequence[float] = BLOCK_SIGMAS,
                    V_bound: PotentialSpec | None = None, sign: int = 1,
                    dt: float = 0.005, identity_sigmas: Sequence[float] = (1e-2, 1e-1),
                    seed: int = 0) -> BlockReport:
    """Pairings of the low-energy resolvent in the regular / resonant / bound-state splitting.

    ``V`` is at a j = 0 critical coupling (half-bound state); ``V_bound``, if
    given, is at a j = 1 critical coupling (bound state). The comparison
    operator for the 11 and 22 entries is the free Laplacian, which is
    invertible at zero energy in n = 3 and differs from P by the compactly
    supported V.
    """
    n = 3
    sigmas = tuple(float(s) for s in sigmas)
    grid = local_grid(dt)
    diags: list[str] = []
    entries: dict[str, BlockEntry] = {}
    modes = sphere_modes(n, 1)

    u0 = resonant_state(V, 0, grid, n)
    F0 = ModeFunction(u0.mode, grid, -V(grid.r) * u0.samples)
    flux = _bilinear(F0, ModeFunction(u0.mode, grid, np.ones(grid.N)))
    # int F0 over R^3 = sqrt(4 pi) int F0(r) r^2 dr; normalization makes it 1
    flux_full = complex(flux) * math.sqrt(4 * math.pi)
    if abs(abs(flux_full) - 1.0) > 1e-3:
        diags.append(f"resonant state normalization off: int V u = {flux_full:.6g}")

    def fitted(name, vals, expected):
        vals = np.asarray(vals, dtype=complex)
        if np.min(np.abs(vals)) < DEGENERATE:
            diags.append(f"{name}: degenerate pairing, exponent suppressed")
            return BlockEntry(name, vals, None, expected, "degenerate")
        return BlockEntry(name, vals, fit_exponent(sigmas, vals), expected)

    # V u jumps where V does
    fid = _Fidelity(breakpoints=V.breakpoints + (V_bound.breakpoints if V_bound else ()))
    free = PotentialSpec()

    def difference(F, s):
        # (R_0(0) - R_0(sigma)) F with R_0 the free resolvent
        return fid.solve(F, free, 0.0, sign) - fid.solve(F, free, s, sign)

    e11 = np.array([_bilinear(difference(F0, s), F0) for s in sigmas])
    entries["E11"] = fitted("E11", e11, 1.0)
    entries["E11_inverse"] = fitted("E11_inverse", 1.0 / e11, -1.0)
    res0 = np.array([_bilinear(fid.solve(F0, V, s, sign), F0) for s in sigmas])
    entries["resonant_resolvent"] = fitted("resonant_resolvent", res0, -1.0)

    # leading coefficient of the inverse 11 entry from the lowest decade
    lowest = np.asarray(sigmas) <= min(sigmas) * 10 * (1 + 1e-9)
    lead = complex(np.mean((np.asarray(sigmas) / e11)[lowest][:3]))
    lead_err = abs(lead - 4j * math.pi) / (4 * math.pi)

    # regular block: a generic input orthogonal to the resonant state
    f1, f2 = sample_inputs(modes[:1], grid, seed)[0], sample_inputs(modes[:1], grid, seed + 1)[0]
    c = _pair1(f1, u0.conj()) / _pair1(f2, u0.conj())
    fperp = f1 - f2.scale(c)
    reg = np.array([_bilinear(fid.solve(fperp, V, s, sign), fperp) for s in sigmas])
    entries["regular"] = BlockEntry("regular", reg, fit_exponent(sigmas, reg), 0.0)
    reg_var = float(np.max(np.abs(reg)) / np.min(np.abs(reg)))

    if V_bound is not None:
        u1 = resonant_state(V_bound, 1, grid, n)
        F1 = ModeFunction(u1.mode, grid, -V_bound(grid.r) * u1.samples)
        e22 = np.array([_bilinear(difference(F1, s), F1) for s in sigmas])
        entries["E22"] = fitted("E22", e22, 2.0)
        entries["E22_inverse"] = fitted("E22_inverse", 1.0 / e22, -2.0)
        res1 = np.array([_bilinear(fid.solve(F1, V_bound, s, sign), F1) for s in sigmas])
        entries["bound_resolvent"] = fitted("bound_resolvent", res1, -2.0)

    ident = {s: resolvent_identity_error(V, s, sign, seed=seed) for s in identity_sigmas}
    return BlockReport(sigmas, entries, lead, lead_err, reg_var, ident,
                       fid.spread, fid.residual, tuple(diags))


# ----------------------------------------------------------------------------- resolvent identity

def tilde_potential(V: PotentialSpec) -> PotentialSpec:
    """V + V_+ with the repulsive bump V_+ = +1 on r < 1 (unit-radius wells only)."""
    if V.kind == "zero" or V.g == 0:
        return PotentialSpec(kind="barrier", g=1.0, a=1.0)
    if V.kind not in ("square_well", "barrier") or V.a != 1.0:
        raise ValueError("the repulsive shift is implemented for unit-radius wells")
    level = (V.g if V.kind == "barrier" else -V.g) + 1.0
    if level >= 0:
        return PotentialSpec(kind="barrier", g=level, a=1.0)
    return PotentialSpec(kind="square_well", g=-level, a=1.0)


def resolvent_identity_error(V: PotentialSpec, sigma: float, sign: int = 1, j_max: int = 2,
                             seed: int = 0, w_exp: float = -1.5) -> float:
    """Relative size of (P~(0)^{-1} - P~(sigma)^{-1}) f + sigma^2 P~(sigma)^{-1} P~(0)^{-1} f.

    P~ = Delta + V + V_+ with a repulsive unit bump V_+, so that P~(0) is
    invertible. Compared in <r>^{w_exp} L^2 on a sigma-adapted grid.
    """
    Vt = tilde_potential(V)
    grid = RadialGrid.for_frequency(sigma)
    modes = sphere_modes(3, j_max)
    f = sample_inputs(modes, grid, seed)
    a = resolvent_apply(f, 0.0, sign, j_max, Vt)
    b = resolvent_apply(f, sigma, sign, j_max, Vt)
    c = resolvent_apply(a, sigma, sign, j_max, Vt)
    lhs = [x - y for x, y in zip(a, b)]
    rhs = [z.scale(-sigma * sigma) for z in c]
    diff = [x - y for x, y in zip(lhs, rhs)]
    den = weighted_L2_norm(lhs, w_exp)
    return weighted_L2_norm(diff, w_exp) / den
