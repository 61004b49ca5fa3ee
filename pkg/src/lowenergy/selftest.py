"""Fast closed-form checks run by ``lowenergy selftest``."""
from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np

from . import specfun
from .experiments import SweepConfig, _const_ratio, _sweep, euclid_integral
from .geometry import PotentialSpec, RadialGrid, potential_value, sphere_modes
from .mellin_sobolev import (ModeFunction, WeightOrderSpec, b_norm, flow_derivative,
                             mellin_transform, order_value, weighted_L2_norm)
from .positivity import (PositivityGrid, PositivityParams, arg_terms, commutator_multiplier, theta_total,
                         verify_positivity)
from .radial_resolvent import (ReducedODE, connection_coefficients, find_critical_coupling,
                               green_apply, green_residual, outgoing_solution, reduced_potential,
                               regular_solution, resolvent_apply)

_CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = []


def check(fn):
    _CHECKS.append((fn.__name__, fn))
    return fn


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


GRID = RadialGrid.with_spacing(1e-4, 200.0, 0.005)


def _bump(grid, c=1.5, w=0.6):
    return np.exp(-((grid.t - math.log(c)) / w) ** 2)


@check
def bessel_closed_forms():
    x = np.linspace(0.1, 20, 50)
    e1 = _rel(specfun.cyl_bessel("J", 0.5, math.pi / 2), 2 / math.pi)
    e2 = _rel(specfun.cyl_bessel("H1", 0.5, x), -1j * np.sqrt(2 / (math.pi * x)) * np.exp(1j * x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", specfun.AccuracyWarning)
        e3 = abs(specfun.cyl_bessel("J", 0.0, 1e-12) - 1.0)
    return max(e1, e2) < 1e-13 and e3 < 1e-10, f"closed-form error {max(e1, e2, e3):.2e}"


@check
def sphere_spectrum():
    m3 = [(m.j, m.lam, m.nu, m.mult) for m in sphere_modes(3, 2)]
    m4 = [(m.j, m.lam, m.nu, m.mult) for m in sphere_modes(4, 1)]
    ok = m3 == [(0, 0.0, 0.5, 1), (1, 2.0, 1.5, 3), (2, 6.0, 2.5, 5)]
    ok &= m4 == [(0, 0.0, 1.0, 1), (1, 3.0, 2.0, 4)]
    ok &= all(sphere_modes(n, 0)[0].nu == (n - 2) / 2 for n in range(3, 9))
    return ok, f"n=3: {m3}"


@check
def potential_values():
    a = potential_value(PotentialSpec("square_well", 2.0, 1.0), 0.5)
    b = potential_value(PotentialSpec(), 3.0)
    c = potential_value(PotentialSpec("inverse_poly", 1.0, s=3.0), 1.0)
    return a == -2.0 and b == 0.0 and abs(c - 2 ** -1.5) < 1e-15, f"{a}, {b}, {c}"


@check
def order_function_values():
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    vals = [order_value(w, 5, 0), order_value(w, 0, 4), order_value(w, 1, 1)]
    ok = _rel(vals, [1.5, 0.5, 0.5 + 1 / math.sqrt(2)]) < 1e-15
    ok &= flow_derivative(w, 3.0, 0.0) == 0.0
    return ok, f"{vals}"


@check
def mellin_parseval():
    m = sphere_modes(3, 0)[0]
    u = ModeFunction(m, GRID, _bump(GRID))
    spec = mellin_transform(u)
    lhs = float(np.sum(np.abs(u.samples) ** 2) * GRID.dt)
    z = mellin_transform(ModeFunction(m, GRID, np.zeros(GRID.N)))
    return abs(spec.l2_norm_sq() - lhs) / lhs < 1e-8 and not np.any(z.amplitudes), \
        f"Parseval mismatch {abs(spec.l2_norm_sq() - lhs) / lhs:.2e}"


@check
def norm_basics():
    modes = sphere_modes(3, 2)
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    u = [ModeFunction(m, GRID, 0.7 ** m.j * _bump(GRID, 1 + m.j)) for m in modes]
    zero = [ModeFunction(m, GRID, np.zeros(GRID.N)) for m in modes]
    ok = b_norm(zero, w) == 0 and weighted_L2_norm(zero, 1.0) == 0
    ok &= b_norm(u, w, order_shift=-1.0) <= b_norm(u, w)
    c = -2.5
    e = abs(weighted_L2_norm([x.scale(c) for x in u], 1.5) - abs(c) * weighted_L2_norm(u, 1.5))
    return ok and e < 1e-12 * weighted_L2_norm(u, 1.5), f"homogeneity error {e:.2e}"


@check
def positivity_symmetries():
    p = PositivityParams(3, -1.0, 1.0, 1, 0.0, 2.0, 2.0, 2.0)
    q = PositivityParams(3, -1.0, 1.0, -1, 0.0, 2.0, 2.0, 2.0)
    tau = np.linspace(-30, 30, 61)
    nu = np.linspace(0, 30, 31)
    T, Nu = np.meshgrid(tau, nu, indexing="ij")
    a = arg_terms(T, Nu, p)
    ok = np.all(a.III == 0) and np.all(a.IV == 0)
    ok &= np.allclose(theta_total(T, Nu, q), -theta_total(T, Nu, p), atol=1e-14)
    p2 = PositivityParams(3, -0.6, 1.0, 1, 0.0, 2.0, 64.0, 64.0)
    c = commutator_multiplier(T, Nu**2, p2)
    ok &= np.array_equal(c < 0, np.sin(theta_total(T, Nu, p2)) > 0)
    return bool(ok), "III, IV vanish; Theta flips with the sign; polar sign relation"


@check
def positivity_mirror():
    p = PositivityParams(3, -1.0, 1.0, 1, 0.0, 2.0, 2.0, 2.0)
    g = PositivityGrid(n_tau=100, n_nu=100)
    r1, r2 = verify_positivity(p, g), verify_positivity(p.mirrored(), g)
    ok = r1.passed and r2.passed and r2.max_theta < 0 and r2.min_theta > -math.pi
    return ok, f"sign=+ [{r1.min_theta:.3f}, {r1.max_theta:.3f}], " \
               f"sign=- [{r2.min_theta:.3f}, {r2.max_theta:.3f}]"


@check
def reduced_potential_values():
    m3, m4 = sphere_modes(3, 1), sphere_modes(4, 0)
    V0 = PotentialSpec()
    vals = [reduced_potential(m3[1], V0, 0.0, 2.0), reduced_potential(m3[0], V0, 0.3, 7.0),
            reduced_potential(m4[0], V0, 0.0, 1.0)]
    return _rel(vals, [0.5, -0.09, 0.75]) < 1e-14, f"{vals}"


@check
def free_solutions():
    m = sphere_modes(3, 2)[2]
    V0 = PotentialSpec()
    reg0 = regular_solution(ReducedODE(m, V0, 0.0), GRID)
    e0 = _rel(reg0.w, GRID.r ** (m.nu + 0.5))
    sigma = 0.5
    reg = regular_solution(ReducedODE(m, V0, sigma), GRID)
    ref = np.sqrt(GRID.r) * specfun.cyl_bessel("J", m.nu, sigma * GRID.r, warn=False).real
    corr = abs(np.dot(reg.w, ref)) / (np.linalg.norm(reg.w) * np.linalg.norm(ref))
    out = outgoing_solution(ReducedODE(m, V0, sigma, 1), GRID)
    x = sigma * GRID.r
    h = np.sqrt(math.pi * x / 2) * specfun.cyl_bessel("H1", m.nu, x, warn=False)
    e1 = _rel(out.w, h)
    # unimodular far field; the 1/x^2 correction carries a factor 4 nu^2 - 1
    m0 = sphere_modes(3, 0)[0]
    far = outgoing_solution(ReducedODE(m0, V0, 10.0 / GRID.r_max, 1), GRID)
    e2 = abs(abs(far.w[-1]) - 1)
    back = outgoing_solution(ReducedODE(m, V0, sigma, -1), GRID)
    e3 = _rel(back.w, out.w.conj())
    ok = e0 < 1e-8 and corr > 1 - 1e-8 and e1 < 1e-8 and e2 < 1e-4 and e3 < 1e-12
    return ok, f"Euler {e0:.1e}, corr 1-{1 - corr:.1e}, Hankel {e1:.1e}, |w|-1 {e2:.1e}"


@check
def square_well_interior():
    m = sphere_modes(3, 0)[0]
    g = 1.7
    reg = regular_solution(ReducedODE(m, PotentialSpec("square_well", g)), GRID)
    r = GRID.r[GRID.r < 0.99]
    w = reg.w[: r.size]
    ref = np.sin(math.sqrt(g) * r)
    scale = np.dot(w, ref) / np.dot(ref, ref)
    return _rel(w, scale * ref) < 1e-8, f"interior mismatch {_rel(w, scale * ref):.1e}"


@check
def green_operator():
    m = sphere_modes(3, 1)[1]
    sigma = 0.4
    grid = RadialGrid.for_frequency(sigma, far_factor=100)
    V = PotentialSpec("square_well", 3.0)
    ode = ReducedODE(m, V, sigma, 1)
    f = ModeFunction(m, grid, _bump(grid))
    g = ModeFunction(m, grid, _bump(grid, 2.5, 0.8))
    u, v = green_apply(ode, grid, f), green_apply(ode, grid, g)
    res = green_residual(ode, f, u)
    # symmetric kernel: <G f, g> = <f, G g> in the bilinear pairing
    w = grid.r ** 3
    a = np.sum(u.samples * g.samples * w)
    b = np.sum(f.samples * v.samples * w)
    sym = abs(a - b) / abs(a)
    lin = _rel(green_apply(ode, grid, f + g).samples, u.samples + v.samples)
    conj = _rel(resolvent_apply([f], sigma, -1, 1, V)[0].samples, u.samples.conj())
    ok = res < 1e-5 and sym < 1e-8 and lin < 1e-10 and conj < 1e-10
    return ok, f"residual {res:.1e}, symmetry {sym:.1e}, linearity {lin:.1e}, conj {conj:.1e}"


@check
def zero_energy_free():
    cc = connection_coefficients(sphere_modes(3, 0)[0], PotentialSpec())
    try:
        find_critical_coupling(sphere_modes(3, 0)[0], PotentialSpec(), (1.0, 2.0))
        raised = False
    except ValueError:
        raised = True
    return abs(cc.a - 1) < 1e-10 and abs(cc.b) < 1e-10 and raised, f"(a, b) = ({cc.a}, {cc.b})"


@check
def euclid_conjugation():
    a, b = euclid_integral(1, 1e-4), euclid_integral(-1, 1e-4)
    return abs(a - b.conjugate()) < 1e-12 and a.imag > 0, f"{a:.6f}, {b:.6f}"


@check
def sweep_trivial_input_and_weights():
    base = SweepConfig(sigmas=(0.1,), j_max=1, seeds=(0,), include_zero_input=True)
    reps = _sweep(base, {"a": _const_ratio(0.5), "b": _const_ratio(1.0)})
    ra, rb = reps["a"].ratios, reps["b"].ratios
    ok = math.isnan(ra[0, -1]) and np.isfinite(reps["a"].max_ratio[0])
    ok &= bool(np.all(rb[:, :-1] <= ra[:, :-1]))
    return ok, f"ratios beta=0.5 {ra[0, 0]:.4g}, beta=1 {rb[0, 0]:.4g}"


def run_checks() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in _CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
