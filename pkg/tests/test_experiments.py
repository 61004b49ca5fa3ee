from __future__ import annotations

import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lowenergy.experiments import (SweepConfig, _b_ratio, _const_ratio, block_structure,
                                   combined_sweep, constant_weight_sweep, euclid_integral,
                                   euclid_richardson, fit_exponent, local_grid, resonant_state,
                                   resolvent_identity_error, sample_inputs, tilde_potential,
                                   uniform_sweep)
from lowenergy.geometry import PotentialSpec, RadialGrid, sphere_modes
from lowenergy.mellin_sobolev import WeightOrderSpec
from lowenergy.radial_resolvent import cumulative_piecewise, resolvent_apply

G0_STAR = math.pi**2 / 4
G1_STAR = math.pi**2  # j = 1: j_0(sqrt g) = 0 at the unit radius


# ----------------------------------------------------------------------------- Euclidean integral

def _exact(sign, eps):
    # 4 pi int_0^inf d rho / (rho^2 - z^2) = 2 pi^2 i / z for Im z > 0
    z = 1 + sign * 1j * eps
    return sign * 2j * math.pi**2 / z


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4, 1e-6])
def test_euclid_closed_form(eps):
    for sign in (1, -1):
        assert abs(euclid_integral(sign, eps) - _exact(sign, eps)) < 1e-9 * 2 * math.pi**2


def test_euclid_limit_and_symmetries():
    t0 = time.perf_counter()
    v = euclid_integral(1, 1e-4)
    assert time.perf_counter() - t0 < 1.0
    assert abs(v - 2j * math.pi**2) < 1e-3 * 2 * math.pi**2
    assert abs(v - euclid_integral(-1, 1e-4).conjugate()) < 1e-12
    # the real part is O(eps) and vanishes in the limit
    assert_allclose(v.real / 1e-4, 2 * math.pi**2, rtol=1e-6)
    assert abs(v.real) / abs(v) < 1e-3
    assert abs(euclid_richardson(1) - 2j * math.pi**2) < 1e-8 * 2 * math.pi**2


def test_euclid_validation():
    with pytest.raises(ValueError):
        euclid_integral(0, 1e-4)
    with pytest.raises(ValueError):
        euclid_integral(1, 0.0)
    with pytest.raises(ValueError):
        euclid_integral(1, 0.1)


# ----------------------------------------------------------------------------- inputs and fits

def test_sample_inputs_deterministic_and_band_limited():
    grid = RadialGrid.with_spacing(1e-4, 1e4, 0.01)
    modes = sphere_modes(3, 4)
    a, b = sample_inputs(modes, grid, 3), sample_inputs(modes, grid, 3)
    assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))
    c = sample_inputs(modes, grid, 4)
    assert not np.array_equal(a[0].samples, c[0].samples)
    for f in a:
        peak = np.max(np.abs(f.samples))
        assert_allclose(peak, 0.7 ** f.mode.j, rtol=1e-3)
        assert max(abs(f.samples[0]), abs(f.samples[-1])) < 1e-12 * peak
        # centre in [1, 3]
        assert 0.99 <= grid.r[np.argmax(np.abs(f.samples))] <= 3.01


def test_fit_exponent():
    s = np.logspace(-3, -1, 12)
    fit = fit_exponent(s, 5.0 * s**-1.3)
    assert_allclose(fit.slope, -1.3, atol=1e-12)
    assert_allclose(math.exp(fit.intercept), 5.0, rtol=1e-10)
    assert fit.residual < 1e-12 and fit.points == 6
    assert fit_exponent(s, s**2, decades=2).points == 12
    with pytest.raises(ValueError):
        fit_exponent(s, np.zeros(12))


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(sigmas=(0.1, 0.01))
    with pytest.raises(ValueError):
        SweepConfig(sigmas=(0.0, 0.1))
    with pytest.raises(ValueError):
        SweepConfig(sign=2)
    with pytest.raises(ValueError):
        uniform_sweep(SweepConfig(weight=WeightOrderSpec(l=0.0, beta=1.0)))
    with pytest.raises(ValueError):
        constant_weight_sweep(SweepConfig(), 0.0)


def test_ratios_are_scale_invariant():
    sigma = 0.05
    grid = RadialGrid.for_frequency(sigma)
    modes = sphere_modes(3, 2)
    f = sample_inputs(modes, grid, 0)
    u = resolvent_apply(f, sigma, 1, 2)
    f2 = [x.scale(-3.0 + 1j) for x in f]
    u2 = resolvent_apply(f2, sigma, 1, 2)
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    assert_allclose(_b_ratio(w)(u2, f2), _b_ratio(w)(u, f), rtol=1e-10)
    assert_allclose(_const_ratio(0.5)(u2, f2), _const_ratio(0.5)(u, f), rtol=1e-10)


# ----------------------------------------------------------------------------- sweeps

SMALL = dict(sigmas=(1e-3, 1e-2, 1e-1), j_max=2, seeds=(0, 1))


@pytest.fixture(scope="module")
def small_free_sweep():
    return combined_sweep(SweepConfig(**SMALL), 0.5)


def test_small_free_sweep_bounded(small_free_sweep):
    b, const = small_free_sweep
    for rep in (b, const):
        assert rep.ratios.shape == (3, 2)
        assert rep.variation < 3.0
        assert abs(rep.fit.slope) < 0.1
        assert rep.wronskian_spread < 1e-7 and rep.green_residual < 1e-5
    d = b.to_dict()
    assert d["variation"] == b.variation and len(d["max_ratio"]) == 3


def test_sweep_sign_symmetry(small_free_sweep):
    # for real inputs the incoming solve is the conjugate of the outgoing one; conjugation
    # reflects tau, so the matching weight is the mirrored variable order
    b, const = small_free_sweep
    w = SweepConfig().weight.flipped()
    bm, cm = combined_sweep(SweepConfig(**SMALL, sign=-1, weight=w), 0.5)
    assert_allclose(bm.ratios, b.ratios, rtol=1e-9)
    assert_allclose(cm.ratios, const.ratios, rtol=1e-9)


def test_combined_matches_separate(small_free_sweep):
    b, const = small_free_sweep
    cfg = SweepConfig(sigmas=(1e-2,), j_max=2, seeds=(0, 1))
    assert_allclose(uniform_sweep(cfg).ratios[0], b.ratios[1], rtol=1e-12)
    assert_allclose(constant_weight_sweep(cfg, 0.5).ratios[0], const.ratios[1], rtol=1e-12)


def test_zero_input_excluded():
    cfg = SweepConfig(sigmas=(0.1,), j_max=1, seeds=(0,), include_zero_input=True)
    rep = uniform_sweep(cfg)
    assert math.isnan(rep.ratios[0, -1]) and np.isfinite(rep.max_ratio[0])
    assert math.isnan(rep.fit.slope)


def test_resonant_sweep_blows_up():
    cfg = SweepConfig(potential=PotentialSpec("square_well", G0_STAR),
                      sigmas=tuple(np.logspace(-3, -2, 3)), j_max=1, seeds=(0,))
    rep = uniform_sweep(cfg)
    assert abs(rep.fit.slope + 1.0) < 0.05
    assert rep.green_residual < 1e-5


# ----------------------------------------------------------------------------- block structure

def test_tilde_potential():
    assert tilde_potential(PotentialSpec()) == PotentialSpec("barrier", 1.0)
    assert tilde_potential(PotentialSpec("square_well", 0.25)) == PotentialSpec("barrier", 0.75)
    assert tilde_potential(PotentialSpec("square_well", 3.0)) == PotentialSpec("square_well", 2.0)
    with pytest.raises(ValueError):
        tilde_potential(PotentialSpec("square_well", 1.0, a=2.0))


def test_resonant_state_normalization():
    grid = local_grid()
    V = PotentialSpec("square_well", G0_STAR)
    u0 = resonant_state(V, 0, grid)
    far = (grid.r > 2) & (grid.r < 8)
    # mode coefficient of 1/(4 pi r)
    assert_allclose(u0.samples[far].real * grid.r[far] * math.sqrt(4 * math.pi), 1.0, rtol=1e-8)
    # int (-V u0) over R^3 = 1
    F = -V(grid.r) * u0.samples.real
    flux = math.sqrt(4 * math.pi) * cumulative_piecewise(F * grid.r**3, grid.t, [0.0])[-1]
    assert_allclose(flux, 1.0, rtol=1e-6)


def test_resolvent_identity():
    V = PotentialSpec("square_well", G0_STAR)
    assert resolvent_identity_error(V, 0.1) < 1e-4


SIG = tuple(np.logspace(-3, -2, 5))


@pytest.fixture(scope="module")
def coarse_blocks():
    V0 = PotentialSpec("square_well", G0_STAR)
    V1 = PotentialSpec("square_well", G1_STAR)
    return [block_structure(V0, SIG, V1, dt=dt, identity_sigmas=()) for dt in (0.005, 0.0025)]


def test_block_exponents(coarse_blocks):
    rep = coarse_blocks[0]
    for name, e in rep.entries.items():
        if e.expected is not None and e.fit is not None and name != "regular":
            assert abs(e.fit.slope - e.expected) < 0.15, name
    assert rep.regular_variation < 3.0
    assert rep.leading_11_error < 0.1
    assert rep.wronskian_spread < 1e-7 and rep.green_residual < 1e-5
    assert not rep.diagnostics
    d = rep.to_dict()
    assert set(d["entries"]) == {"E11", "E11_inverse", "resonant_resolvent", "regular", "E22",
                                 "E22_inverse", "bound_resolvent"}


def test_block_grid_refinement(coarse_blocks):
    a, b = coarse_blocks
    for name in a.entries:
        fa, fb = a.entries[name].fit, b.entries[name].fit
        assert abs(fa.slope - fb.slope) < 0.05, name
    assert abs(a.leading_11 - b.leading_11) < 0.05 * abs(b.leading_11)
