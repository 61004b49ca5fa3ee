from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from lowenergy.geometry import (ModeSpec, PotentialSpec, RadialGrid, custom_modes, potential_value,
                                sphere_modes)


def test_sphere_modes_n3():
    got = [(m.j, m.lam, m.nu, m.mult) for m in sphere_modes(3, 3)]
    assert got == [(0, 0.0, 0.5, 1), (1, 2.0, 1.5, 3), (2, 6.0, 2.5, 5), (3, 12.0, 3.5, 7)]


def test_sphere_modes_n4():
    got = [(m.j, m.lam, m.nu, m.mult) for m in sphere_modes(4, 2)]
    assert got == [(0, 0.0, 1.0, 1), (1, 3.0, 2.0, 4), (2, 8.0, 3.0, 9)]


@given(n=st.integers(3, 9), j_max=st.integers(0, 12))
def test_multiplicities_count_polynomials(n, j_max):
    # harmonics of degree <= J restricted to the sphere span all polynomials of degree <= J
    # modulo |x|^2, whose count is C(J+n-1, n-1) + C(J+n-2, n-1)
    modes = sphere_modes(n, j_max)
    total = sum(m.mult for m in modes)
    assert total == math.comb(j_max + n - 1, n - 1) + math.comb(j_max + n - 2, n - 1)


@given(n=st.integers(3, 9), j_max=st.integers(0, 12))
def test_indicial_roots(n, j_max):
    for m in sphere_modes(n, j_max):
        assert_allclose(m.nu, math.sqrt(((n - 2) / 2) ** 2 + m.lam), rtol=1e-15)


def test_custom_modes_sorted_and_roots():
    modes = custom_modes(5, [(10.0, 2), (0.0, 1), (4.0, 3)])
    assert [m.lam for m in modes] == [0.0, 4.0, 10.0]
    assert [m.mult for m in modes] == [1, 3, 2]
    assert_allclose([m.nu for m in modes], [1.5, 2.5, math.sqrt(12.25)])


def test_mode_validation():
    with pytest.raises(ValueError):
        sphere_modes(2, 3)
    with pytest.raises(ValueError):
        sphere_modes(3, -1)
    with pytest.raises(ValueError):
        ModeSpec(n=3, j=0, lam=-1.0, mult=1, nu=0.5)


def test_potential_values():
    r = np.array([0.25, 0.999, 1.0, 2.0])
    assert_allclose(potential_value(PotentialSpec("square_well", 2.0), r), [-2, -2, 0, 0])
    assert_allclose(potential_value(PotentialSpec("barrier", 3.0, a=1.5), r), [3, 3, 3, 0])
    assert_allclose(PotentialSpec("inverse_poly", 2.0, s=4.0)(r), 2.0 / (1 + r**2) ** 2, rtol=1e-15)
    assert potential_value(PotentialSpec(), 5.0) == 0.0
    with pytest.raises(ValueError):
        potential_value(PotentialSpec(), 0.0)


def test_potential_validation():
    with pytest.raises(ValueError):
        PotentialSpec("coulomb", 1.0)
    with pytest.raises(ValueError):
        PotentialSpec("square_well", -1.0)
    with pytest.raises(ValueError):
        PotentialSpec("barrier", 1.0, a=0.0)
    with pytest.raises(ValueError):
        PotentialSpec("inverse_poly", 1.0, s=2.0)


def test_potential_metadata():
    w = PotentialSpec("square_well", 2.0, a=1.5)
    assert w.breakpoints == (1.5,) and w.value_at_origin == -2.0 and w.cutoff_radius() == 1.5
    b = PotentialSpec("barrier", 2.0)
    assert b.value_at_origin == 2.0 and b.breakpoints == (1.0,)
    p = PotentialSpec("inverse_poly", 1.0, s=4.0)
    assert p.breakpoints == () and p.delta == 2.0
    # |V| r^2 <= tol at zero energy, |V| <= tol sigma^2 otherwise
    assert_allclose(p.cutoff_radius(0.0, 1e-8), 1e4)
    assert_allclose(p.cutoff_radius(0.1, 1e-8), 10 ** 2.5)
    assert PotentialSpec().cutoff_radius() == 0.0
    assert PotentialSpec.from_dict(w.to_dict()) == w
    assert w.with_coupling(3.0) == PotentialSpec("square_well", 3.0, a=1.5)


def test_radial_grid_uniform_in_log():
    g = RadialGrid(1e-3, 1e3, 601)
    assert_allclose(np.diff(g.t), g.dt, rtol=1e-10)
    assert_allclose(g.dt, math.log(1e6) / 600)
    assert_allclose([g.r[0], g.r[-1]], [1e-3, 1e3], rtol=1e-13)
    assert len(g) == 601
    with pytest.raises(ValueError):
        g.r[0] = 1.0


def test_radial_grid_constructors():
    g = RadialGrid.with_spacing(1e-4, 10.0, 0.01)
    assert g.dt <= 0.01 and g.dt > 0.0099
    f = RadialGrid.for_frequency(0.01, far_factor=100, phase_step=0.1)
    assert_allclose(f.r_max, 1e4)
    # phase per step at the far end: sigma r_max dt
    assert 0.01 * f.r_max * f.dt <= 0.1 + 1e-12
    with pytest.raises(ValueError):
        RadialGrid(2.0, 10.0, 100)
    with pytest.raises(ValueError):
        RadialGrid(1e-3, 10.0, 4)
    with pytest.raises(ValueError):
        RadialGrid.for_frequency(0.0)


def test_grid_equality_ignores_arrays():
    assert RadialGrid(1e-3, 10.0, 100) == RadialGrid(1e-3, 10.0, 100)
    assert RadialGrid(1e-3, 10.0, 100) != RadialGrid(1e-3, 10.0, 101)
