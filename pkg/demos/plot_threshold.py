"""
Zero-energy resonances of a square well
=======================================

Scan the growing connection coefficient of the zero-energy solution, locate
the critical couplings for j = 0 and j = 1, and read off the far-field decay
of the threshold states.
"""
from __future__ import annotations

import numpy as np

from lowenergy.geometry import PotentialSpec, RadialGrid, sphere_modes
from lowenergy.radial_resolvent import (connection_coefficients, far_exponent,
                                        find_critical_coupling, zero_energy_state)

modes = sphere_modes(3, 1)
family = PotentialSpec("square_well", 1.0)

for g in np.linspace(1.0, 4.0, 7):
    a = connection_coefficients(modes[0], family.with_coupling(g)).a
    print(f"g = {g:4.2f}   a(g) = {a:+.4f}")

grid = RadialGrid.with_spacing(1e-4, 1e3, 0.01)
for mode, bracket in ((modes[0], (2.0, 3.0)), (modes[1], (8.0, 12.0))):
    g_star = find_critical_coupling(mode, family, bracket)
    state = zero_energy_state(mode, family.with_coupling(g_star), grid, regular_inside=True)
    print(f"j = {mode.j}: g* = {g_star:.12f}, far exponent "
          f"{far_exponent(state, 50.0, 500.0):+.4f}")
