"""
Low-energy norm ratios
======================

Apply the outgoing resolvent to a few band-limited inputs and compare the
variable-order norm of the output with that of the input as sigma decreases.
With no potential the ratio stays flat; at a resonant coupling it grows like
1/sigma.
"""
from __future__ import annotations

import math

import numpy as np

from lowenergy.experiments import SweepConfig, uniform_sweep
from lowenergy.geometry import PotentialSpec

sigmas = tuple(np.logspace(-3, -1, 5))
for name, V in (("free", PotentialSpec()),
                ("resonant well", PotentialSpec("square_well", math.pi**2 / 4))):
    rep = uniform_sweep(SweepConfig(potential=V, sigmas=sigmas, j_max=2, seeds=(0, 1)))
    print(f"{name}: slope {rep.fit.slope:+.3f}, variation {rep.variation:.2f}")
    for s, m in zip(rep.sigmas, rep.max_ratio):
        print(f"   sigma = {s:.1e}   max ratio = {m:.4g}")
