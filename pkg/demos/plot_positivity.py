"""
Certifying the commutator sign
==============================

Pick shift parameters for a weight, certify that the total argument stays in
(0, pi) on a grid plus the large-frequency tail, and look at the commutator
multiplier along the tau axis.
"""
from __future__ import annotations

import numpy as np

from lowenergy.positivity import (PositivityGrid, choose_parameters, commutator_multiplier,
                                  theta_total, verify_positivity)

# the search doubles the shifts until the certificate holds
p = choose_parameters(n=3, l=-0.6, beta=1.0)
print("chosen shifts:", p.check_digamma, p.digamma, p.tilde_digamma)

rep = verify_positivity(p, PositivityGrid(200, 200))
print(f"Theta in [{rep.min_theta:.3e}, {rep.max_theta:.3f}], tail ok: {rep.tail_ok}")

# the mirrored parameters certify (-pi, 0) instead
mir = verify_positivity(p.mirrored(), PositivityGrid(200, 200))
print(f"mirror: Theta in [{mir.min_theta:.3f}, {mir.max_theta:.3e}]")

tau = np.array([-1e3, -10.0, 0.0, 10.0, 1e3])
print("tau        Theta       commutator")
for t, th, c in zip(tau, theta_total(tau, 0.0, p), commutator_multiplier(tau, 0.0, p)):
    print(f"{t:8.0f}  {th:10.4f}  {c:12.4e}")
