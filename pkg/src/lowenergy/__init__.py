"""Low-energy resolvent numerics on conic model spaces.

Modules: :mod:`specfun` (cylinder functions), :mod:`geometry` (modes, potentials,
grids), :mod:`mellin_sobolev` (variable-order b-Sobolev norms),
:mod:`positivity` (commutator sign certification), :mod:`radial_resolvent`
(per-mode limiting resolvents and zero-energy data), :mod:`experiments` and
:mod:`cli`.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .geometry import ModeSpec, PotentialSpec, RadialGrid, custom_modes, sphere_modes
from .mellin_sobolev import ModeFunction, WeightOrderSpec, b_norm, weighted_L2_norm
from .positivity import PositivityParams, choose_parameters, verify_positivity
from .radial_resolvent import (connection_coefficients, find_critical_coupling, green_apply,
                               resolvent_apply)

__all__ = [
    "ModeSpec", "PotentialSpec", "RadialGrid", "custom_modes", "sphere_modes",
    "ModeFunction", "WeightOrderSpec", "b_norm", "weighted_L2_norm",
    "PositivityParams", "choose_parameters", "verify_positivity",
    "connection_coefficients", "find_critical_coupling", "green_apply", "resolvent_apply",
]
