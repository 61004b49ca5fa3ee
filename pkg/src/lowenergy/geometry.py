"""Model conic geometry: cross-section spectrum, radial potentials, log grids."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ModeSpec:
    """One eigenspace of the cross-section Laplacian.

    ``nu`` is the indicial root sqrt(((n-2)/2)^2 + lam); zero-energy solutions
    in this mode behave like r^{-(n-2)/2 +/- nu}.
    """

    n: int
    j: int
    lam: float
    mult: int
    nu: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("dimension must be >= 3")
        if self.lam < 0:
            raise ValueError("cross-section eigenvalue must be non-negative")


def _sphere_mult(n: int, j: int) -> int:
    # dimension of degree-j spherical harmonics on S^{n-1}
    total = math.comb(j + n - 1, n - 1)
    if j >= 2:
        total -= math.comb(j + n - 3, n - 1)
    return total


def sphere_modes(n: int, j_max: int) -> list[ModeSpec]:
    """Modes j = 0..j_max of the round sphere S^{n-1}."""
    if n < 3:
        raise ValueError("dimension must be >= 3")
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    half = (n - 2) / 2
    return [
        ModeSpec(n=n, j=j, lam=float(j * (j + n - 2)), mult=_sphere_mult(n, j), nu=j + half)
        for j in range(j_max + 1)
    ]


def custom_modes(n: int, spectrum: Sequence[tuple[float, int]]) -> list[ModeSpec]:
    """Modes for a general cross-section given (eigenvalue, multiplicity) pairs."""
    if n < 3:
        raise ValueError("dimension must be >= 3")
    half = (n - 2) / 2
    out = []
    for j, (lam, mult) in enumerate(sorted(spectrum)):
        out.append(ModeSpec(n=n, j=j, lam=float(lam), mult=int(mult),
                            nu=math.sqrt(half * half + lam)))
    return out


POTENTIAL_KINDS = ("zero", "square_well", "barrier", "inverse_poly")


@dataclass(frozen=True)
class PotentialSpec:
    """Radial potential.

    * ``zero``
    * ``square_well``: -g on r < a, 0 outside (g >= 0 is the depth)
    * ``barrier``: +g on r < a, 0 outside (g >= 0 is the height)
    * ``inverse_poly``: g (1 + r^2)^{-s/2}, s > 2
    """

    kind: str = "zero"
    g: float = 0.0
    a: float = 1.0
    s: float = 3.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind in ("square_well", "barrier"):
            if self.g < 0:
                raise ValueError(f"{self.kind} strength must be >= 0")
            if self.a <= 0:
                raise ValueError(f"{self.kind} radius must be > 0")
        if self.kind == "inverse_poly" and self.s <= 2:
            raise ValueError("inverse_poly decay must satisfy s > 2")

    @property
    def delta(self) -> float:
        return self.s - 2.0 if self.kind == "inverse_poly" else math.inf

    def with_coupling(self, g: float) -> "PotentialSpec":
        return PotentialSpec(kind=self.kind, g=g, a=self.a, s=self.s)

    def __call__(self, r):
        return potential_value(self, r)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Radii where V is not smooth; ODE steppers restart there."""
        return (self.a,) if self.kind in ("square_well", "barrier") else ()

    @property
    def value_at_origin(self) -> float:
        if self.kind == "square_well":
            return -self.g
        if self.kind in ("barrier", "inverse_poly"):
            return self.g
        return 0.0

    def cutoff_radius(self, sigma: float = 0.0, rel_tol: float = 1e-8) -> float:
        """Radius beyond which V is treated as zero.

        Exact support for the compact kinds. For ``inverse_poly`` the radius
        where |V| <= rel_tol * sigma^2 (sigma > 0) or |V| r^2 <= rel_tol (sigma = 0).
        """
        if self.kind == "zero" or self.g == 0:
            return 0.0
        if self.kind in ("square_well", "barrier"):
            return self.a
        g = abs(self.g)
        if sigma > 0:
            # g r^{-s} = tol sigma^2
            return (g / (rel_tol * sigma * sigma)) ** (1.0 / self.s)
        return (g / rel_tol) ** (1.0 / (self.s - 2.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "g": self.g, "a": self.a, "s": self.s}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        return cls(kind=d.get("kind", "zero"), g=float(d.get("g", 0.0)),
                   a=float(d.get("a", 1.0)), s=float(d.get("s", 3.0)))


def potential_value(V: PotentialSpec, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("potential is evaluated at r > 0")
    if V.kind == "zero":
        out = np.zeros_like(r_arr)
    elif V.kind == "square_well":
        out = np.where(r_arr < V.a, -V.g, 0.0)
    elif V.kind == "barrier":
        out = np.where(r_arr < V.a, V.g, 0.0)
    else:
        out = V.g * (1.0 + r_arr * r_arr) ** (-V.s / 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadialGrid:
    """Grid uniform in t = log r."""

    r_min: float = 1e-4
    r_max: float = 1e4
    N: int = 4096
    t: np.ndarray = field(init=False, repr=False, compare=False)
    r: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 < self.r_min < 1 < self.r_max):
            raise ValueError("grid must satisfy 0 < r_min < 1 < r_max")
        if self.N < 8:
            raise ValueError("grid needs at least 8 points")
        t = np.linspace(math.log(self.r_min), math.log(self.r_max), self.N)
        t.flags.writeable = False
        r = np.exp(t)
        r.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)

    @property
    def dt(self) -> float:
        return (math.log(self.r_max) - math.log(self.r_min)) / (self.N - 1)

    def __len__(self) -> int:
        return self.N

    @classmethod
    def with_spacing(cls, r_min: float, r_max: float, dt: float) -> "RadialGrid":
        n = int(math.ceil((math.log(r_max) - math.log(r_min)) / dt)) + 1
        return cls(r_min=r_min, r_max=r_max, N=max(n, 8))

    @classmethod
    def for_frequency(cls, sigma: float, r_min: float = 1e-4, far_factor: float = 400.0,
                      phase_step: float = 0.1, dt_max: float = 0.01) -> "RadialGrid":
        """Grid reaching sigma * r_max = far_factor with at most ``phase_step``
        radians of outgoing phase per step at the far end."""
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        r_max = max(far_factor / sigma, 10.0)
        dt = min(dt_max, phase_step / (sigma * r_max))
        return cls.with_spacing(r_min, r_max, dt)
