"""Variable-order weighted b-Sobolev norms through per-mode Mellin transforms.

Conventions: x = 1/r is the boundary defining function at infinity and
t = log r. The Mellin transform

    M f(tau) = int_0^inf x^{-i tau} f(x) dx/x = int e^{i tau t} f(t) dt

is realized on the uniform t-grid by an FFT, which makes the discrete
Parseval identity (1/2pi) sum |Mf|^2 dtau = sum |f|^2 dt exact.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .geometry import ModeSpec, RadialGrid


class TruncationWarning(UserWarning):
    """The function handed to the Mellin transform does not decay at the grid ends."""


@dataclass(frozen=True)
class WeightOrderSpec:
    """Decay order l and the variable differential order r^_{sign}(beta)."""

    l: float
    beta: float
    sign: int = 1
    n: int = 3

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.n < 3:
            raise ValueError("dimension must be >= 3")

    @property
    def threshold(self) -> float:
        """The threshold order 1/2 - (l+1)."""
        return 0.5 - (self.l + 1.0)

    @property
    def admissible(self) -> bool:
        return abs(self.l + 1.0) < (self.n - 2) / 2 and self.beta > 0

    def require_admissible(self) -> None:
        if not self.admissible:
            raise ValueError(
                f"weight not admissible: need |l+1| < {(self.n - 2) / 2} and beta > 0, "
                f"got l={self.l}, beta={self.beta}"
            )

    def flipped(self) -> "WeightOrderSpec":
        """Same l and beta with the opposite sign."""
        return WeightOrderSpec(l=self.l, beta=self.beta, sign=-self.sign, n=self.n)


@dataclass(frozen=True)
class ModeFunction:
    """Radial coefficient u_j(r) of one cross-section mode on a log grid.

    ``tail`` is the coefficient c of an exact continuation c * r^{-nu-(n-2)/2}
    beyond the last grid point (zero for compactly supported data).
    """

    mode: ModeSpec
    grid: RadialGrid
    samples: np.ndarray
    tail: complex = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("mode function samples must be finite")
        object.__setattr__(self, "samples", s)

    def __add__(self, other: "ModeFunction") -> "ModeFunction":
        _same_frame(self, other)
        return ModeFunction(self.mode, self.grid, self.samples + other.samples,
                            self.tail + other.tail)

    def __sub__(self, other: "ModeFunction") -> "ModeFunction":
        _same_frame(self, other)
        return ModeFunction(self.mode, self.grid, self.samples - other.samples,
                            self.tail - other.tail)

    def scale(self, c: complex) -> "ModeFunction":
        return ModeFunction(self.mode, self.grid, c * self.samples, c * self.tail)

    def conj(self) -> "ModeFunction":
        return ModeFunction(self.mode, self.grid, self.samples.conj(), np.conj(self.tail))


def _same_frame(a: ModeFunction, b: ModeFunction) -> None:
    if a.mode != b.mode or a.grid != b.grid:
        raise ValueError("mode functions live on different modes or grids")


@dataclass(frozen=True)
class MellinSpectrum:
    """Mellin amplitudes on the FFT-dual tau grid (ascending, symmetric up to one point)."""

    tau: np.ndarray
    amplitudes: np.ndarray
    dtau: float = field(default=0.0)

    def l2_norm_sq(self) -> float:
        """(1/2pi) int |Mf|^2 dtau."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.dtau / (2 * math.pi))


# ----------------------------------------------------------------------------- orders

def order_value(w: WeightOrderSpec, tau, lam):
    """r^_{sign}(tau, lam) = 1/2 - (l+1) + sign * beta * tau / sqrt(tau^2 + lam)."""
    tau = np.asarray(tau, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be non-negative")
    rho = np.sqrt(tau * tau + lam)
    if np.any(rho == 0):
        raise ValueError("order function is undefined at tau = lam = 0")
    out = w.threshold + w.sign * w.beta * tau / rho
    return float(out) if out.ndim == 0 else out


def _order_on_grid(w: WeightOrderSpec, tau: np.ndarray, lam: float) -> np.ndarray:
    # same as order_value but with the threshold value at the excluded origin
    rho = np.sqrt(tau * tau + lam)
    safe = np.where(rho > 0, rho, 1.0)
    return w.threshold + w.sign * w.beta * np.where(rho > 0, tau / safe, 0.0)


def flow_derivative(w: WeightOrderSpec, tau, mu_abs):
    """-(tau^2+mu^2)^{-1/2} x^{-2} H_p r~  =  sign * 2 beta mu^2 / (tau^2 + mu^2)."""
    tau = np.asarray(tau, dtype=float)
    mu = np.asarray(mu_abs, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mu_abs must be non-negative")
    rho2 = tau * tau + mu * mu
    if np.any(rho2 == 0):
        raise ValueError("flow derivative is undefined at the zero section")
    out = w.sign * 2.0 * w.beta * mu * mu / rho2
    return float(out) if out.ndim == 0 else out


def threshold_check(w: WeightOrderSpec) -> bool:
    """Order above threshold on the high-regularity radial set, below on the other.

    For sign=+ the high set is {tau > 0, mu = 0}; sign=- swaps the two sets.
    """
    hi = order_value(w, float(w.sign), 0.0)
    lo = order_value(w, -float(w.sign), 0.0)
    return bool(hi > w.threshold and lo < w.threshold)


# ----------------------------------------------------------------------------- Mellin

def _mellin_samples(g: np.ndarray, grid: RadialGrid) -> MellinSpectrum:
    N, dt = grid.N, grid.dt
    k = np.arange(N) - N // 2
    tau = 2 * math.pi * k / (N * dt)
    spec = np.fft.fftshift(np.fft.ifft(g)) * (N * dt)
    spec = spec * np.exp(1j * tau * grid.t[0])
    return MellinSpectrum(tau=tau, amplitudes=spec, dtau=2 * math.pi / (N * dt))


def mellin_transform(u: ModeFunction, weight_shift: float = 0.0) -> MellinSpectrum:
    """Discrete Mellin transform of x^{-weight_shift} u = r^{weight_shift} u."""
    g = u.samples * u.grid.r ** weight_shift
    peak = np.max(np.abs(g)) if g.size else 0.0
    if peak > 0 and max(abs(g[0]), abs(g[-1])) > 1e-8 * peak:
        warnings.warn("input does not decay at the grid ends; Mellin transform is truncated",
                      TruncationWarning, stacklevel=2)
    return _mellin_samples(g, u.grid)


# ----------------------------------------------------------------------------- norms

def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


FAR_CUT = (0.5, 2.0)
TAPER_WIDTH = 2.0


def far_cutoff(grid: RadialGrid) -> np.ndarray:
    """chi_far(r): 0 for r < 1/2, 1 for r > 2, times a smooth taper over the last
    TAPER_WIDTH units of t that removes the artificial grid end."""
    t = grid.t
    lo, hi = math.log(FAR_CUT[0]), math.log(FAR_CUT[1])
    chi = smoothstep((t - lo) / (hi - lo))
    width = min(TAPER_WIDTH, (t[-1] - hi) / 2)
    taper = 1.0 - smoothstep((t - (t[-1] - width)) / width)
    return chi * taper


def d_dt(y: np.ndarray, dt: float) -> np.ndarray:
    """First derivative on a uniform grid, 4th-order central in the interior."""
    out = np.gradient(y, dt, edge_order=2)
    if y.size >= 5:
        out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dt)
    return out


def d2_dt2(y: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative on a uniform grid, 4th-order central in the interior."""
    out = np.empty_like(y)
    out[1:-1] = (y[:-2] - 2 * y[1:-1] + y[2:]) / dt**2
    out[0], out[-1] = out[1], out[-2]
    if y.size >= 5:
        out[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * dt**2)
    return out


def mode_laplacian(samples: np.ndarray, mode: ModeSpec, grid: RadialGrid) -> np.ndarray:
    """Delta_j u = -u'' - (n-1)/r u' + lam/r^2 u, by finite differences in t."""
    dt = grid.dt
    ut = d_dt(samples, dt)
    utt = d2_dt2(samples, dt)
    return -(utt + (mode.n - 2) * ut - mode.lam * samples) / grid.r**2


def _near_sq(u: ModeFunction, k: int) -> float:
    # sum_{m<=k} of ||Delta^{m/2} u||^2 (m even) or ||grad Delta^{(m-1)/2} u||^2 (m odd) on r < 1
    grid, mode = u.grid, u.mode
    mask = grid.r < 1.0
    meas = grid.r[mask] ** mode.n * grid.dt
    g = u.samples
    total = float(np.sum(np.abs(g[mask]) ** 2 * meas))
    for m in range(1, k + 1):
        if m % 2:
            gt = d_dt(g, grid.dt)
            dens = (np.abs(gt) ** 2 + mode.lam * np.abs(g) ** 2) / grid.r**2
            total += float(np.sum(dens[mask] * meas))
        else:
            g = mode_laplacian(g, mode, grid)
            total += float(np.sum(np.abs(g[mask]) ** 2 * meas))
    return total


def near_order(w: WeightOrderSpec, order_shift: float) -> int:
    """Integer order of the near-region Sobolev term: ceil(sup r~ + order_shift), >= 0."""
    top = w.threshold + w.beta + order_shift
    return max(0, int(math.ceil(top - 1e-12)))


def b_norm_parts(modes: Sequence[ModeFunction], w: WeightOrderSpec,
                 order_shift: float = 0.0, decay_shift: float = 0.0) -> tuple[float, float]:
    """Squared far (Mellin) and near (r < 1) contributions to :func:`b_norm`."""
    if not modes:
        return 0.0, 0.0
    grid = modes[0].grid
    chi = far_cutoff(grid)
    k = near_order(w, order_shift)
    shift = w.l + decay_shift + w.n / 2
    weight_r = grid.r ** shift
    far = near = 0.0
    for u in modes:
        if u.grid != grid:
            raise ValueError("all modes must share one grid")
        if u.mode.n != w.n:
            raise ValueError("mode dimension does not match the weight")
        if not np.any(u.samples):
            continue
        spec = _mellin_samples(chi * weight_r * u.samples, grid)
        expo = _order_on_grid(w, spec.tau, u.mode.lam) + order_shift
        dens = (1.0 + spec.tau**2 + u.mode.lam) ** expo * np.abs(spec.amplitudes) ** 2
        far += u.mode.mult * float(np.sum(dens)) * spec.dtau / (2 * math.pi)
        near += u.mode.mult * _near_sq(u, k)
    return far, near


def b_norm(modes: Sequence[ModeFunction], w: WeightOrderSpec,
           order_shift: float = 0.0, decay_shift: float = 0.0) -> float:
    """Norm in H_b^{r~ + order_shift, l + decay_shift}.

    Far part: sum_j mult_j (1/2pi) int (1+tau^2+lam_j)^{r~+order_shift}
    |M[chi_far r^{l+decay_shift+n/2} u_j]|^2 dtau. Near part: the Sobolev norm of
    integer order ceil(sup r~ + order_shift) on r < 1 built from the mode
    Laplacian and gradient.
    """
    far, near = b_norm_parts(modes, w, order_shift, decay_shift)
    return math.sqrt(far + near)


def pairing(u: Sequence[ModeFunction], v: Sequence[ModeFunction]) -> complex:
    """<u, v> = sum_j mult_j int u_j conj(v_j) r^{n-1} dr on the common grid."""
    total = 0.0 + 0.0j
    for a, b in zip(u, v):
        _same_frame(a, b)
        dens = a.samples * np.conj(b.samples) * a.grid.r ** a.mode.n
        total += a.mode.mult * simpson(dens, dx=a.grid.dt)
    return complex(total)


def weighted_L2_norm(modes: Sequence[ModeFunction], w_exp: float) -> float:
    """(sum_j mult_j int (1+r^2)^{w_exp} |u_j|^2 r^{n-1} dr)^{1/2}."""
    total = 0.0
    for u in modes:
        r = u.grid.r
        dens = (1.0 + r * r) ** w_exp * np.abs(u.samples) ** 2 * r ** u.mode.n
        total += u.mode.mult * float(simpson(dens, dx=u.grid.dt))
    return math.sqrt(max(total, 0.0))
