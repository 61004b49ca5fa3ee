"""Sign of the Mellin-side commutator for the model operator at infinity.

The multiplier

    f(tau) = exp( s btil/2 * tau / (tau^2 + lam + Ftil^2)^{1/2}
                + s beta/2 * tau / (tau^2 + lam + F^2)^{1/2} * log(tau^2 + lam + F^2)
                - (l+1)/2 * log(tau^2 + lam + Fchk^2) )

is evaluated at tau + i. The commutator quantity -2 Im(f(tau+i)^2 Q),
Q = (tau + i(l+1))^2 + lam + ((n-2)/2)^2, is negative exactly when the total
argument Theta = arg f(tau+i)^2 + arg Q lies in (0, pi) (mod 2 pi). Theta is the
sum of four explicit terms I..IV computed with principal branches. Here s is
the sign, F, Fchk, Ftil are the three shift parameters and btil the extra slope.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

DELTA_PRIME = 0.1
TAIL_FACTOR = 100.0


@dataclass(frozen=True)
class PositivityParams:
    n: int
    l: float
    beta: float
    sign: int = 1
    beta_tilde: float = 0.0
    check_digamma: float = 2.0
    digamma: float = 2.0
    tilde_digamma: float = 2.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("dimension must be >= 3")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.beta_tilde < 0:
            raise ValueError("beta_tilde must be >= 0")
        if not (self.tilde_digamma >= self.digamma >= self.check_digamma > 1):
            raise ValueError("need tilde_digamma >= digamma >= check_digamma > 1")
        if abs(self.l + 1) >= (self.n - 2) / 2:
            raise ValueError(f"need |l+1| < (n-2)/2 = {(self.n - 2) / 2}")

    @property
    def half(self) -> float:
        return (self.n - 2) / 2

    def scaled(self, factor: float) -> "PositivityParams":
        """All three shifts multiplied by ``factor``; the slope rule
        beta_tilde = (pi/2) tilde_digamma is kept when it was in force."""
        bt = self.beta_tilde
        if bt and math.isclose(bt, math.pi / 2 * self.tilde_digamma):
            bt = math.pi / 2 * self.tilde_digamma * factor
        return replace(self, check_digamma=self.check_digamma * factor,
                       digamma=self.digamma * factor,
                       tilde_digamma=self.tilde_digamma * factor, beta_tilde=bt)

    def mirrored(self) -> "PositivityParams":
        return replace(self, sign=-self.sign)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ArgTerms:
    I: np.ndarray
    II: np.ndarray
    III: np.ndarray
    IV: np.ndarray

    @property
    def total(self):
        return self.I + self.II + self.III + self.IV


def _check_branches(tau, lam, p: PositivityParams) -> None:
    # real parts of every log / sqrt argument; positive under the parameter constraints
    base = np.min(tau * tau + lam) - 1.0
    worst = min(base + p.check_digamma**2, base + p.digamma**2, base + p.tilde_digamma**2,
                float(np.min(tau * tau + lam)) - (p.l + 1) ** 2 + p.half**2)
    if worst <= 0:
        raise ValueError("a log/sqrt argument has non-positive real part; parameters invalid")


def arg_terms(tau, nu, p: PositivityParams) -> ArgTerms:
    """The four summands of Theta at (tau + i, lam = nu^2), principal branches."""
    tau = np.asarray(tau, dtype=float)
    lam = np.asarray(nu, dtype=float) ** 2
    _check_branches(tau, lam, p)
    z = tau + 1j
    z2 = z * z
    zt = z2 + lam + p.tilde_digamma**2
    zf = z2 + lam + p.digamma**2
    zc = z2 + lam + p.check_digamma**2
    q = (tau + 1j * (p.l + 1)) ** 2 + lam + p.half**2
    t1 = np.imag(p.sign * p.beta_tilde * z / np.sqrt(zt))
    t2 = np.imag(p.sign * p.beta * z / np.sqrt(zf) * np.log(zf))
    t3 = np.imag(-(p.l + 1) * np.log(zc))
    t4 = np.angle(q)
    return ArgTerms(t1, t2, t3, t4)


def theta_total(tau, nu, p: PositivityParams):
    out = arg_terms(tau, nu, p).total
    return float(out) if np.ndim(out) == 0 else out


def log_multiplier(z, lam, p: PositivityParams):
    """log f_lam(z) for complex z, principal branches."""
    z = np.asarray(z, dtype=complex)
    a = z * z + lam
    return (p.sign * p.beta_tilde / 2 * z / np.sqrt(a + p.tilde_digamma**2)
            + p.sign * p.beta / 2 * z / np.sqrt(a + p.digamma**2) * np.log(a + p.digamma**2)
            - (p.l + 1) / 2 * np.log(a + p.check_digamma**2))


def commutator_multiplier(tau, lam, p: PositivityParams):
    """-2 Im( f(tau+i)^2 ((tau + i(l+1))^2 + lam + ((n-2)/2)^2) )."""
    tau = np.asarray(tau, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be non-negative")
    _check_branches(tau, lam, p)
    f2 = np.exp(2 * log_multiplier(tau + 1j, lam, p))
    q = (tau + 1j * (p.l + 1)) ** 2 + lam + p.half**2
    out = -2 * np.imag(f2 * q)
    return float(out) if out.ndim == 0 else out


def commutator_modulus(tau, lam, p: PositivityParams):
    """|f(tau+i)^2 Q|, the positive factor in the polar form -2 |f^2 Q| sin(Theta)."""
    tau = np.asarray(tau, dtype=float)
    lam = np.asarray(lam, dtype=float)
    q = (tau + 1j * (p.l + 1)) ** 2 + lam + p.half**2
    out = np.exp(2 * np.real(log_multiplier(tau + 1j, lam, p))) * np.abs(q)
    return float(out) if out.ndim == 0 else out


def principal_symbol(tau, nu, p: PositivityParams):
    """sign * [beta rho^-3 (nu^2 log rho^2 + 2 tau^2) + btil rho^-3 nu^2], rho^2 = tau^2 + nu^2."""
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    rho2 = tau * tau + nu * nu
    rho3 = rho2 ** 1.5
    return p.sign * (p.beta * (nu * nu * np.log(rho2) + 2 * tau * tau) + p.beta_tilde * nu * nu) / rho3


# ----------------------------------------------------------------------------- verification

@dataclass(frozen=True)
class PositivityGrid:
    """Log-spaced rectangle: tau in {0} U +-[lo, R], nu in {0} U [lo, R]."""

    n_tau: int = 400
    n_nu: int = 400
    lo: float = 1e-2

    def axes(self, R: float) -> tuple[np.ndarray, np.ndarray]:
        pos_t = np.logspace(math.log10(self.lo), math.log10(R), self.n_tau)
        pos_n = np.logspace(math.log10(self.lo), math.log10(R), self.n_nu)
        tau = np.concatenate([-pos_t[::-1], [0.0], pos_t])
        nu = np.concatenate([[0.0], pos_n])
        return tau, nu


@dataclass(frozen=True)
class TailCertificate:
    R: float
    C_rem: float
    lower_margin: float
    upper_value: float
    ok: bool
    strict_deviation: float | None = None


@dataclass(frozen=True)
class PositivityReport:
    params: PositivityParams
    grid: PositivityGrid
    R_tail: float
    min_theta: float
    max_theta: float
    argmin: tuple[float, float]
    argmax: tuple[float, float]
    tail: TailCertificate
    passed: bool
    diagnostics: list = field(default_factory=list)

    @property
    def tail_ok(self) -> bool:
        return self.tail.ok

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "grid": {**asdict(self.grid), "R_tail": self.R_tail},
            "min_theta": self.min_theta,
            "max_theta": self.max_theta,
            "argmin": list(self.argmin),
            "argmax": list(self.argmax),
            "tail_ok": self.tail.ok,
            "tail": asdict(self.tail),
            "pass": self.passed,
        }


def default_tail_radius(p: PositivityParams) -> float:
    return TAIL_FACTOR * max(p.tilde_digamma, 1.0)


def _tail_certificate(p: PositivityParams, tau, nu, theta, R: float,
                      strict: bool) -> TailCertificate:
    # On rho >= R the principal symbol (times the sign) is >= 2 beta / rho and
    # <= (beta log rho^2 + btil) / rho, while |Theta - ps| <= C_rem rho^{-3+2d'}
    # with C_rem fitted (x3) on the outer annulus R/4 <= rho.
    T, Nu = np.meshgrid(tau, nu, indexing="ij")
    rho = np.hypot(T, Nu)
    ann = rho >= R / 4
    ps = principal_symbol(T[ann], Nu[ann], p)
    expo = 3 - 2 * DELTA_PRIME
    dev = np.abs(theta[ann] - ps) * rho[ann] ** expo
    C_rem = 3 * float(np.max(dev)) if dev.size else math.inf
    strict_dev = None
    if strict:
        strict_dev, dev_mp = _strict_annulus(p, T[ann], Nu[ann], theta[ann], ps, rho[ann] ** expo)
        C_rem = max(C_rem, 3 * dev_mp)
    lower_margin = 2 * p.beta * R ** (2 - 2 * DELTA_PRIME) - C_rem
    upper = (p.beta * math.log(R * R) + p.beta_tilde) / R + C_rem * R ** (-expo)
    ok = R >= math.e and lower_margin > 0 and upper < math.pi
    return TailCertificate(R=R, C_rem=C_rem, lower_margin=lower_margin, upper_value=upper,
                           ok=bool(ok), strict_deviation=strict_dev)


def _strict_annulus(p, T, Nu, theta, ps, wgt, max_points: int = 400, dps: int = 40):
    """Re-evaluate Theta on a subsample of the annulus in high precision."""
    import mpmath as mp

    idx = np.unique(np.linspace(0, T.size - 1, min(max_points, T.size)).astype(int))
    worst_float = 0.0
    worst_dev = 0.0
    with mp.workdps(dps):
        for k in idx:
            th = theta_mp(float(T[k]), float(Nu[k]), p)
            worst_float = max(worst_float, abs(float(th) - float(theta[k])))
            worst_dev = max(worst_dev, abs(float(th) - float(ps[k])) * float(wgt[k]))
    return worst_float, worst_dev


def theta_mp(tau: float, nu: float, p: PositivityParams):
    """Theta in mpmath arithmetic at the current working precision."""
    import mpmath as mp

    z = mp.mpc(tau, 1)
    lam = mp.mpf(nu) ** 2
    z2 = z * z
    zt = z2 + lam + mp.mpf(p.tilde_digamma) ** 2
    zf = z2 + lam + mp.mpf(p.digamma) ** 2
    zc = z2 + lam + mp.mpf(p.check_digamma) ** 2
    q = (mp.mpf(tau) + 1j * mp.mpf(p.l + 1)) ** 2 + lam + mp.mpf(p.half) ** 2
    t1 = mp.im(p.sign * mp.mpf(p.beta_tilde) * z / mp.sqrt(zt))
    t2 = mp.im(p.sign * mp.mpf(p.beta) * z / mp.sqrt(zf) * mp.log(zf))
    t3 = mp.im(-mp.mpf(p.l + 1) * mp.log(zc))
    t4 = mp.arg(q)
    return t1 + t2 + t3 + t4


def verify_positivity(p: PositivityParams, grid: PositivityGrid | None = None,
                      R_tail: float | None = None, strict: bool = False) -> PositivityReport:
    """Certify sign * Theta in (0, pi) on the grid and beyond R_tail via the tail bound."""
    grid = grid or PositivityGrid()
    R = R_tail if R_tail is not None else default_tail_radius(p)
    if R < default_tail_radius(p):
        raise ValueError(f"R_tail must be >= {default_tail_radius(p)}")
    tau, nu = grid.axes(R)
    T, Nu = np.meshgrid(tau, nu, indexing="ij")
    theta = theta_total(T, Nu, p)
    st = p.sign * theta
    i_min = np.unravel_index(int(np.argmin(st)), st.shape)
    i_max = np.unravel_index(int(np.argmax(st)), st.shape)
    min_t, max_t = float(theta[i_min]), float(theta[i_max])
    if p.sign < 0:
        # report in natural order: interval is (-pi, 0)
        min_t, max_t = float(theta[i_max]), float(theta[i_min])
        i_min, i_max = i_max, i_min
    tail = _tail_certificate(p, tau, nu, theta, R, strict)
    lo_ok = float(np.min(st)) > 0
    hi_ok = float(np.max(st)) < math.pi
    diags = []
    bad = np.argwhere(~((st > 0) & (st < math.pi)))
    if bad.size:
        k = bad[0]
        diags.append(f"Theta leaves the interval at tau={T[tuple(k)]:.6g}, nu={Nu[tuple(k)]:.6g} "
                     f"({bad.shape[0]} grid points)")
    if not tail.ok:
        diags.append(f"tail certificate failed: C_rem={tail.C_rem:.4g}, "
                     f"lower margin={tail.lower_margin:.4g}, upper={tail.upper_value:.4g}")
    return PositivityReport(
        params=p, grid=grid, R_tail=R, min_theta=min_t, max_theta=max_t,
        argmin=(float(T[i_min]), float(Nu[i_min])), argmax=(float(T[i_max]), float(Nu[i_max])),
        tail=tail, passed=bool(lo_ok and hi_ok and tail.ok), diagnostics=diags,
    )


# ----------------------------------------------------------------------------- parameter search

class SearchExhausted(RuntimeError):
    def __init__(self, message: str, best: PositivityParams | None, violation: float):
        super().__init__(message)
        self.best = best
        self.violation = violation


SEARCH_GRID = PositivityGrid(n_tau=120, n_nu=120)
LADDER = tuple(2.0 ** k for k in range(1, 11))


def _violation(rep: PositivityReport) -> float:
    st_min = rep.params.sign * (rep.min_theta if rep.params.sign > 0 else rep.max_theta)
    st_max = rep.params.sign * (rep.max_theta if rep.params.sign > 0 else rep.min_theta)
    v = max(-st_min, st_max - math.pi, 0.0)
    return v + (0.0 if rep.tail.ok else 1.0)


def _on_grid(p: PositivityParams, grid: PositivityGrid):
    R = default_tail_radius(p)
    tau, nu = grid.axes(R)
    T, Nu = np.meshgrid(tau, nu, indexing="ij")
    return T, Nu, arg_terms(T, Nu, p)


def choose_parameters(n: int, l: float, beta: float, sign: int = 1,
                      ladder: tuple[float, ...] = LADDER,
                      final_grid: PositivityGrid | None = None) -> PositivityParams:
    """Search the shift parameters on a doubling ladder until verification passes.

    l+1 = 0: beta_tilde = 0 and one common shift. Otherwise the staged order:
    Fchk (III, IV of opposite sign, |III+IV| < pi/2), then F (II+III+IV within
    (-pi/2, pi/2) and positive far out), then Ftil with beta_tilde = (pi/2) Ftil,
    checked by the full verification.
    """
    if abs(l + 1) >= (n - 2) / 2:
        raise ValueError(f"need |l+1| < (n-2)/2 = {(n - 2) / 2}")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    final_grid = final_grid or PositivityGrid()
    best, best_v = None, math.inf

    def final(p: PositivityParams):
        nonlocal best, best_v
        rep = verify_positivity(p, SEARCH_GRID)
        v = _violation(rep)
        if v < best_v:
            best, best_v = p, v
        if not rep.passed:
            return None
        rep = verify_positivity(p, final_grid)
        return p if rep.passed else None

    if l + 1 == 0:
        for F in ladder:
            p = PositivityParams(n, l, beta, sign, 0.0, F, F, F)
            if final(p):
                return p
        raise SearchExhausted("no common shift on the ladder certified positivity", best, best_v)

    for Fc in ladder:
        # Fchk: III and IV of opposite signs, |III + IV| <= alpha0 < pi/2
        p0 = PositivityParams(n, l, beta, sign, 0.0, Fc, Fc, Fc)
        _, _, a = _on_grid(p0, SEARCH_GRID)
        if np.any(a.III * a.IV > 0):
            continue
        alpha0 = float(np.max(np.abs(a.III + a.IV)))
        if alpha0 >= math.pi / 2:
            continue
        eps = (math.pi / 2 - alpha0) / 4
        alpha_star = alpha0 + eps
        for F in (x for x in ladder if x >= Fc):
            # F: 0 < sign*II < eps everywhere, and II + III + IV > 0 far out
            p1 = PositivityParams(n, l, beta, sign, 0.0, Fc, F, F)
            T, Nu, a = _on_grid(p1, SEARCH_GRID)
            two = sign * a.II
            if not (np.min(two) > 0 and np.max(two) < eps):
                continue
            last3 = sign * (a.II + a.III + a.IV)
            rho = np.hypot(T, Nu)
            nonpos = rho[last3 <= 0]
            R_pos = float(np.max(nonpos)) if nonpos.size else 0.0
            if R_pos >= rho.max() / 4:
                continue
            for Ft in (x for x in ladder if x >= F):
                # Ftil with beta_tilde = (pi/2) Ftil: I > alpha* inside R_pos,
                # I < pi/2 + (pi/2 - alpha*)/4, I >= -(rho^2 + F^2)^{-1/2}/16
                p2 = PositivityParams(n, l, beta, sign, math.pi / 2 * Ft, Fc, F, Ft)
                T2, Nu2, a2 = _on_grid(p2, SEARCH_GRID)
                one = sign * a2.I
                rho2 = np.hypot(T2, Nu2)
                inner = rho2 <= max(R_pos, 1.0)
                if (np.min(one[inner]) <= alpha_star
                        or np.max(one) >= math.pi / 2 + (math.pi / 2 - alpha_star) / 4
                        or np.any(one < -(rho2**2 + F * F) ** -0.5 / 16)):
                    continue
                if final(p2):
                    return p2
    raise SearchExhausted("parameter ladder exhausted without a certified set", best, best_v)
