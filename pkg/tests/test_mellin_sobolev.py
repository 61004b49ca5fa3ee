from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from lowenergy.geometry import RadialGrid, sphere_modes
from lowenergy.mellin_sobolev import (ModeFunction, TruncationWarning, WeightOrderSpec, b_norm,
                                      b_norm_parts, far_cutoff, flow_derivative, mellin_transform,
                                      near_order, order_value, pairing, smoothstep, threshold_check,
                                      weighted_L2_norm)

GRID = RadialGrid.with_spacing(1e-4, 1e4, 0.01)
MODES = sphere_modes(3, 3)


def log_gauss(grid, c, w, amp=1.0):
    return amp * np.exp(-((grid.t - math.log(c)) / w) ** 2)


# ----------------------------------------------------------------------------- Mellin

def test_gaussian_mellin_transform():
    # f(t) = exp(-(t - t0)^2)  ->  int e^{i tau t} f dt = sqrt(pi) e^{i tau t0 - tau^2/4}
    t0 = 0.7
    u = ModeFunction(MODES[0], GRID, np.exp(-(GRID.t - t0) ** 2))
    spec = mellin_transform(u)
    exact = math.sqrt(math.pi) * np.exp(1j * spec.tau * t0 - spec.tau**2 / 4)
    sel = np.abs(spec.tau) < 12
    assert_allclose(spec.amplitudes[sel], exact[sel], atol=1e-12)


def test_mellin_against_quadrature():
    t0, w = -0.3, 0.8
    f = lambda t: math.exp(-((t - t0) / w) ** 2) * (1 + 0.3 * math.sin(2 * t))  # noqa: E731
    u = ModeFunction(MODES[1], GRID, np.array([f(t) for t in GRID.t]))
    spec = mellin_transform(u)
    idx = np.linspace(np.argmin(np.abs(spec.tau + 8)), np.argmin(np.abs(spec.tau - 8)), 20).astype(int)
    for k in idx:
        tau = spec.tau[k]
        re = quad(lambda t: f(t) * math.cos(tau * t), -12, 12, limit=400)[0]
        im = quad(lambda t: f(t) * math.sin(tau * t), -12, 12, limit=400)[0]
        assert abs(spec.amplitudes[k] - complex(re, im)) < 1e-9


def test_mellin_weight_shift():
    u = ModeFunction(MODES[0], GRID, log_gauss(GRID, 2.0, 0.5))
    a = mellin_transform(u, weight_shift=1.5)
    b = mellin_transform(ModeFunction(MODES[0], GRID, u.samples * GRID.r**1.5))
    assert_allclose(a.amplitudes, b.amplitudes, rtol=1e-14, atol=1e-16)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.05, 20.0), w=st.floats(0.3, 1.2), phase=st.floats(-3, 3))
def test_parseval(c, w, phase):
    u = ModeFunction(MODES[0], GRID, log_gauss(GRID, c, w) * np.exp(1j * phase * GRID.t))
    lhs = float(np.sum(np.abs(u.samples) ** 2) * GRID.dt)
    assert_allclose(mellin_transform(u).l2_norm_sq(), lhs, rtol=1e-10)


def test_truncation_warning():
    u = ModeFunction(MODES[0], GRID, np.ones(GRID.N))
    with pytest.warns(TruncationWarning):
        mellin_transform(u)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mellin_transform(ModeFunction(MODES[0], GRID, log_gauss(GRID, 1.0, 0.5)))


# ----------------------------------------------------------------------------- orders

def test_order_values():
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    assert_allclose(order_value(w, 5.0, 0.0), 1.5)
    assert_allclose(order_value(w, -5.0, 0.0), -0.5)
    assert_allclose(order_value(w, 0.0, 4.0), 0.5)
    assert_allclose(order_value(w.flipped(), 5.0, 0.0), -0.5)
    with pytest.raises(ValueError):
        order_value(w, 0.0, 0.0)
    with pytest.raises(ValueError):
        order_value(w, 1.0, -1.0)


def test_weight_validation_and_admissibility():
    assert WeightOrderSpec(l=-1.2, beta=0.5).admissible
    assert not WeightOrderSpec(l=-0.4, beta=0.5).admissible
    assert not WeightOrderSpec(l=-1.0, beta=0.0).admissible
    assert WeightOrderSpec(l=-1.9, beta=1.0, n=5).admissible
    with pytest.raises(ValueError):
        WeightOrderSpec(l=0.0, beta=1.0).require_admissible()
    with pytest.raises(ValueError):
        WeightOrderSpec(l=-1.0, beta=-1.0)
    with pytest.raises(ValueError):
        WeightOrderSpec(l=-1.0, beta=1.0, sign=0)


@given(l=st.floats(-1.45, -0.55), beta=st.floats(0.01, 5.0), sign=st.sampled_from([1, -1]))
def test_threshold_crossing(l, beta, sign):
    assert threshold_check(WeightOrderSpec(l=l, beta=beta, sign=sign))


def _flow_oracle():
    tau, mu, beta, s = sp.symbols("tau mu beta s", real=True)
    rho = sp.sqrt(tau**2 + mu**2)
    order = s * beta * tau / rho
    # fibre part of the rescaled Hamilton field of tau^2 + |mu|^2
    field = 2 * mu**2 * sp.diff(order, tau) - 2 * tau * mu * sp.diff(order, mu)
    return sp.lambdify((tau, mu, beta, s), sp.simplify(field / rho), "numpy")


def test_flow_derivative_symbolic_oracle():
    oracle = _flow_oracle()
    rng = np.random.default_rng(7)
    ang = rng.uniform(0, math.pi, 10_000)  # cosphere: tau = cos, |mu| = sin
    tau, mu = np.cos(ang), np.sin(ang)
    for sign in (1, -1):
        w = WeightOrderSpec(l=-1.0, beta=1.7, sign=sign)
        got = flow_derivative(w, tau, mu)
        assert_allclose(got, oracle(tau, mu, 1.7, sign), rtol=1e-12, atol=1e-14)
        if sign > 0:
            assert np.all(got >= 0)
    assert_allclose(flow_derivative(WeightOrderSpec(l=-1.0, beta=2.0), 0.0, 3.0), 4.0)
    with pytest.raises(ValueError):
        flow_derivative(WeightOrderSpec(l=-1.0, beta=1.0), 0.0, 0.0)


# ----------------------------------------------------------------------------- norms

def test_smoothstep_and_far_cutoff():
    x = np.linspace(-1, 2, 301)
    s = smoothstep(x)
    assert np.all(s[x <= 0] == 0) and np.all(s[x >= 1] == 1)
    assert np.all(np.diff(s) >= 0)
    assert_allclose(smoothstep(0.5), 0.5)
    chi = far_cutoff(GRID)
    assert np.all(chi[GRID.r < 0.5] == 0)
    assert np.all(chi[(GRID.r > 2) & (GRID.r < 100)] == 1)
    assert chi[-1] == 0


def test_constant_order_far_norm_by_parseval():
    # beta = 0: order 1/2 - (l+1) = 1 and the far norm is int |g_t|^2 + (1+lam)|g|^2 dt
    # with g = r^{l+n/2} u; for a bump near r = 20 only the far part contributes
    w = WeightOrderSpec(l=-1.5, beta=0.0)
    mode = MODES[2]
    c, s = math.log(20.0), 0.3
    t = GRID.t
    u = ModeFunction(mode, GRID, np.exp(-((t - c) / s) ** 2))
    far, near = b_norm_parts([u], w)
    k = w.l + mode.n / 2

    def g(t):
        return math.exp(k * t - ((t - c) / s) ** 2)

    def gt(t):
        return (k - 2 * (t - c) / s**2) * g(t)

    exact = quad(lambda t: gt(t) ** 2 + (1 + mode.lam) * g(t) ** 2, c - 6, c + 6, limit=200)[0]
    assert near < 1e-20 * far
    assert_allclose(far, mode.mult * exact, rtol=1e-6)
    assert_allclose(b_norm([u], w), math.sqrt(mode.mult * exact), rtol=1e-6)


def test_near_order():
    assert near_order(WeightOrderSpec(l=-1.0, beta=1.0), 0.0) == 2
    assert near_order(WeightOrderSpec(l=-1.0, beta=1.0), -1.0) == 1
    assert near_order(WeightOrderSpec(l=-1.0, beta=0.5), -2.0) == 0


def test_weighted_L2_against_quadrature():
    u = [ModeFunction(MODES[0], GRID, np.exp(-GRID.r**2))]
    for w_exp in (-2.0, 0.0, 1.5):
        ref = quad(lambda r: (1 + r * r) ** w_exp * math.exp(-2 * r * r) * r * r, 0, np.inf)[0]
        assert_allclose(weighted_L2_norm(u, w_exp), math.sqrt(ref), rtol=1e-8)
    # multiplicities count
    v = [ModeFunction(MODES[1], GRID, np.exp(-GRID.r**2))]
    assert_allclose(weighted_L2_norm(v, 0.0) ** 2, 3 * weighted_L2_norm(u, 0.0) ** 2, rtol=1e-14)


def _random_modes(seed, lo=5.0, hi=60.0):
    rng = np.random.default_rng(seed)
    out = []
    for m in MODES:
        c = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        amp = rng.normal() + 1j * rng.normal()
        out.append(ModeFunction(m, GRID, log_gauss(GRID, c, rng.uniform(0.3, 0.8), amp)))
    return out


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), l=st.floats(-1.4, -0.6), beta=st.floats(0.1, 2.0))
def test_duality_bound(seed, l, beta):
    # on data supported where chi_far = 1, |<u, v>| <= |u|_{r~, l} |v|_{-r~, -l}
    u, v = _random_modes(seed), _random_modes(seed + 1)
    w = WeightOrderSpec(l=l, beta=beta, sign=1)
    dual = WeightOrderSpec(l=-l - 1.0, beta=beta, sign=-1)
    lhs = abs(pairing(u, v))
    rhs = b_norm(u, w) * b_norm(v, dual, decay_shift=1.0)
    assert lhs <= rhs * (1 + 1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_norm_monotonicity(seed):
    u = _random_modes(seed, lo=0.3, hi=30.0)
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    assert b_norm(u, w, order_shift=-1.0) <= b_norm(u, w)
    assert b_norm(u, w, order_shift=-2.0) <= b_norm(u, w, order_shift=-1.0)
    far = _random_modes(seed, lo=5.0, hi=60.0)
    assert b_norm(far, w, decay_shift=-1.0) <= b_norm(far, w)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), mag=st.floats(1e-100, 1e100), arg=st.floats(-math.pi, math.pi))
def test_norm_homogeneity(seed, mag, arg):
    # squared norms stay representable for |c| within 1e-100..1e100
    c = mag * complex(math.cos(arg), math.sin(arg))
    u = _random_modes(seed, lo=0.3, hi=30.0)
    w = WeightOrderSpec(l=-1.0, beta=1.0)
    cu = [x.scale(c) for x in u]
    assert_allclose(b_norm(cu, w), abs(c) * b_norm(u, w), rtol=1e-12, atol=1e-300)
    assert_allclose(weighted_L2_norm(cu, 1.5), abs(c) * weighted_L2_norm(u, 1.5), rtol=1e-12,
                    atol=1e-300)


def test_pairing_symmetries():
    u, v = _random_modes(1, 0.3, 30.0), _random_modes(2, 0.3, 30.0)
    assert_allclose(pairing(u, v), np.conj(pairing(v, u)), rtol=1e-14)
    assert_allclose(pairing(u, u).real, weighted_L2_norm(u, 0.0) ** 2, rtol=1e-12)
    assert abs(pairing(u, u).imag) < 1e-14 * abs(pairing(u, u))


def test_mode_function_arithmetic():
    a, b = _random_modes(3)[0], _random_modes(4)[0]
    assert_allclose((a + b - b).samples, a.samples, atol=1e-15)
    assert_allclose(a.conj().samples, np.conj(a.samples))
    with pytest.raises(ValueError):
        a + _random_modes(3)[1]
    with pytest.raises(ValueError):
        ModeFunction(MODES[0], GRID, np.zeros(5))
    with pytest.raises(ValueError):
        ModeFunction(MODES[0], GRID, np.full(GRID.N, np.nan))
