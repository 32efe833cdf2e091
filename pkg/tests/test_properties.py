"""Property-based invariants."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from horizonlab.analysis import fit_decay, fit_power
from horizonlab.bflow import BPhasePoint, StarChart, dual_metric
from horizonlab.bflow.phase import solve_xi
from horizonlab.errors import HorizonlabError
from horizonlab.spacetime import SpacetimeParams, build_charts, horizon_data, mu, mu_derivs
from horizonlab.waves.exterior import lagrange_weights

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

lams = st.floats(0.001, 0.08)
charges = st.floats(0.05, 0.9)


def _rnds(lam, q):
    try:
        return SpacetimeParams.rnds(lam, 1.0, q), horizon_data(SpacetimeParams.rnds(lam, 1.0, q))
    except HorizonlabError:
        assume(False)


@SETTINGS
@given(lams, charges)
def test_horizons_are_simple_zeros(lam, q):
    p, hd = _rnds(lam, q)
    assert hd.r1 < hd.r2 < hd.r3
    for j in (1, 2, 3):
        r = hd.radii[j]
        m0, m1 = mu_derivs(p, r, 1)
        assert abs(m0) < 1e-10 * max(1.0, r * r)
        assert hd.kappa[j] == pytest.approx(abs(m1) / 2, rel=1e-10)
        assert hd.beta[j] * hd.kappa[j] == pytest.approx(1.0, rel=1e-12)
    mid = 0.5 * (hd.r2 + hd.r3)
    assert mu(p, mid) > 0 and mu(p, 0.5 * (hd.r1 + hd.r2)) < 0


@SETTINGS
@given(lams, charges)
def test_chart_determinant(lam, q):
    p, _ = _rnds(lam, q)
    ch = build_charts(p)
    r = np.linspace(ch.r_min, ch.r_max, 64)
    A, B, C = ch.components_array(r)[:3]
    assert np.max(np.abs(B * B - A * C - 1)) < 1e-10


@SETTINGS
@given(st.floats(0.3, 9.0), st.floats(0.1, 3.0), st.floats(-2.0, 2.0), st.sampled_from([1, -1]))
def test_solve_xi_is_null(r, sigma, eta, branch):
    p = SpacetimeParams.rnds(0.02, 1.0, 0.5)
    ch = StarChart(build_charts(p))
    try:
        xi = solve_xi(ch, r, sigma, eta, branch)
    except HorizonlabError:
        assume(False)
    g = dual_metric(BPhasePoint(1.0, r, sigma, xi, eta=eta), ch)
    scale = sigma * sigma + xi * xi + eta * eta
    assert abs(g) < 1e-11 * scale


@SETTINGS
@given(st.floats(0.0, 1.0), st.integers(5, 40))
def test_lagrange_partition_of_unity(x, n):
    g = np.linspace(0.0, 1.0, n)
    idx, w = lagrange_weights(g, x)
    assert math.isclose(float(np.sum(w)), 1.0, abs_tol=1e-13)
    assert np.dot(w, g[idx]) == pytest.approx(x, abs=1e-13)


@SETTINGS
@given(st.floats(-5, 5), st.floats(0.5, 10), st.sampled_from([1, -1]), st.floats(0.05, 1.0), st.floats(0.1, 10),
       st.floats(-50, 50))
def test_fit_decay_covariance(u0, c, sign, alpha, scale, shift):
    c = sign * c
    t = np.linspace(0, 40 / alpha, 400)
    y = u0 + c * np.exp(-alpha * t)
    base = fit_decay(t, y)
    # affine change of the dependent variable
    scaled = fit_decay(t, scale * y + shift)
    assert scaled.u0 == pytest.approx(scale * base.u0 + shift, abs=1e-6 * (abs(shift) + scale * (abs(u0) + abs(c))))
    assert scaled.alpha == pytest.approx(base.alpha, rel=1e-6)
    # time translation changes the amplitude only
    moved = fit_decay(t + 7.0, y)
    assert moved.alpha == pytest.approx(base.alpha, rel=1e-6)
    assert moved.amplitude == pytest.approx(base.amplitude * math.exp(7.0 * base.alpha), rel=1e-5)


@SETTINGS
@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(-8, -3))
def test_fit_power_exact(p, c, lo):
    V = np.logspace(lo, -1, 40)
    res = fit_power(V, c * V**p)
    assert res.exponent == pytest.approx(p, abs=1e-9)
    assert res.amplitude == pytest.approx(c, rel=1e-8)
