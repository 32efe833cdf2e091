import json
import math

import numpy as np
import pytest

from horizonlab.analysis import (
    fit_decay,
    fit_late_constant,
    fit_power,
    fit_prony,
    near_extremal_design,
    regularity_predictors,
)
from horizonlab.errors import HorizonlabError, IllConditioned
from horizonlab.spacetime import SpacetimeParams, horizon_data


class TestFitDecay:
    def test_exact_exponential(self):
        t = np.linspace(0, 40, 401)
        res = fit_decay(t, 2 + 3 * np.exp(-0.5 * t))
        assert res.u0 == pytest.approx(2.0, abs=1e-10)
        assert res.alpha == pytest.approx(0.5, rel=1e-8)
        assert res.amplitude == pytest.approx(3.0, rel=1e-6)
        assert res.residual_max < 1e-9

    def test_noise_robust(self):
        rng = np.random.default_rng(7)
        t = np.linspace(0, 30, 601)
        y = -1 + 4 * np.exp(-0.3 * t) + 1e-6 * rng.standard_normal(t.size)
        res = fit_decay(t, y)
        assert res.u0 == pytest.approx(-1.0, abs=1e-5)
        assert res.alpha == pytest.approx(0.3, rel=1e-3)

    def test_window(self):
        t = np.linspace(0, 40, 801)
        y = 1 + np.exp(-0.2 * t) + 50 * np.exp(-3 * t)  # fast transient excluded by the window
        res = fit_decay(t, y, window=(10, 40))
        assert res.alpha == pytest.approx(0.2, rel=1e-6)
        assert tuple(res.window) == (10, 40)

    def test_without_constant_measures_growth(self):
        t = np.linspace(0, 5, 51)
        res = fit_decay(t, np.exp(0.4 * t), constant=False)
        assert res.alpha == pytest.approx(-0.4, rel=1e-10)

    def test_flat_series(self):
        t = np.linspace(0, 10, 50)
        with pytest.raises(IllConditioned):
            fit_decay(t, np.full_like(t, 3.0))

    def test_oscillating_series(self):
        t = np.linspace(0, 40, 400)
        with pytest.raises(IllConditioned):
            fit_decay(t, np.exp(-0.1 * t) * np.cos(2 * t))

    def test_non_settling_series(self):
        t = np.linspace(0, 10, 200)
        with pytest.raises(IllConditioned):
            fit_decay(t, np.exp(0.3 * t))

    def test_too_few_points(self):
        t = np.linspace(0, 10, 100)
        with pytest.raises(IllConditioned):
            fit_decay(t, np.exp(-t), window=(9.9, 10))

    def test_json_is_finite_and_reproducible(self):
        t = np.linspace(0, 20, 201)
        y = 1 + np.exp(-t)
        a, b = fit_decay(t, y).to_json(), fit_decay(t, y).to_json()
        assert a == b
        d = json.loads(a)
        assert d["provenance"]["input_hash"]


class TestProny:
    def test_ringdown(self):
        t = np.linspace(0, 20, 401)
        y = 0.5 + np.exp(-0.3 * t) * np.cos(2 * t + 0.4)
        res = fit_prony(t, y)
        assert res.alpha == pytest.approx(0.3, rel=1e-6)
        assert res.omega == pytest.approx(2.0, rel=1e-6)
        assert res.u0 == pytest.approx(0.5, abs=1e-8)

    def test_two_rates_slowest_reported(self):
        t = np.linspace(0, 15, 301)
        res = fit_prony(t, 2 * np.exp(-0.2 * t) + np.exp(-1.5 * t), constant=False)
        assert res.alpha == pytest.approx(0.2, rel=1e-6)
        assert res.omega == pytest.approx(0.0, abs=1e-8)

    def test_needs_uniform_sampling(self):
        t = np.sort(np.random.default_rng(0).uniform(0, 10, 50))
        with pytest.raises(IllConditioned):
            fit_prony(t, np.exp(-t))


class TestPower:
    def test_exact_power(self):
        V = np.logspace(-8, -2, 60)
        res = fit_power(V, 3 * V**-0.7)
        assert res.exponent == pytest.approx(-0.7, abs=1e-12)
        assert res.amplitude == pytest.approx(3.0, rel=1e-10)

    def test_log_input(self):
        lV = np.linspace(-200, -100, 50)
        res = fit_power(lV, 0.5 * lV + 1.0, log_input=True)
        assert res.exponent == pytest.approx(0.5, abs=1e-12)

    def test_window_selects_range(self):
        V = np.logspace(-10, 0, 101)
        f = V**-1 + V**2  # the power law holds as V -> 0
        res = fit_power(V, f, window=(0, 1e-4))
        assert res.exponent == pytest.approx(-1.0, abs=1e-6)

    def test_zero_crossing_rejected(self):
        V = np.logspace(-5, -1, 30)
        f = np.sin(V * 100)
        f[3] = 0.0
        with pytest.raises(IllConditioned):
            fit_power(V, f)

    def test_non_monotone_rejected(self):
        V = np.concatenate([np.logspace(-5, -1, 20), np.logspace(-5, -1, 20)])
        with pytest.raises(IllConditioned):
            fit_power(V, V)


class TestLateConstant:
    def test_prefers_monotone_fit(self):
        t = np.linspace(0, 40, 401)
        res = fit_late_constant(t, 1 + np.exp(-0.25 * t))
        assert res.u0 == pytest.approx(1.0, abs=1e-9)
        assert "fallback_reason" not in res.provenance

    def test_oscillatory_falls_back_to_prony(self):
        t = np.linspace(0, 30, 601)
        res = fit_late_constant(t, -0.2 + np.exp(-0.2 * t) * np.sin(3 * t))
        assert res.method.startswith("prony")
        assert res.u0 == pytest.approx(-0.2, abs=1e-8)
        assert "fallback_reason" in res.provenance

    def test_pure_ringdown_settles_to_zero(self):
        t = np.linspace(0, 30, 601)
        res = fit_late_constant(t, np.exp(-0.2 * t) * np.sin(3 * t))
        assert res.u0 == pytest.approx(0.0, abs=1e-8)


class TestPredictors:
    def test_reissner_nordstrom_values(self):
        hd = horizon_data(SpacetimeParams.rn_flat(1.0, 0.8))
        assert hd.beta[1] == pytest.approx(4 / 15, rel=1e-12)
        assert hd.kappa[1] == pytest.approx(3.75, rel=1e-12)
        assert hd.kappa[2] == pytest.approx(0.234375, rel=1e-12)
        rep = regularity_predictors(hd, alpha=hd.kappa[1] / 2)
        assert rep["s"] == pytest.approx(1.0, rel=1e-12)
        assert rep["status"] == "theorem"
        assert rep["h1_criterion"]["status"] == "conjecture"
        assert rep["regularity_cap"]["status"] == "conjecture"
        assert rep["h1_criterion"]["value"] is False

    def test_form_degree_shift(self, rnds_hd):
        rep = regularity_predictors(rnds_hd, 0.1, k=1)
        assert rep["s_shifted"] == pytest.approx(rep["s"] - 1)
        assert rep["gap_sanity"]["gamma0"] == pytest.approx(rnds_hd.trapping.gamma0)

    def test_requires_cauchy_horizon(self, sds):
        with pytest.raises(HorizonlabError):
            regularity_predictors(horizon_data(sds), 0.1)


class TestNearExtremal:
    def test_design_target_two(self):
        d = near_extremal_design(2.0)
        assert d.seed_epsilon == pytest.approx(1 / 576, rel=1e-12)
        assert d.epsilon == pytest.approx(0.001405, rel=2e-3)
        assert d.s_value > 2.0
        # the boundary is sharp: slightly larger epsilon fails
        hd = horizon_data(SpacetimeParams.rn_flat(1.0, 1 - d.epsilon * (1 + 1e-6)))
        assert 0.5 + hd.trapping.gamma0 * hd.beta[1] < 2.0

    def test_design_moderate_target(self):
        d = near_extremal_design(0.6)
        assert d.epsilon == pytest.approx(0.0724, rel=5e-3)
        lo, hi = d.lambda_window
        assert lo == 0.0 and hi >= 0.0

    def test_rejects_low_target(self):
        with pytest.raises(ValueError):
            near_extremal_design(0.4)

    def test_asymptotic_law(self):
        d = near_extremal_design(20.0)
        assert math.sqrt(d.epsilon) * 16 * (d.target_s - 0.5) == pytest.approx(1.0, rel=0.05)


def test_prony_drops_off_grid_final_sample():
    t = np.append(np.arange(0, 20, 0.05), 19.98)
    res = fit_prony(t, 0.5 + np.exp(-0.3 * t))
    assert res.alpha == pytest.approx(0.3, rel=1e-8)
    assert res.n_points == len(t) - 1
