import math

import numpy as np
import pytest

from horizonlab.bflow import (
    BPhasePoint,
    CompactifiedPoint,
    KdSChart,
    StarChart,
    StaticChart,
    classify_component,
    dual_metric,
    ef_chart,
    integrate,
    linearize_radial,
    linearize_trapping,
    measure_beta,
)
from horizonlab.bflow.phase import carter, kds_hamiltonian, polar_to_pole, pole_to_polar, solve_eta, solve_xi
from horizonlab.bflow.structure import hg2_r, hg2_r_formula, hg_r, kds_trapped_datum, quadratic_defining_rate, trapped_datum
from horizonlab.errors import ChartCoverageError, DomainError
from horizonlab.spacetime import SpacetimeParams, horizon_data, mu_derivs


class TestPhaseSpace:
    def test_dual_metric_static_form(self, rnds):
        # static chart: G = sigma^2 / mu - mu xi^2 - eta^2 / r^2
        ch = StaticChart(rnds)
        r, s, xi, eta = 3.0, 0.4, 0.2, 0.3
        m = mu_derivs(rnds, r, 0)[0]
        g = dual_metric(BPhasePoint(1.0, r, s, xi, eta=eta), ch)
        assert g == pytest.approx(s * s / m - m * xi * xi - eta * eta / (r * r), rel=1e-12)

    def test_solve_xi_and_eta_give_null_covectors(self, rnds_charts):
        ch = StarChart(rnds_charts)
        for r in (0.5, 1.0, 3.0, 8.0):
            for branch in (1, -1):
                xi = solve_xi(ch, r, 1.0, 0.5, branch)
                assert abs(dual_metric(BPhasePoint(1.0, r, 1.0, xi, eta=0.5), ch)) < 1e-12
            eta = solve_eta(ch, r, 0.3, 0.0) if ch.abc(r)[0] > 0 else None
            if eta is not None:
                assert abs(dual_metric(BPhasePoint(1.0, r, 0.3, 0.0, eta=eta), ch)) < 1e-12

    def test_compactified_roundtrip(self):
        p = BPhasePoint(0.5, 2.5, 0.3, -0.7, eta=0.2)
        q = CompactifiedPoint.from_point(p).to_point()
        assert q.r == p.r and q.tau0 == p.tau0
        assert q.sigma / q.xi == pytest.approx(p.sigma / p.xi, rel=1e-14)
        assert q.eta / q.xi == pytest.approx(p.eta / p.xi, rel=1e-14)

    def test_components_swap_under_antipodal_map(self, rnds_charts):
        ch = StarChart(rnds_charts)
        for r in (0.5, 1.0, 3.0):
            xi = solve_xi(ch, r, 1.0, 0.5, 1)
            pt = BPhasePoint(1.0, r, 1.0, xi, eta=0.5)
            a, b = classify_component(pt, rnds_charts), classify_component(pt.antipodal(), rnds_charts)
            assert {a, b} == {"+", "-"}

    def test_chart_coverage(self, rnds_charts):
        ch = StarChart(rnds_charts)
        with pytest.raises(ChartCoverageError):
            ch.check(0.5 * rnds_charts.r_min)

    def test_pole_chart_roundtrip(self):
        y = np.array([0.5, 3.0, 0.05, 1.2, 0.1, 0.3, 0.2, 0.05])
        assert np.allclose(pole_to_polar(polar_to_pole(y)), y, atol=1e-13)


class TestRadialSets:
    @pytest.mark.parametrize("j", [2, 3])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_linearization(self, rnds, rnds_hd, j, sign):
        res = linearize_radial(ef_chart(rnds, rnds_hd, j), rnds_hd, j, sign)
        ev, pred = np.array(res["eigenvalues"]), np.array(res["predicted"])
        assert np.max(np.abs(ev - pred) / np.abs(pred)) < 1e-4
        assert res["beta"] == pytest.approx(res["beta_formula"], rel=1e-2)
        assert res["beta_formula"] == pytest.approx(rnds_hd.beta[j], rel=1e-12)

    @pytest.mark.parametrize("j", [2, 3])
    def test_measured_threshold(self, rnds, rnds_hd, j):
        res = measure_beta(ef_chart(rnds, rnds_hd, j), rnds_hd, j, 1)
        assert res["beta_measured"] == pytest.approx(rnds_hd.beta[j], rel=1e-2)

    def test_quadratic_defining_function(self, rnds, rnds_hd):
        res = quadratic_defining_rate(ef_chart(rnds, rnds_hd, 2), rnds_hd, 2, 1)
        assert res["monotone"]
        assert res["rate"] == pytest.approx(res["predicted"], rel=1e-3)


class TestTrapping:
    @pytest.mark.parametrize("charge", [0.0, 0.5])
    def test_expansion_rate(self, charge):
        res = linearize_trapping(SpacetimeParams.rnds(0.02, 1.0, charge), sigma=0.1)
        assert res["rel_err_jacobian"] < 1e-2
        assert res["rel_err_trajectory"] < 1e-2

    @pytest.mark.parametrize("r", [2.5, 3.5, 6.0])
    def test_second_derivative_identity(self, rnds, r):
        ch = StaticChart(rnds)
        pt = trapped_datum(ch, r, 0.7)
        assert hg_r(ch, pt) == 0
        assert hg2_r(ch, pt) == pytest.approx(hg2_r_formula(ch, r, 0.7), abs=1e-8)

    def test_trapped_orbit_stays(self, rnds, rnds_hd):
        ch = StaticChart(rnds, rnds_hd.r2 * 1.001, rnds_hd.r3 * 0.999)
        rp = rnds_hd.trapping.r_p
        pt = BPhasePoint(1.0, rp, 0.1, 0.0, solve_eta(ch, rp, 0.1, 0.0))
        tr = integrate(pt, ch, 50.0)
        assert np.max(np.abs(tr.r - rp)) < 1e-6


class TestIntegrator:
    def test_conservation(self, rnds, rnds_hd):
        ch = StaticChart(rnds, rnds_hd.r2 * 1.001, rnds_hd.r3 * 0.999)
        r = 5.0
        pt = BPhasePoint(1.0, r, 0.3, solve_xi(ch, r, 0.3, 1.0, 1), eta=1.0)
        tr = integrate(pt, ch, 100.0, rtol=1e-12, atol=1e-14)
        d = tr.drift()
        assert d["G_drift"] < 1e-8
        assert d["sigma_drift"] == 0.0

    def test_chart_exit_tag(self, rnds, rnds_hd):
        ch = StaticChart(rnds, rnds_hd.r2 * 1.01, rnds_hd.r3 * 0.99)
        r = 5.0
        pt = BPhasePoint(1.0, r, 0.3, solve_xi(ch, r, 0.3, 0.0, 1), eta=0.0)
        tr = integrate(pt, ch, 1e4)
        assert tr.tag in ("exit_low", "exit_high")

    def test_backward_integration_reverses(self, rnds, rnds_hd):
        ch = StaticChart(rnds, rnds_hd.r2 * 1.001, rnds_hd.r3 * 0.999)
        r = 5.0
        pt = BPhasePoint(1.0, r, 0.3, solve_xi(ch, r, 0.3, 1.0, 1), eta=1.0)
        fw = integrate(pt, ch, 5.0, rtol=1e-12, atol=1e-14)
        end = BPhasePoint.from_state(fw.states[-1])
        bw = integrate(end, ch, -5.0, rtol=1e-12, atol=1e-14)
        assert np.allclose(bw.states[-1][:2], fw.states[0][:2], atol=1e-8)

    def test_resampling(self, rnds, rnds_hd):
        ch = StaticChart(rnds, rnds_hd.r2 * 1.001, rnds_hd.r3 * 0.999)
        pt = BPhasePoint(1.0, 5.0, 0.3, solve_xi(ch, 5.0, 0.3, 1.0, 1), eta=1.0)
        tr = integrate(pt, ch, 5.0, n_out=11)
        assert len(tr.s) == 11
        assert np.allclose(np.diff(tr.s), 0.5)
        assert tr.to_csv().splitlines()[0].startswith("s,tau,r")


class TestKerrDeSitter:
    def test_carter_and_hamiltonian_conserved(self):
        p = SpacetimeParams.kds(0.02, 1.0, 0.05)
        hd = horizon_data(p)
        ch = KdSChart(p, -1)
        pt = kds_trapped_datum(ch, hd, 1.0, 0.1, 0.05)
        tr = integrate(pt, ch, 100.0, rtol=1e-12, atol=1e-14)
        d = tr.drift()
        assert tr.s[-1] == pytest.approx(100.0)
        assert d["G_drift"] < 1e-8
        assert d["carter_rel_drift"] < 1e-8
        assert d["zeta_drift"] < 1e-12

    def test_pole_crossing(self):
        p = SpacetimeParams.kds(0.02, 1.0, 0.05)
        hd = horizon_data(p)
        ch = KdSChart(p, -1, r_max=2 * hd.r3)
        pt = kds_trapped_datum(ch, hd, 1.0, 0.1, 0.005)
        tr = integrate(pt, ch, 100.0, rtol=1e-12, atol=1e-14)
        assert tr.chart_switches > 0
        assert tr.drift()["carter_rel_drift"] < 1e-8

    def test_fiber_blowup_terminates(self):
        p = SpacetimeParams.kds(0.02, 1.0, 0.3)
        hd = horizon_data(p)
        ch = KdSChart(p, -1, r_max=2 * hd.r3)
        pt = kds_trapped_datum(ch, hd, 1.0, 0.1, 0.005)
        tr = integrate(pt, ch, 100.0, rtol=1e-12, atol=1e-14)
        # falls onto the event horizon with the fiber blowing up at finite affine time
        assert tr.tag == "fiber_limit"
        assert tr.s[-1] < 100.0
        assert tr.r[-1] == pytest.approx(hd.r2, rel=1e-6)

    def test_hamiltonian_of_datum_is_null(self):
        p = SpacetimeParams.kds(0.02, 1.0, 0.3)
        hd = horizon_data(p)
        ch = KdSChart(p, -1)
        pt = kds_trapped_datum(ch, hd, 1.0, 0.1, 0.05)
        y = pt.state()
        assert abs(kds_hamiltonian(ch, y)) < 1e-12
        assert carter(ch, y) > 0

    def test_kds_chart_requires_kds(self, rnds):
        with pytest.raises(DomainError):
            KdSChart(rnds, -1)

    def test_small_spin_threshold(self):
        ratios = []
        for a in (0.05, 0.025):
            hd = horizon_data(SpacetimeParams.kds(0.02, 1.0, a))
            ratios.append(hd.beta[1] / (a * a))
        assert abs(ratios[1] - 1) < abs(ratios[0] - 1) < 0.05
        assert math.isfinite(ratios[0])
