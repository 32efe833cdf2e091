import numpy as np
import pytest

from horizonlab.errors import CausalityError, CFLError, ChartCoverageError, DomainError
from horizonlab.spacetime import SpacetimeParams, build_charts, mu
from horizonlab.waves import (
    ExteriorConfig,
    HorizonData1D,
    InteriorConfig,
    Tortoise,
    exterior_evolve,
    interior_evolve,
    mode_reduce,
    probe_ray,
    probe_slice,
    probe_snapshots,
)
from horizonlab.waves.exterior import GridSpec, exterior_domain, lagrange_weights
from horizonlab.waves.io import read_snapshot, write_snapshot
from horizonlab.waves.mms import InteriorManufactured, exterior_mms, interior_mms, observed_orders


class TestOperator:
    def test_speeds_bracket_zero_in_exterior(self, rnds_charts, rnds_hd):
        r = np.linspace(rnds_hd.r2 + 0.1, rnds_hd.r3 - 0.1, 50)
        lo, hi = mode_reduce(rnds_charts, 0, 0.0, r).speeds()
        assert np.all(lo < 0) and np.all(hi > 0)

    def test_outflow_at_horizons(self, rnds_charts, rnds_hd):
        d = rnds_charts.delta
        op = mode_reduce(rnds_charts, 0, 0.0, np.array([rnds_hd.r2 - d, rnds_hd.r3 + d]))
        lo, hi = op.speeds()
        assert max(lo[0], hi[0]) < 0  # both characteristics leave through r_2 - delta
        assert min(lo[1], hi[1]) > 0  # and through r_3 + delta

    def test_constant_annihilated_for_massless_s_wave(self, rnds_charts):
        r = np.linspace(2.0, 10.0, 20)
        op = mode_reduce(rnds_charts, 0, 0.0, r)
        z = np.zeros_like(r)
        assert np.allclose(op.apply(np.ones_like(r), z, z, z, z, z), 0.0)
        op2 = mode_reduce(rnds_charts, 0, 0.04, r)
        assert not np.allclose(op2.apply(np.ones_like(r), z, z, z, z, z), 0.0)


class TestLagrange:
    def test_reproduces_cubics(self):
        g = np.linspace(0, 1, 21)
        for r in (0.0, 0.013, 0.5, 0.987, 1.0):
            idx, w = lagrange_weights(g, r)
            assert np.dot(w, g[idx] ** 3) == pytest.approx(r**3, abs=1e-13)

    def test_outside_grid(self):
        with pytest.raises(ChartCoverageError):
            lagrange_weights(np.linspace(0, 1, 11), 1.5)


class TestExterior:
    def test_constant_preserved(self, rnds_charts):
        cfg = ExteriorConfig(n=201, t_end=5.0)
        lo, hi, _ = exterior_domain(rnds_charts, cfg)
        r, _ = GridSpec(lo, hi, 201).radii()
        fld, _ = exterior_evolve(rnds_charts, cfg, data=(np.full_like(r, 0.7), np.zeros_like(r), np.zeros_like(r)))
        assert np.max(np.abs(fld.u - 0.7)) < 1e-12

    def test_linearity(self, rnds_charts):
        cfg = ExteriorConfig(n=201, t_end=5.0, probes=(2.5, 4.0), record_dt=0.5)
        lo, hi, _ = exterior_domain(rnds_charts, cfg)
        r, _ = GridSpec(lo, hi, 201).radii()
        g1 = np.exp(-((r - 3.0) ** 2))
        g2 = np.sin(r) * np.exp(-((r - 5.0) ** 2) / 4)
        d1 = (g1, 0.3 * g1, np.gradient(g1, r))
        d2 = (g2, -g2, np.gradient(g2, r))
        a, b = 1.7, -0.4
        d3 = tuple(a * x + b * y for x, y in zip(d1, d2))
        _, s1 = exterior_evolve(rnds_charts, cfg, data=d1)
        _, s2 = exterior_evolve(rnds_charts, cfg, data=d2)
        _, s3 = exterior_evolve(rnds_charts, cfg, data=d3)
        assert np.max(np.abs(s3.u - (a * s1.u + b * s2.u))) < 1e-12

    def test_domain_of_dependence(self, rnds_charts):
        full = ExteriorConfig(n=801, t_end=4.0, pulse_center=3.0, probes=(2.5, 3.0), record_dt=0.1)
        fld, ts = exterior_evolve(rnds_charts, full)
        lo, hi, _ = exterior_domain(rnds_charts, full)
        r, _ = GridSpec(lo, hi, 801).radii()
        dt = fld.meta["dt"]

        def cut(k):
            cfg = ExteriorConfig(n=k + 1, r_max=r[k], dt=dt, t_end=4.0, pulse_center=3.0, probes=(2.5, 3.0),
                                 record_dt=0.1, allow_inflow=True)
            return exterior_evolve(rnds_charts, cfg)[1]

        # grid prefix cut well outside the light cone of the probes: identical series
        assert np.max(np.abs(cut(300).u - ts.u)) < 1e-12
        # a cut inside the cone changes them (the check is not vacuous)
        assert np.max(np.abs(cut(150).u - ts.u)) > 1e-3

    def test_inflow_boundary_rejected(self, rnds_charts):
        with pytest.raises(CausalityError):
            exterior_evolve(rnds_charts, ExteriorConfig(n=101, r_max=6.0, t_end=1.0))

    def test_cfl(self, rnds_charts):
        with pytest.raises(CFLError):
            exterior_evolve(rnds_charts, ExteriorConfig(n=101, cfl=3.0, t_end=1.0))
        with pytest.raises(CFLError):
            exterior_evolve(rnds_charts, ExteriorConfig(n=101, dt=1.0, t_end=1.0))

    def test_needs_two_horizons(self):
        ch = build_charts(SpacetimeParams.rn_flat(1.0, 0.5))
        with pytest.raises((DomainError, ChartCoverageError)):
            exterior_evolve(ch, ExteriorConfig(n=101, t_end=1.0))

    def test_probes_and_snapshots(self, rnds_charts):
        cfg = ExteriorConfig(n=201, t_end=2.0, pulse_center=4.0, probes=(4.0,), record_dt=0.25, snapshot_every=5)
        fld, ts = exterior_evolve(rnds_charts, cfg)
        assert ts.t[0] == 0.0 and ts.t[-1] == pytest.approx(2.0)
        assert probe_slice(fld, 4.0) == pytest.approx(ts.column(0)[-1], abs=1e-12)
        snap = probe_snapshots(fld, 4.0)
        assert len(snap.t) == len(fld.snapshots)
        assert snap.u[0, 0] == pytest.approx(1.0, abs=1e-4)  # cubic interpolation of the pulse peak
        assert fld.meta["design_order"] == 2

    def test_mms_second_order(self, rnds_charts):
        res = exterior_mms(rnds_charts, ns=(101, 201, 401), t_end=1.0)
        assert abs(res["orders"][-1] - 2.0) < 0.2

    def test_de_sitter_centre_regular(self, ds3):
        ch = build_charts(ds3)
        for ell in (0, 1, 2):
            fld, ts = exterior_evolve(ch, ExteriorConfig(ell=ell, n=200, t_end=5.0, pulse_center=0.5,
                                                         pulse_width=0.15, probes=(0.5,), record_dt=0.5))
            assert np.all(np.isfinite(fld.u))
            assert np.max(np.abs(fld.u)) < 10


class TestTortoise:
    def test_inverse(self, rnds):
        t = Tortoise(rnds)
        x = np.linspace(-20, -3, 10)  # r saturates at r_1 in double precision beyond x ~ -2.6
        assert np.allclose(t.x_of_r(t.r_of_x(x)), x, atol=1e-9)

    def test_derivative(self, rnds):
        t = Tortoise(rnds)
        r, h = np.array([0.5, 1.0, 1.5]), 1e-6
        dx = (t.x_of_r(r + h) - t.x_of_r(r - h)) / (2 * h)
        assert np.allclose(dx * mu(rnds, r), 1.0, rtol=1e-6)

    def test_needs_cauchy_horizon(self, sds):
        with pytest.raises(DomainError):
            Tortoise(sds)


class TestInterior:
    def test_constant_preserved(self, rnds):
        res = interior_evolve(rnds, InteriorConfig(h=0.05, v_max=20, u_min=-30,
                                                   horizon=HorizonData1D(kind="model", u0=1.0, amp=0.0)))
        assert np.max(np.abs(res.last_column - 1)) < 1e-8
        assert res.sup_abs == pytest.approx(1.0, abs=1e-8)

    def test_schemes_agree(self, rnds):
        a = interior_evolve(rnds, InteriorConfig(h=0.02, v_max=10, u_min=-20, scheme="phi"))
        b = interior_evolve(rnds, InteriorConfig(h=0.02, v_max=10, u_min=-20, scheme="psi"))
        assert b.sup_abs == pytest.approx(a.sup_abs, rel=0.02)

    def test_linearity_in_data(self, rnds):
        def run(u0, amp):
            return interior_evolve(rnds, InteriorConfig(h=0.1, v_max=10, u_min=-20,
                                                        horizon=HorizonData1D(kind="model", u0=u0, amp=amp)))
        a, b, c = run(1.0, 0.0), run(0.0, 1.0), run(2.0, -3.0)
        assert np.allclose(c.last_column, 2 * a.last_column - 3 * b.last_column, atol=1e-9)

    def test_series_data_matches_model(self, rnds, rnds_hd):
        k2 = rnds_hd.kappa[2]
        t = np.linspace(0, 30, 3001)
        series = HorizonData1D(kind="series", t=t, values=1 + np.exp(-k2 * t))
        model = HorizonData1D(kind="model", u0=1.0, amp=1.0)
        cfg = dict(h=0.05, v_max=20, u_min=-20)
        a = interior_evolve(rnds, InteriorConfig(horizon=series, **cfg))
        b = interior_evolve(rnds, InteriorConfig(horizon=model, **cfg))
        assert np.max(np.abs(a.last_column - b.last_column)) < 1e-4 * b.sup_abs

    def test_rays_and_probe(self, rnds):
        res = interior_evolve(rnds, InteriorConfig(h=0.1, v_max=10, u_min=-20, probe_u=(-5.0, 0.0)))
        ts = probe_ray(res, -5.0, "v")
        assert np.allclose(ts.u[:, 0], res.dphi_dv(-5.0))
        with pytest.raises(ChartCoverageError):
            probe_ray(res, -3.0)
        assert np.allclose(res.log_abs_V(), -res.kappa1 * res.v - np.log(res.kappa1))

    def test_mms_second_order(self, rnds):
        res = interior_mms(rnds)
        assert all(abs(o - 2.0) < 0.2 for o in res["orders"])

    def test_manufactured_source_vanishes_for_constants(self, rnds):
        src = InteriorManufactured(rnds, a=0.0, b=0.0, c=1.0)
        assert np.allclose(src(np.array([-5.0, -3.0]), np.array([1.0, 2.0])), 0.0)


class TestSnapshots:
    def test_roundtrip(self, tmp_path):
        data = np.arange(12, dtype=float).reshape(3, 4)
        p = tmp_path / "x.snap"
        write_snapshot(p, data, {"r": np.linspace(0, 1, 4)}, {"t": 1.5})
        d2, axes, meta = read_snapshot(p)
        assert np.array_equal(d2, data)
        assert meta == {"t": 1.5}
        assert np.allclose(axes["r"], np.linspace(0, 1, 4))

    def test_rejects_foreign_file(self, tmp_path):
        p = tmp_path / "y.snap"
        p.write_bytes(b"nope")
        with pytest.raises(ValueError):
            read_snapshot(p)


def test_observed_orders():
    assert np.allclose(observed_orders([4.0, 1.0, 0.25]), [2.0, 2.0])
