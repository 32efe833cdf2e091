"""Flow structure: components, radial sets, thresholds and trapping."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from ..errors import AmbiguousComponent, DomainError, IllConditioned
from ..spacetime.charts import ChartData
from ..spacetime.horizons import photon_sphere
from ..spacetime.params import mu_derivs
from .charts import StarChart, StaticChart
from .integrate import integrate
from .phase import (
    BPhasePoint,
    CompactifiedPoint,
    KdSChart,
    hamiltonian_rhs,
    kds_solve_xi,
    rescaled_rhs,
    solve_eta,
)

FD_STEP = 1e-6
L_RHO_TOL = 1e-8
L_R_TOL = 1e-6


# components -------------------------------------------------------------------
def _smoothstep(x):
    x = min(max(x, 0.0), 1.0)
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def reference_weights(charts: ChartData, r: float):
    """Weights (w_low, w_mid, w_high) of (-dt_*, -dr, +dt_*) in the glued covector."""
    d = charts.delta
    radii = charts.horizons.radii
    r1 = radii.get(1)
    r2 = radii.get(2)
    if r2 is None or (r1 is None and charts.r_min >= r2 - 4 * d):
        return 0.0, 0.0, 1.0
    w_high = _smoothstep((r - (r2 - 3 * d)) / d)
    if r1 is None:
        return 0.0, 1.0 - w_high, w_high
    w_low = 1.0 - _smoothstep((r - (r1 + 2 * d)) / d)
    return w_low, 1.0 - w_low - w_high, w_high


def reference_pairing(point: BPhasePoint, charts: ChartData) -> float:
    """<zeta, varpi>_G for the glued future-timelike reference covector varpi."""
    A, B, C = charts.components(point.r)[:3]
    sig, xi = point.sigma, point.xi
    p_t = -A * sig + B * xi  # <zeta, dt_*>
    p_r = -B * sig + C * xi  # <zeta, dr>
    w_low, w_mid, w_high = reference_weights(charts, point.r)
    return -w_low * p_t - w_mid * p_r + w_high * p_t


def classify_component(point: BPhasePoint, charts: ChartData, tol: float = 1e-12) -> str:
    """'+' for Sigma_+ = {<zeta, varpi> < 0}, '-' for Sigma_- = {<zeta, varpi> > 0}.

    Sigma_- is the future-directed component: H_G pairs positively with varpi.
    """
    val = reference_pairing(point, charts)
    scale = max(point.sigma**2, point.xi**2, point.eta**2 / point.r**2, 1e-300)
    if abs(val) <= tol * math.sqrt(scale):
        raise AmbiguousComponent(f"<zeta, varpi> = {val!r} vanishes at r = {point.r!r}")
    return "+" if val < 0 else "-"


# endpoints --------------------------------------------------------------------
def classify_endpoint(traj, horizons, window: float = 0.1) -> str:
    """Terminal tag of a trajectory.

    ``exit_low``/``exit_high`` if it left the chart, ``L_j`` if it settles
    with rho_0 < 1e-8 and |r - r_j| < 1e-6 over the final ``window`` fraction
    of samples, else ``running``.
    """
    if traj.tag.startswith("exit") or traj.tag in ("failed", "chart_exit"):
        return traj.tag
    n = len(traj.s)
    tail = slice(max(0, int(n * (1.0 - window))), n)
    st = traj.states[tail]
    if traj.kind == "rescaled":
        rho0 = st[:, 4] ** 2 + st[:, 5] ** 2
    elif traj.kind == "spherical":
        rho0 = (st[:, 3] ** 2 + st[:, 5] ** 2) / np.maximum(st[:, 4] ** 2, 1e-300)
    else:
        rho0 = (st[:, 4] ** 2 + st[:, 6] ** 2 + st[:, 7] ** 2) / np.maximum(st[:, 5] ** 2, 1e-300)
    for j, rj in sorted(horizons.radii.items()):
        if np.all(np.abs(st[:, 1] - rj) < L_R_TOL) and np.all(rho0 < L_RHO_TOL):
            return f"L_{j}"
    return "running"


# radial sets ------------------------------------------------------------------
def _jacobian(f, y, h=FD_STEP):
    n = len(y)
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h * max(1.0, abs(y[i]))
        J[:, i] = (f(y + e) - f(y - e)) / (2.0 * e[i])
    return J


def linearize_radial(chart, horizons, j: int, sign: int) -> dict:
    """Linearisation of the rescaled field at dL_{j, sign} (tau = rho^ = sigma^ = eta^ = 0).

    Returns the eigenvalues of the Jacobian restricted to (r, sigma^, eta^),
    the predicted set {-eps mu', -eps mu', -2 eps mu'}, the tau and rho^
    e-folding rates and the resulting threshold beta = -rate_tau / rate_rho.
    """
    rj = horizons.radii[j]
    y0 = np.array([0.0, rj, 0.0, 0.0, 0.0, 0.0])
    J = _jacobian(lambda y: rescaled_rhs(y, chart, sign), y0)
    sub = J[np.ix_([1, 4, 5], [1, 4, 5])]
    ev = np.linalg.eigvals(sub)
    if not np.all(np.isfinite(ev)):
        raise IllConditioned("non-finite Jacobian eigenvalues")
    ev = np.sort(ev.real)
    m1 = chart.mu(rj, 1)[1]
    pred = np.sort(np.array([-sign * m1, -sign * m1, -2.0 * sign * m1]))
    rate_tau = J[0, 0]
    rate_rho = J[3, 3]
    return {
        "j": j,
        "sign": sign,
        "eigenvalues": ev.tolist(),
        "predicted": pred.tolist(),
        "rate_tau": float(rate_tau),
        "rate_rho": float(rate_rho),
        "beta": float(-rate_tau / rate_rho),
        "beta_formula": float(2.0 / abs(m1)),
        "ratio_normal_tangent": float(np.max(np.abs(ev)) / np.min(np.abs(ev))),
    }


def _fit_rate(s, v):
    """Slope of log|v| against s (least squares)."""
    lv = np.log(np.abs(v))
    return float(np.polyfit(s, lv, 1)[0])


def measure_beta(chart, horizons, j: int, sign: int, offset: float = 1e-4,
                 rho0: float = 1e-2, decades: float = 6.0) -> dict:
    """Threshold from e-folding rates along a trajectory near dL_{j, sign}.

    The trajectory starts at r_j + offset on the surface G = 0 with eta = 0;
    it is integrated forwards if L_{j,sign} attracts in (r, rho^) and
    backwards otherwise, over ``decades`` e-folds of rho^ (base 10).
    """
    rj = horizons.radii[j]
    m1 = chart.mu(rj, 1)[1]
    rate = abs(m1)
    direction = 1.0 if -sign * m1 < 0 else -1.0
    r = rj + offset
    A, B, C = chart.abc(r)[:3]
    # G(sigma^, eps, 0) = A s^2 - 2 B eps s + C = 0, small root
    if A == 0:
        sh = C / (2.0 * B * sign)
    else:
        disc = (B * sign) ** 2 - A * C
        sh = (B * sign - math.copysign(math.sqrt(disc), B * sign)) / A
    cp = CompactifiedPoint(tau0=1e-8, r=r, rho_hat=rho0, sigma_hat=sh, eta_hat=0.0, sign=sign)
    span = direction * decades * math.log(10.0) / rate
    tr = integrate(cp, chart, span, rtol=1e-11, atol=1e-20)
    s = np.abs(tr.s)
    half = s >= 0.5 * s[-1]
    k_tau = _fit_rate(s[half], tr.states[half, 0])
    k_rho = _fit_rate(s[half], tr.states[half, 3])
    rho0_vals = tr.states[:, 4] ** 2 + tr.states[:, 5] ** 2
    return {
        "j": j,
        "sign": sign,
        "direction": direction,
        "rate_tau": k_tau,
        "rate_rho": k_rho,
        "beta_measured": -k_tau / k_rho,
        "beta_formula": 2.0 / rate,
        "r_final": float(tr.r[-1]),
        "trajectory": tr,
        "rho0_final": float(rho0_vals[-1]),
    }


def quadratic_defining_rate(chart, horizons, j: int, sign: int, eta_hat=1e-4, sigma_hat=1e-4,
                            span=None) -> dict:
    """Rate of rho_0 = |eta^|^2 + |sigma^|^2 along the flow started at r_j near dL_j."""
    rj = horizons.radii[j]
    m1 = chart.mu(rj, 1)[1]
    direction = 1.0 if -sign * m1 < 0 else -1.0
    span = direction * (span if span is not None else 5.0 / abs(m1))
    cp = CompactifiedPoint(tau0=1e-8, r=rj, rho_hat=1e-3, sigma_hat=sigma_hat, eta_hat=eta_hat, sign=sign)
    tr = integrate(cp, chart, span, rtol=1e-11, atol=1e-22)
    rho0 = tr.states[:, 4] ** 2 + tr.states[:, 5] ** 2
    k = _fit_rate(np.abs(tr.s), rho0)
    return {"rate": abs(k), "predicted": 2.0 * abs(m1), "monotone": bool(np.all(np.diff(rho0) < 0))}


# trapping ---------------------------------------------------------------------
def hg_r(chart, point: BPhasePoint) -> float:
    """H_G r = dG/dxi."""
    A, B, C = chart.abc(point.r)[:3]
    return -2.0 * B * point.sigma + 2.0 * C * point.xi


def hg2_r(chart, point: BPhasePoint) -> float:
    """H_G^2 r = (-2 B' sigma + 2 C' xi) H_G r + 2 C H_G xi (analytic)."""
    A, B, C, dA, dB, dC = chart.abc(point.r)
    f = hamiltonian_rhs(point.state(), chart)
    return (-2.0 * dB * point.sigma + 2.0 * dC * point.xi) * f[1] + 2.0 * C * f[4]


def hg2_r_formula(source_chart, r: float, sigma: float) -> float:
    """-2 r^2 mu^-1 sigma^2 (r^-2 mu)' (valid at xi = 0 in static coordinates on G = 0)."""
    m0, m1 = source_chart.mu(r, 1)
    d = m1 / r**2 - 2.0 * m0 / r**3
    return -2.0 * r * r / m0 * sigma * sigma * d


def trapped_datum(chart, r_p: float, sigma: float = 1.0) -> BPhasePoint:
    """Point on the trapped set: r = r_P, xi = 0 (static chart), G = 0."""
    return BPhasePoint(1.0, r_p, sigma, 0.0, solve_eta(chart, r_p, sigma, 0.0))


def linearize_trapping(params, sigma: float = 1.0, offset: float = 1e-9, growth: float = 1e-4,
                       horizons=None) -> dict:
    """Normal expansion rate at the photon sphere.

    The rate is measured twice in static coordinates with the datum
    normalised to ``sigma``: from the finite-difference Jacobian of
    (r, xi) -> H_G at (r_P, 0), and from the exponential growth of
    |r - r_P| along a trajectory started at r_P + ``offset``. Both are
    compared with nu_min |sigma|.
    """
    tr_data = photon_sphere(params)
    r_p = tr_data.r_p
    chart = StaticChart(params)
    p = trapped_datum(chart, r_p, sigma)
    y0 = p.state()

    def sub(z):
        y = y0.copy()
        y[1], y[4] = z
        f = hamiltonian_rhs(y, chart)
        return np.array([f[1], f[4]])

    J = _jacobian(sub, np.array([r_p, 0.0]), h=1e-7)
    ev = np.linalg.eigvals(J)
    nu_jac = float(np.max(ev.real))
    # analytic matrix entries for the record
    m0, m1, m2 = mu_derivs(params, r_p, 2)
    start = BPhasePoint(1.0, r_p + offset, sigma, 0.0, p.eta)
    span = math.log(growth / offset) / max(nu_jac, 1e-12)
    traj = integrate(start, chart, span, rtol=1e-12, atol=1e-16)
    dev = np.abs(traj.r - r_p)
    sel = (dev > 10 * offset) & (dev < 0.1 * growth)
    if np.count_nonzero(sel) < 5:
        sel = dev > offset
    nu_traj = _fit_rate(traj.s[sel], dev[sel] + 0.0)
    expected = tr_data.nu_min * abs(sigma)
    return {
        "r_P": r_p,
        "nu_min": tr_data.nu_min,
        "sigma": sigma,
        "expected_rate": expected,
        "jacobian": J.tolist(),
        "jacobian_rate": nu_jac,
        "trajectory_rate": nu_traj,
        "rel_err_jacobian": abs(nu_jac - expected) / expected,
        "rel_err_trajectory": abs(nu_traj - expected) / expected,
        "matrix_lower_left": float(J[1, 0]),
        "matrix_upper_right": float(J[0, 1]),
        "mu_rP": m0,
    }


def kds_trapped_datum(chart: KdSChart, horizons, theta: float, sigma: float, zeta: float) -> BPhasePoint:
    """KdS null covector on a spherical trapped orbit (dr/ds = d^2r/ds^2 = 0)."""
    p = chart.params
    g1 = 1.0 + p.gamma
    a, s = p.spin, chart.s

    def b(r):
        return 2 * a * s * g1 * zeta - 2 * s * g1 * (r * r + a * a) * sigma

    def f(r):
        m0, m1 = mu_derivs(p, r, 1)
        db = -4.0 * s * g1 * r * sigma
        return 2.0 * b(r) * db * m0 - b(r) ** 2 * m1

    lo, hi = horizons.r2 * (1 + 1e-6), horizons.r3 * (1 - 1e-6)
    r = brentq(f, lo, hi, xtol=1e-15)
    pc = b(r) ** 2 / (4.0 * mu_derivs(p, r, 0)[0])
    st2 = math.sin(theta) ** 2
    kap = 1.0 + p.gamma * math.cos(theta) ** 2
    rest = pc - g1**2 / (kap * st2) * (a * st2 * sigma - zeta) ** 2
    if rest < 0:
        raise DomainError("theta outside the angular range of this trapped orbit")
    eta = math.sqrt(rest / kap)
    xi = kds_solve_xi(chart, r, theta, sigma, eta, zeta)
    return BPhasePoint(1.0, r, sigma, xi, eta=eta, theta=theta, phi=0.0, zeta=zeta)


def star_chart(charts: ChartData) -> StarChart:
    return StarChart(charts)
