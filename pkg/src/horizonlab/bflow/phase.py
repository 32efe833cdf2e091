"""Phase-space points, dual metric functions and Hamilton vector fields.

Spherical families use the state ``[tau, r, phi, sigma, xi, L]``. Here
``L = |eta|`` is the conserved angular momentum and ``phi`` the angle along
the orbit's great circle. The dual metric is

    G = A sigma^2 - 2 B sigma xi + C xi^2 - L^2 / r^2,

and the Hamilton equations read

    tau' = tau dG/dsigma,  r' = dG/dxi,  phi' = dG/dL,  xi' = -dG/dr,

with sigma and L constant. On the compactified bundle (rho = 1/|xi|,
sigma^ = sigma rho, L^ = L rho, eps = sgn xi) the rescaled field rho H_G is
evaluated with G at (sigma^, eps, L^).

Kerr-de Sitter uses the t_0 chart adapted to one horizon with the state
``[tau, r, theta, phi, sigma, xi, eta, zeta]`` and the function

    rho^2 G = -mu xi^2 + 2 a s (1+gamma) xi zeta
              - 2 s (1+gamma)(r^2+a^2) xi sigma - p_C,

    p_C = (1+gamma)^2/(kappa sin^2 theta) (a sin^2 theta sigma - zeta)^2 + kappa eta^2,

kappa = 1 + gamma cos^2 theta. Near the poles the state switches to
``[tau, r, y, z, sigma, xi, lam, nu]`` with (y, z) = sin theta (cos phi, sin phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import DomainError
from ..spacetime.params import SpacetimeParams, mu_derivs

# state indices, spherical
TAU, R, PHI, SIG, XI, ELL = range(6)


@dataclass(frozen=True)
class BPhasePoint:
    """A point sigma dtau/tau + xi dr + eta domega over (tau, r, omega).

    For spherical families ``eta`` is |eta| and ``phi`` the orbital angle.
    For KdS ``theta``, ``phi`` are the polar angles and ``zeta`` is the
    axial momentum dual to phi.
    """

    tau0: float
    r: float
    sigma: float
    xi: float
    eta: float = 0.0
    phi: float = 0.0
    theta: float | None = None
    zeta: float | None = None

    @property
    def is_kerr(self):
        return self.zeta is not None

    def state(self) -> np.ndarray:
        if self.is_kerr:
            return np.array([self.tau0, self.r, self.theta, self.phi, self.sigma, self.xi, self.eta, self.zeta])
        return np.array([self.tau0, self.r, self.phi, self.sigma, self.xi, self.eta])

    @classmethod
    def from_state(cls, y):
        y = [float(v) for v in y]
        if len(y) == 8:
            return cls(tau0=y[0], r=y[1], theta=y[2], phi=y[3], sigma=y[4], xi=y[5], eta=y[6], zeta=y[7])
        return cls(tau0=y[0], r=y[1], phi=y[2], sigma=y[3], xi=y[4], eta=y[5])

    def fiber_norm(self) -> float:
        vals = [self.sigma, self.xi, self.eta] + ([self.zeta] if self.is_kerr else [])
        return max(abs(v) for v in vals)

    def scaled(self, c: float) -> "BPhasePoint":
        """Multiply the fiber variables by ``c`` (G is homogeneous of degree 2)."""
        kw = dict(sigma=c * self.sigma, xi=c * self.xi, eta=c * self.eta)
        if self.is_kerr:
            kw["zeta"] = c * self.zeta
        return replace(self, **kw)

    def antipodal(self) -> "BPhasePoint":
        """(sigma, xi, eta) -> -(sigma, xi, eta); for spherical families eta = |eta|
        is unchanged while the orbital direction reverses."""
        if self.is_kerr:
            return self.scaled(-1.0)
        return replace(self, sigma=-self.sigma, xi=-self.xi)


@dataclass(frozen=True)
class CompactifiedPoint:
    """Fiber-compactified coordinates rho^ = 1/|xi|, sigma^ = sigma/|xi|, eta^ = eta/|xi|."""

    tau0: float
    r: float
    rho_hat: float
    sigma_hat: float
    eta_hat: float
    sign: int
    phi: float = 0.0

    def state(self):
        return np.array([self.tau0, self.r, self.phi, self.rho_hat, self.sigma_hat, self.eta_hat])

    @classmethod
    def from_state(cls, y, sign):
        y = [float(v) for v in y]
        return cls(tau0=y[0], r=y[1], phi=y[2], rho_hat=y[3], sigma_hat=y[4], eta_hat=y[5], sign=int(sign))

    @classmethod
    def from_point(cls, p: BPhasePoint) -> "CompactifiedPoint":
        if p.xi == 0:
            raise DomainError("xi = 0: point is not in the xi-compactified patch")
        a = abs(p.xi)
        return cls(p.tau0, p.r, 1.0 / a, p.sigma / a, p.eta / a, 1 if p.xi > 0 else -1, p.phi)

    def to_point(self) -> BPhasePoint:
        if self.rho_hat <= 0:
            raise DomainError("rho_hat = 0 lies at fiber infinity")
        a = 1.0 / self.rho_hat
        return BPhasePoint(self.tau0, self.r, self.sigma_hat * a, self.sign * a, self.eta_hat * a, self.phi)


# spherical -----------------------------------------------------------------
def _g_parts(abc, r, sigma, xi, ell):
    A, B, C, dA, dB, dC = abc
    g = A * sigma * sigma - 2.0 * B * sigma * xi + C * xi * xi - ell * ell / (r * r)
    g_sigma = 2.0 * A * sigma - 2.0 * B * xi
    g_xi = -2.0 * B * sigma + 2.0 * C * xi
    g_r = dA * sigma * sigma - 2.0 * dB * sigma * xi + dC * xi * xi + 2.0 * ell * ell / r**3
    g_ell = -2.0 * ell / (r * r)
    return g, g_sigma, g_xi, g_r, g_ell


def dual_metric(point, chart) -> float:
    """G (spherical) or rho^2 G (KdS) at ``point``."""
    if isinstance(point, BPhasePoint) and point.is_kerr:
        return kds_hamiltonian(chart, point.state())
    if isinstance(point, BPhasePoint):
        chart.check(point.r)
        return _g_parts(chart.abc(point.r), point.r, point.sigma, point.xi, point.eta)[0]
    y = np.asarray(point, dtype=float)
    if len(y) == 8:
        return kds_hamiltonian(chart, y)
    chart.check(y[R])
    return _g_parts(chart.abc(y[R]), y[R], y[SIG], y[XI], y[ELL])[0]


def dual_metric_matrix(point, chart) -> float:
    """Independent evaluation via G^{ab} zeta_a zeta_b with zeta = (-sigma, xi)."""
    A, B, C = chart.abc(point.r)[:3]
    G = np.array([[A, B], [B, C]])
    z = np.array([-point.sigma, point.xi])
    return float(z @ G @ z - point.eta**2 / point.r**2)


def hamiltonian_rhs(y, chart) -> np.ndarray:
    """H_G on the spherical state [tau, r, phi, sigma, xi, L]."""
    r = y[R]
    g, gs, gx, gr, gl = _g_parts(chart.abc(r), r, y[SIG], y[XI], y[ELL])
    return np.array([y[TAU] * gs, gx, gl, 0.0, -gr, 0.0])


def rescaled_rhs(y, chart, sign: int) -> np.ndarray:
    """rho^ H_G on the compactified state [tau, r, phi, rho^, sigma^, L^] (branch sgn xi = ``sign``)."""
    r = y[1]
    eps = float(sign)
    g, gs, gx, gr, gl = _g_parts(chart.abc(r), r, y[4], eps, y[5])
    f = eps * gr
    return np.array([y[0] * gs, gx, gl, f * y[3], f * y[4], f * y[5]])


def solve_xi(chart, r, sigma, eta, branch=+1):
    """xi with G = 0 (root of C xi^2 - 2 B sigma xi + A sigma^2 - eta^2/r^2)."""
    A, B, C = chart.abc(r)[:3]
    c0 = A * sigma * sigma - eta * eta / (r * r)
    if C == 0:
        if B * sigma == 0:
            raise DomainError("no null covector with these (sigma, eta) at a horizon")
        return c0 / (2.0 * B * sigma)
    disc = (B * sigma) ** 2 - C * c0
    if disc < 0:
        raise DomainError("no real xi with G = 0 for this (r, sigma, eta)")
    sq = math.sqrt(disc)
    return (B * sigma + branch * sq) / C


def solve_eta(chart, r, sigma, xi):
    """|eta| with G = 0 for given (sigma, xi)."""
    A, B, C = chart.abc(r)[:3]
    val = (A * sigma * sigma - 2.0 * B * sigma * xi + C * xi * xi) * r * r
    if val < 0:
        raise DomainError("G(sigma, xi, 0) < 0: no real eta gives a null covector")
    return math.sqrt(val)


# Kerr-de Sitter --------------------------------------------------------------
class KdSChart:
    """t_0 chart of Kerr-de Sitter adapted to a horizon with sign ``s``."""

    name = "kds_t0"

    def __init__(self, params: SpacetimeParams, s: int, r_min=1e-8, r_max=np.inf):
        if not params.is_kerr:
            raise DomainError("KdSChart needs the KdS family")
        self.params = params
        self.s = int(s)
        self.a = params.spin
        self.gamma = params.gamma
        self.K = (1.0 + self.gamma) ** 2
        self.r_min = r_min
        self.r_max = r_max

    def check(self, r):
        if not (self.r_min <= r <= self.r_max):
            from ..errors import ChartCoverageError

            raise ChartCoverageError(f"r = {r!r} outside KdS chart")

    def radial(self, r, sigma, xi, zeta):
        """Radial part R, with dR/dr, dR/dxi, dR/dsigma, dR/dzeta."""
        m0, m1 = mu_derivs(self.params, r, 1)
        s, a, g1 = self.s, self.a, 1.0 + self.gamma
        w = r * r + a * a
        R = -m0 * xi * xi + 2 * a * s * g1 * xi * zeta - 2 * s * g1 * w * xi * sigma
        return (
            R,
            -m1 * xi * xi - 4 * s * g1 * r * xi * sigma,
            -2 * m0 * xi + 2 * a * s * g1 * zeta - 2 * s * g1 * w * sigma,
            -2 * s * g1 * w * xi,
            2 * a * s * g1 * xi,
        )


def carter(chart: KdSChart, y) -> float:
    """Carter quantity p_C in either the polar or the pole state."""
    y = np.asarray(y, dtype=float)
    if _is_pole(y):
        return _pole_theta(chart, y)[0]
    th, sig, eta, zeta = y[2], y[4], y[6], y[7]
    st2 = math.sin(th) ** 2
    kap = 1.0 + chart.gamma * math.cos(th) ** 2
    return chart.K / (kap * st2) * (chart.a * st2 * sig - zeta) ** 2 + kap * eta * eta


def _is_pole(y):
    return len(y) == 9


def kds_hamiltonian(chart: KdSChart, y) -> float:
    y = np.asarray(y, dtype=float)
    if _is_pole(y):
        zeta = y[7] * y[2] - y[6] * y[3]
        return chart.radial(y[1], y[4], y[5], zeta)[0] - _pole_theta(chart, y)[0]
    return chart.radial(y[1], y[4], y[5], y[7])[0] - carter(chart, y)


def kds_rhs(y, chart: KdSChart) -> np.ndarray:
    """H_{rho^2 G} in the polar state [tau, r, theta, phi, sigma, xi, eta, zeta]."""
    tau, r, th, _, sig, xi, eta, zeta = y
    R, R_r, R_xi, R_sig, R_zeta = chart.radial(r, sig, xi, zeta)
    a, gam, K = chart.a, chart.gamma, chart.K
    sn, cs = math.sin(th), math.cos(th)
    st2 = sn * sn
    kap = 1.0 + gam * cs * cs
    u = a * st2 * sig - zeta
    # p_C partials
    p_sig = 2.0 * K * a * u / kap
    p_zeta = -2.0 * K * u / (kap * st2)
    p_eta = 2.0 * kap * eta
    p_th = (
        K * a * a * sig * sig * 2.0 * sn * cs * (1.0 + gam) / kap**2
        - 2.0 * K * a * sig * zeta * 2.0 * gam * sn * cs / kap**2
        - K * zeta * zeta * 2.0 * cs * (1.0 + gam * math.cos(2.0 * th)) / (kap**2 * sn**3)
        - 2.0 * gam * sn * cs * eta * eta
    )
    return np.array([
        tau * (R_sig - p_sig),
        R_xi,
        -p_eta,
        R_zeta - p_zeta,
        0.0,
        -R_r,
        p_th,
        0.0,
    ])


def _pole_theta(chart, y):
    """p_C = N / kappa in the pole state and its partials w.r.t. (y, z, lam, nu, sigma)."""
    _, _, yy, zz, sig, _, lam, nu, _ = y
    a, gam, K = chart.a, chart.gamma, chart.K
    s2 = yy * yy + zz * zz
    zeta = nu * yy - lam * zz
    w = lam * yy + nu * zz
    q = lam * lam + nu * nu - w * w
    h = gam * (2.0 + 2.0 * gam - gam * s2) * (1.0 - s2)
    dh = -gam * (2.0 + 3.0 * gam - 2.0 * gam * s2)
    kap = 1.0 + gam * (1.0 - s2)
    N = K * a * a * s2 * sig * sig - 2.0 * K * a * sig * zeta + K * q - h * w * w
    N_s2 = K * a * a * sig * sig - dh * w * w
    N_zeta = -2.0 * K * a * sig
    N_w = -2.0 * h * w
    # partials of (s2, zeta, q, w) in order (y, z, lam, nu)
    d_s2 = (2.0 * yy, 2.0 * zz, 0.0, 0.0)
    d_zeta = (nu, -lam, -zz, yy)
    d_q = (-2.0 * w * lam, -2.0 * w * nu, 2.0 * lam - 2.0 * w * yy, 2.0 * nu - 2.0 * w * zz)
    d_w = (lam, nu, yy, zz)
    grads = []
    for i in range(4):
        dN = N_s2 * d_s2[i] + N_zeta * d_zeta[i] + K * d_q[i] + N_w * d_w[i]
        dk = -gam * d_s2[i]
        grads.append(dN / kap - N * dk / kap**2)
    p_sig = (2.0 * K * a * a * s2 * sig - 2.0 * K * a * zeta) / kap
    return N / kap, grads, p_sig, zeta, d_zeta


def kds_pole_rhs(y, chart: KdSChart) -> np.ndarray:
    """H_{rho^2 G} in the pole state [tau, r, y, z, sigma, xi, lam, nu, hemisphere]."""
    tau, r, _, _, sig, xi = y[:6]
    pc, (p_y, p_z, p_lam, p_nu), p_sig, zeta, d_zeta = _pole_theta(chart, y)
    R, R_r, R_xi, R_sig, R_zeta = chart.radial(r, sig, xi, zeta)
    H_y = R_zeta * d_zeta[0] - p_y
    H_z = R_zeta * d_zeta[1] - p_z
    H_lam = R_zeta * d_zeta[2] - p_lam
    H_nu = R_zeta * d_zeta[3] - p_nu
    return np.array([tau * (R_sig - p_sig), R_xi, H_lam, H_nu, 0.0, -R_r, -H_y, -H_z, 0.0])


def polar_to_pole(y) -> np.ndarray:
    tau, r, th, ph, sig, xi, eta, zeta = y
    sn, cs = math.sin(th), math.cos(th)
    cp, sp = math.cos(ph), math.sin(ph)
    lam = cp * eta / cs - sp * zeta / sn
    nu = sp * eta / cs + cp * zeta / sn
    return np.array([tau, r, sn * cp, sn * sp, sig, xi, lam, nu, 1.0 if cs > 0 else -1.0])


def pole_to_polar(y) -> np.ndarray:
    tau, r, yy, zz, sig, xi, lam, nu, hemi = y
    s2 = yy * yy + zz * zz
    sn = math.sqrt(s2)
    cs = hemi * math.sqrt(max(1.0 - s2, 0.0))
    th = math.atan2(sn, cs)
    ph = math.atan2(zz, yy)
    w = lam * yy + nu * zz
    eta = w * cs / sn
    zeta = nu * yy - lam * zz
    return np.array([tau, r, th, ph, sig, xi, eta, zeta])


def kds_point_rhs(y, chart):
    return kds_pole_rhs(y, chart) if _is_pole(y) else kds_rhs(y, chart)


def kds_solve_xi(chart: KdSChart, r, theta, sigma, eta, zeta, branch=+1):
    """xi with rho^2 G = 0 at the given base point and (sigma, eta, zeta)."""
    m0 = mu_derivs(chart.params, r, 0)[0]
    s, a, g1 = chart.s, chart.a, 1.0 + chart.gamma
    pc = carter(chart, np.array([0, r, theta, 0, sigma, 0, eta, zeta]))
    # -m0 xi^2 + b xi - pc = 0
    b = 2 * a * s * g1 * zeta - 2 * s * g1 * (r * r + a * a) * sigma
    if m0 == 0:
        return pc / b
    disc = b * b - 4 * m0 * pc
    if disc < 0:
        if disc > -1e-12 * b * b:
            disc = 0.0  # rounding at a double root (trapped datum)
        else:
            raise DomainError("no real xi with rho^2 G = 0")
    return (-b + branch * math.sqrt(disc)) / (-2 * m0)
