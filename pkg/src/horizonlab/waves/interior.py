"""Interior (r_1 < r < r_2) engine in double-null coordinates.

With x = r_* (dr/dx = mu < 0 in the block), u = x - t and v = x + t, the
rescaled mode psi = r phi obeys

    4 psi_uv = V psi,   V = mu (l(l+1)/r^2 + mu'/r + m^2).

The event horizon sits at u = -inf and the Cauchy horizon at v = +inf.
Two second-order diamond schemes are provided. The "psi" scheme is the
classical update

    psi_N = psi_W + psi_E - psi_S + (h^2/8) V_c (psi_W + psi_E) + (h^2/4) S_c.

The default "phi" scheme discretises the equivalent equation for phi,

    phi_uv + a (phi_u + phi_v) = b phi + S,   a = mu/(2r),  b = (mu/4)(l(l+1)/r^2 + m^2),

on the same diamond, using phi_u + phi_v = (phi_N - phi_S)/h at the centre:

    phi_N = [phi_W + phi_E - (1 - a h) phi_S + (h^2 b/2)(phi_W + phi_E) + h^2 S_c] / (1 + a h).

It is exact on constants for l = m = 0, whereas psi = r phi inherits the
O(1/kappa_1)-thin layer of r(x) near r_1 and carries a large error constant.
Coefficients are evaluated at the diamond centre. The tortoise coordinate has
the closed form x(r) = sum_i ln|r - r_i| / mu'(r_i) over all real and
complex roots of the horizon polynomial (plus r when mu -> 1 at infinity),
and r(x) is obtained by vectorised bisection on an h/2 lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.interpolate import PchipInterpolator

from ..errors import BlockBreach, DomainError
from ..spacetime.horizons import horizon_data
from ..spacetime.params import Family, mu_derivs


# tortoise coordinate -----------------------------------------------------------
class Tortoise:
    """Closed-form r_* for the spherically symmetric families with two inner horizons."""

    def __init__(self, params):
        if params.family not in (Family.RNDS, Family.RN_FLAT):
            raise DomainError("interior engine needs a charged family with r_1 < r_2")
        if params.charge == 0:
            raise DomainError("interior engine needs Q != 0 so that r_1 exists")
        self.params = params
        lam = params.lambda3
        M, Q = params.mass, params.charge
        # r^2 mu = -lam r^4 + r^2 - 2 M r + Q^2
        self.poly = np.array([-lam, 0.0, 1.0, -2.0 * M, Q * Q]) if lam > 0 else np.array([1.0, -2.0 * M, Q * Q])
        roots = np.roots(self.poly)
        dpoly = np.polyder(self.poly)
        # residues of r^2 / (r^2 mu)
        self.roots = roots
        self.res = roots**2 / np.polyval(dpoly, roots)
        self.linear = 0.0 if lam > 0 else 1.0 / self.poly[0]
        hd = horizon_data(params, with_trapping=False)
        self.horizons = hd
        self.r1, self.r2 = hd.r1, hd.r2
        self.kappa1, self.kappa2 = hd.kappa[1], hd.kappa[2]

    def x_of_r(self, r):
        r = np.asarray(r, dtype=float)
        out = self.linear * r + 0.0j
        for ri, ci in zip(self.roots, self.res):
            out = out + ci * np.log((r - ri) + 0.0j)
        # log branches only add imaginary constants on (r_1, r_2)
        return out.real

    def r_of_x(self, x, iters=200):
        """Inverse on (r_1, r_2) by bisection; x is decreasing in r there."""
        x = np.asarray(x, dtype=float)
        lo = np.full(x.shape, self.r1)
        hi = np.full(x.shape, self.r2)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if np.all((mid == lo) | (mid == hi)):
                break
            xm = self.x_of_r(mid)
            go_up = xm > x  # too far left in x means r too small
            lo = np.where(go_up, mid, lo)
            hi = np.where(go_up, hi, mid)
        return 0.5 * (lo + hi)

    def potential(self, r, ell, mass2):
        d = mu_derivs(self.params, r, 1)
        return d[0] * (ell * (ell + 1) / r**2 + d[1] / r + mass2)


# kernel ----------------------------------------------------------------------
@numba.njit(cache=True)
def _diamond(psi_u0, psi_v0, Px, Qx, Dx, h, probe_rows, row_stride, col_stride, out_rows, out_last, out_snap):
    """March in u. psi_u0[j]: data on u = u_0 (j over v); psi_v0[i]: data on v = v_0.

    Update N = (W + E - P S + Q (W + E)) / D with P, Q, D on the h/2 lattice of
    x = (u + v)/2: index i + j is node (i, j) and i + j + 1 the centre of the
    diamond with south corner (i, j).
    """
    nu = psi_v0.shape[0]
    nv = psi_u0.shape[0]
    prev = psi_u0.copy()
    cur = np.empty(nv)
    amax = 0.0
    for j in range(nv):
        a = abs(prev[j])
        if a > amax:
            amax = a
    out_last[0] = prev[nv - 1]
    k = 0
    if probe_rows.shape[0] > 0 and probe_rows[0] == 0:
        out_rows[0, :] = prev
        k = 1
    for i in range(nu - 1):
        cur[0] = psi_v0[i + 1]
        for j in range(nv - 1):
            w = cur[j]
            e = prev[j + 1]
            k2 = i + j + 1
            cur[j + 1] = (w + e - Px[k2] * prev[j] + Qx[k2] * (w + e)) / Dx[k2]
        for j in range(nv):
            a = abs(cur[j])
            if not (a < 1e150):
                return -(i + 1), amax
            if a > amax:
                amax = a
        out_last[i + 1] = cur[nv - 1]
        if k < probe_rows.shape[0] and probe_rows[k] == i + 1:
            out_rows[k, :] = cur
            k += 1
        if (i + 1) % row_stride == 0:
            s = (i + 1) // row_stride
            for jj in range(out_snap.shape[1]):
                out_snap[s, jj] = cur[jj * col_stride]
        for j in range(nv):
            prev[j] = cur[j]
    return nu, amax


# data -----------------------------------------------------------------------
@dataclass
class HorizonData1D:
    """Characteristic data phi(v) on the event-horizon ray."""

    kind: str = "model"  # "model" or "series"
    u0: float = 1.0
    amp: float = 1.0
    rate: float | None = None  # default kappa_2
    t: np.ndarray | None = None
    values: np.ndarray | None = None
    v_shift: float = 0.0

    def __call__(self, v, kappa2):
        if self.kind == "model":
            rate = kappa2 if self.rate is None else self.rate
            return self.u0 + self.amp * np.exp(-rate * np.asarray(v))
        if self.kind == "series":
            if self.t is None or self.values is None:
                raise ValueError("series data need t and values")
            f = PchipInterpolator(np.asarray(self.t) + self.v_shift, np.asarray(self.values), extrapolate=False)
            out = f(v)
            # hold the last value beyond the recorded window
            out = np.where(np.asarray(v) > self.t[-1] + self.v_shift, self.values[-1], out)
            out = np.where(np.asarray(v) < self.t[0] + self.v_shift, self.values[0], out)
            return out
        raise ValueError(f"unknown horizon data kind {self.kind!r}")


@dataclass
class InteriorConfig:
    ell: int = 0
    mass2: float = 0.0
    h: float = 0.02
    u_min: float | None = None
    u_max: float = 0.0
    v_min: float = 0.0
    v_max: float = 40.0
    horizon: HorizonData1D = field(default_factory=HorizonData1D)
    transversal: str = "constant"  # "constant" or "pulse"
    pulse_center: float = -10.0
    pulse_width: float = 1.0
    pulse_amp: float = 0.0
    probe_u: tuple = (-5.0, -2.0, 0.0)
    snapshot_shape: tuple = (64, 64)
    scheme: str = "phi"  # "phi" or "psi"


@dataclass
class InteriorResult:
    u: np.ndarray
    v: np.ndarray
    rays: dict  # u -> phi(v)
    last_column: np.ndarray  # phi(u, v_max)
    snapshot: np.ndarray
    snapshot_u: np.ndarray
    snapshot_v: np.ndarray
    sup_abs: float
    overflow: bool
    kappa1: float
    kappa2: float
    r_of_x: tuple  # (x lattice, r values)
    meta: dict = field(default_factory=dict)

    def ray(self, u):
        keys = np.array(list(self.rays))
        k = keys[np.argmin(np.abs(keys - u))]
        return self.rays[k]

    def dphi_dv(self, u):
        return np.gradient(self.ray(u), self.v, edge_order=2)

    def log_abs_dphi_dV(self, u):
        """log|d phi / dV| with V = -e^{-kappa_1 v}/kappa_1... up to the constant chart factor.

        dV/dv = e^{-kappa_1 v}, so log|phi_V| = kappa_1 v + log|phi_v|.
        """
        d = np.abs(self.dphi_dv(u))
        with np.errstate(divide="ignore"):
            return self.kappa1 * self.v + np.log(d)

    def log_abs_V(self):
        """log|V| for the Kruskal coordinate V = -e^{-kappa_1 v}/kappa_1."""
        return -self.kappa1 * self.v - math.log(self.kappa1)


def _coefficients(tort, r, h, ell, mass2, scheme):
    """Per-centre update coefficients (P, Q, D, source scale) on the x lattice."""
    d = mu_derivs(tort.params, r, 1)
    mu, dmu = d[0], d[1]
    L = ell * (ell + 1)
    if scheme == "psi":
        V = mu * (L / r**2 + dmu / r + mass2)
        one = np.ones_like(r)
        return one, h * h / 8.0 * V, one, h * h / 4.0 * one
    if scheme == "phi":
        a = mu / (2.0 * r)
        b = 0.25 * mu * (L / r**2 + mass2)
        return 1.0 - a * h, 0.5 * h * h * b, 1.0 + a * h, h * h * np.ones_like(r)
    raise ValueError(f"unknown interior scheme {scheme!r}")


def interior_evolve(params, cfg: InteriorConfig, source=None) -> InteriorResult:
    """Characteristic evolution of one mode in the block r_1 < r < r_2.

    ``source``, if given, is a callable S(u, v) added to the right-hand side
    of the evolved equation (the phi form or 4 psi_uv = V psi, per
    ``cfg.scheme``). If it has an ``exact(u, v)`` attribute the data on both
    null segments are taken from it (manufactured solutions).
    """
    tort = Tortoise(params)
    k1, k2 = tort.kappa1, tort.kappa2
    h = float(cfg.h)
    span_v = cfg.v_max - cfg.v_min
    u_min = cfg.u_min if cfg.u_min is not None else -2.0 * span_v - 40.0 - cfg.v_min
    if not cfg.u_max > u_min or not span_v > 0:
        raise ValueError("empty interior block")
    nu = int(round((cfg.u_max - u_min) / h)) + 1
    nv = int(round(span_v / h)) + 1
    u = u_min + h * np.arange(nu)
    v = cfg.v_min + h * np.arange(nv)
    nx = nu + nv - 1
    x = 0.5 * (u_min + cfg.v_min) + 0.5 * h * np.arange(nx)
    r = tort.r_of_x(x)
    if np.any(r < tort.r1) or np.any(r > tort.r2) or np.any(np.diff(r) > 0):
        raise BlockBreach("r(x) left [r_1, r_2] or lost monotonicity")
    P, Q, D, cs = _coefficients(tort, r, h, cfg.ell, cfg.mass2, cfg.scheme)
    psi_form = cfg.scheme == "psi"
    exact = getattr(source, "exact", None)
    if exact is not None:
        f_u0 = np.asarray(exact(np.full(nv, u_min), v), dtype=float)
        f_v0 = np.asarray(exact(u, np.full(nu, cfg.v_min)), dtype=float)
    else:
        phi_h = np.asarray(cfg.horizon(v, k2), dtype=float)
        phi_t = np.full(nu, phi_h[0])
        if cfg.transversal == "pulse":
            g = lambda s: cfg.pulse_amp * np.exp(-(((s - cfg.pulse_center) / cfg.pulse_width) ** 2))  # noqa: E731
            phi_t = phi_t + g(u) - g(u_min)
        elif cfg.transversal != "constant":
            raise ValueError(f"unknown transversal data {cfg.transversal!r}")
        # node (i, j) sits at lattice index i + j
        f_u0 = phi_h * (r[np.arange(nv)] if psi_form else 1.0)
        f_v0 = phi_t * (r[np.arange(nu)] if psi_form else 1.0)
    probe_rows = np.array(sorted({int(round((pu - u_min) / h)) for pu in cfg.probe_u
                                  if u_min - 1e-12 <= pu <= cfg.u_max + 1e-12}), dtype=np.int64)
    out_rows = np.zeros((len(probe_rows), nv))
    out_last = np.zeros(nu)
    su, sv = cfg.snapshot_shape
    row_stride = max(1, (nu - 1) // max(su - 1, 1))
    col_stride = max(1, (nv - 1) // max(sv - 1, 1))
    n_srows = (nu - 1) // row_stride + 1
    n_scols = (nv - 1) // col_stride + 1
    snap = np.zeros((n_srows, n_scols))
    snap[0] = f_u0[::col_stride][:n_scols]
    if source is not None:
        status, amax = _diamond_src(f_u0, f_v0, P, Q, D, cs, u, v, source, h, probe_rows, row_stride, col_stride,
                                    out_rows, out_last, snap)
    else:
        status, amax = _diamond(f_u0, f_v0, P, Q, D, h, probe_rows, row_stride, col_stride, out_rows,
                                out_last, snap)
    overflow = status < 0
    su_idx = np.arange(n_srows) * row_stride
    sv_idx = np.arange(n_scols) * col_stride
    rays = {}
    if psi_form and exact is None:
        for k, row in enumerate(probe_rows):
            rays[float(u[row])] = out_rows[k] / r[row + np.arange(nv)]
        last = out_last / r[np.arange(nu) + nv - 1]
        field_ = snap / r[su_idx[:, None] + sv_idx[None, :]]
    else:
        for k, row in enumerate(probe_rows):
            rays[float(u[row])] = out_rows[k]
        last = out_last
        field_ = snap
    if overflow:
        sup = float("inf")
    else:
        parts = [field_.ravel(), last] + list(rays.values())
        sup = float(max(np.max(np.abs(a)) for a in parts if len(a)))
    meta = {
        "scheme": f"diamond/{cfg.scheme} (centre coefficients)",
        "design_order": 2,
        "h": h,
        "u_min": u_min,
        "u_max": float(u[-1]),
        "v_min": cfg.v_min,
        "v_max": float(v[-1]),
        "n_u": nu,
        "n_v": nv,
        "data_ray_r_gap": float(tort.r2 - np.min(r[:nv])),
        "final_r_gap": float(r[-1] - tort.r1),
        "ell": cfg.ell,
        "mass2": cfg.mass2,
        "overflow_row": int(-status) if overflow else None,
        "sup_raw": float(amax),
    }
    return InteriorResult(u, v, rays, last, field_, u[su_idx], v[sv_idx], sup, overflow, k1, k2, (x, r), meta)


def _diamond_src(f_u0, f_v0, P, Q, D, cs, u, v, source, h, probe_rows, row_stride, col_stride, out_rows, out_last,
                 snap):
    """Diamond march with a source S(u, v) evaluated at cell centres."""
    nu, nv = len(u), len(v)
    prev = f_u0.copy()
    amax = float(np.max(np.abs(prev)))
    out_last[0] = prev[-1]
    k = 0
    if len(probe_rows) and probe_rows[0] == 0:
        out_rows[0] = prev
        k = 1
    vc = v[:-1] + 0.5 * h
    for i in range(nu - 1):
        uc = u[i] + 0.5 * h
        S = np.asarray(source(np.full(nv - 1, uc), vc), dtype=float)
        sl = slice(i + 1, i + nv)
        cur = _row(prev, f_v0[i + 1], P[sl], Q[sl], D[sl], cs[sl] * S)
        if not np.all(np.isfinite(cur)) or np.max(np.abs(cur)) >= 1e150:
            return -(i + 1), amax
        amax = max(amax, float(np.max(np.abs(cur))))
        out_last[i + 1] = cur[-1]
        if k < len(probe_rows) and probe_rows[k] == i + 1:
            out_rows[k] = cur
            k += 1
        if (i + 1) % row_stride == 0:
            snap[(i + 1) // row_stride] = cur[::col_stride][: snap.shape[1]]
        prev = cur
    return nu, amax


@numba.njit(cache=True)
def _row(prev, first, P, Q, D, S):
    nv = prev.shape[0]
    cur = np.empty(nv)
    cur[0] = first
    for j in range(nv - 1):
        w = cur[j]
        e = prev[j + 1]
        cur[j + 1] = (w + e - P[j] * prev[j] + Q[j] * (w + e) + S[j]) / D[j]
    return cur
