"""Exterior engine on the horizon-penetrating t_* foliation.

First-order reduction (u, Pi = u_t, Phi = u_r):

    u_t = Pi,   Phi_t = Pi_r,
    A Pi_t = -(2 B Pi_r + b1 Pi + C Phi_r + c1 Phi + V u) + S,

with b1 = r^-2 (r^2 B)', c1 = r^-2 (r^2 C)'. Spatial derivatives are
second-order centred differences with one-sided second-order stencils at
the excision ends, where both characteristic speeds point out of the
domain so no boundary condition is imposed. Time stepping is classical
RK4 with fourth-order Kreiss-Oliger dissipation. For the de Sitter family
the grid is staggered about r = 0 with parity ghosts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import CausalityError, CFLError, ChartCoverageError, DomainError
from ..spacetime.params import Family
from .operator import ModeOperator, mode_reduce

DEFAULT_N = 2000
DEFAULT_CFL = 0.5
MAX_CFL = 1.0  # RK4 + centred differences + KO dissipation
DEFAULT_KO = 0.1


@dataclass
class GridSpec:
    r_min: float
    r_max: float
    n: int = DEFAULT_N
    staggered: bool = False

    def radii(self):
        if self.staggered:
            dr = (self.r_max - self.r_min) / self.n
            return self.r_min + (np.arange(self.n) + 0.5) * dr, dr
        dr = (self.r_max - self.r_min) / (self.n - 1)
        return self.r_min + np.arange(self.n) * dr, dr


@dataclass
class TimeSeries:
    """Probe output: times and per-probe columns."""

    t: np.ndarray
    radii: np.ndarray
    u: np.ndarray  # shape (n_t, n_probes)
    u_t: np.ndarray
    u_r: np.ndarray
    meta: dict = field(default_factory=dict)

    def column(self, k=0, kind="u"):
        return {"u": self.u, "u_t": self.u_t, "u_r": self.u_r}[kind][:, k]

    def to_csv(self) -> str:
        head = ["t"]
        for k, r in enumerate(self.radii):
            rr = float(r)
            head += [f"u@{rr!r}", f"u_t@{rr!r}", f"u_r@{rr!r}"]
        lines = [",".join(head)]
        for i in range(len(self.t)):
            row = [self.t[i]]
            for k in range(len(self.radii)):
                row += [self.u[i, k], self.u_t[i, k], self.u_r[i, k]]
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


@dataclass
class ModeField:
    """Final slice and snapshots of an exterior evolution."""

    r: np.ndarray
    u: np.ndarray
    pi: np.ndarray
    phi: np.ndarray
    t: float
    steps: int
    dt: float
    snapshots: list = field(default_factory=list)  # (t, u-array)
    meta: dict = field(default_factory=dict)


# numba kernels -----------------------------------------------------------------
@numba.njit(cache=True)
def _deriv(f, dr, out, stag, par):
    n = f.shape[0]
    inv = 0.5 / dr
    for i in range(1, n - 1):
        out[i] = (f[i + 1] - f[i - 1]) * inv
    if stag:
        out[0] = (f[1] - par * f[0]) * inv
    else:
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv


@numba.njit(cache=True)
def _ko(f, eps_dr, out, stag, par):
    """out -= eps/(16 dr) * (f_{i+2} - 4 f_{i+1} + 6 f_i - 4 f_{i-1} + f_{i-2})."""
    n = f.shape[0]
    for i in range(2, n - 2):
        out[i] -= eps_dr * (f[i + 2] - 4.0 * f[i + 1] + 6.0 * f[i] - 4.0 * f[i - 1] + f[i - 2])
    if stag:
        # ghosts f_{-1} = par f_0, f_{-2} = par f_1
        out[0] -= eps_dr * (f[2] - 4.0 * f[1] + 6.0 * f[0] - 4.0 * par * f[0] + par * f[1])
        out[1] -= eps_dr * (f[3] - 4.0 * f[2] + 6.0 * f[1] - 4.0 * f[0] + par * f[0])


@numba.njit(cache=True)
def _evans(r, C, phi, pf, out):
    """r^-2 (r^2 C phi)' = 3 d(r^2 C phi)/d(r^3), regular at the staggered centre."""
    n = r.shape[0]
    for i in range(1, n - 1):
        out[i] = 3.0 * (r[i + 1] ** 2 * C[i + 1] * phi[i + 1] - r[i - 1] ** 2 * C[i - 1] * phi[i - 1]) / (
            r[i + 1] ** 3 - r[i - 1] ** 3)
    # ghost r_{-1} = -r_0, C even, phi_{-1} = pf phi_0
    out[0] = 3.0 * (r[1] ** 2 * C[1] * phi[1] - pf * r[0] ** 2 * C[0] * phi[0]) / (r[1] ** 3 + r[0] ** 3)
    out[n - 1] = 3.0 * (3.0 * r[n - 1] ** 2 * C[n - 1] * phi[n - 1] - 4.0 * r[n - 2] ** 2 * C[n - 2] * phi[n - 2]
                        + r[n - 3] ** 2 * C[n - 3] * phi[n - 3]) / (3.0 * r[n - 1] ** 3 - 4.0 * r[n - 2] ** 3
                                                                 + r[n - 3] ** 3)


@numba.njit(cache=True)
def _rhs(u, pi, phi, r, A, B, b1, C, c1, V, S, dr, eps_dr, stag, pu, pf, du, dpi, dphi, tmp1, tmp2):
    n = u.shape[0]
    _deriv(pi, dr, tmp1, stag, pu)
    if stag:
        # tmp2 holds the whole flux term C phi_r + c1 phi
        _evans(r, C, phi, pf, tmp2)
        for i in range(n):
            du[i] = pi[i]
            dphi[i] = tmp1[i]
            dpi[i] = (S[i] - (2.0 * B[i] * tmp1[i] + b1[i] * pi[i] + tmp2[i] + V[i] * u[i])) / A[i]
        if eps_dr > 0.0:
            _ko(u, eps_dr, du, stag, pu)
            _ko(pi, eps_dr, dpi, stag, pu)
            _ko(phi, eps_dr, dphi, stag, pf)
        return
    _deriv(phi, dr, tmp2, stag, pf)
    for i in range(n):
        du[i] = pi[i]
        dphi[i] = tmp1[i]
        dpi[i] = (S[i] - (2.0 * B[i] * tmp1[i] + b1[i] * pi[i] + C[i] * tmp2[i] + c1[i] * phi[i] + V[i] * u[i])) / A[i]
    if eps_dr > 0.0:
        _ko(u, eps_dr, du, stag, pu)
        _ko(pi, eps_dr, dpi, stag, pu)
        _ko(phi, eps_dr, dphi, stag, pf)


@numba.njit(cache=True)
def _evolve(u, pi, phi, r, A, B, b1, C, c1, V, src_amp, src_shape, src_rate, t0, dt, nsteps, dr, eps_dr, stag, pu, pf,
            rec_every, pidx, pw, out_u, out_ut, out_ur, out_t, snap_every, snaps):
    """RK4 loop; source S(t, r) = src_amp * exp(-src_rate t) * src_shape(r)."""
    n = u.shape[0]
    k1u = np.empty(n); k1p = np.empty(n); k1f = np.empty(n)
    k2u = np.empty(n); k2p = np.empty(n); k2f = np.empty(n)
    k3u = np.empty(n); k3p = np.empty(n); k3f = np.empty(n)
    k4u = np.empty(n); k4p = np.empty(n); k4f = np.empty(n)
    su = np.empty(n); sp = np.empty(n); sf = np.empty(n)
    t1 = np.empty(n); t2 = np.empty(n)
    S = np.empty(n)
    nprobe = pidx.shape[0]
    rec = 0
    snap = 0
    t = t0
    for step in range(nsteps + 1):
        if step % rec_every == 0 or step == nsteps:
            for k in range(nprobe):
                a = 0.0
                b = 0.0
                c = 0.0
                for m in range(4):
                    j = pidx[k, m]
                    w = pw[k, m]
                    a += w * u[j]
                    b += w * pi[j]
                    c += w * phi[j]
                out_u[rec, k] = a
                out_ut[rec, k] = b
                out_ur[rec, k] = c
            out_t[rec] = t
            rec += 1
        if snap_every > 0 and (step % snap_every == 0 or step == nsteps):
            for i in range(n):
                snaps[snap, i] = u[i]
            snap += 1
        if step == nsteps:
            break
        for i in range(n):
            if not math.isfinite(u[i]):
                return -1 - step
        # stage 1
        f = src_amp * math.exp(-src_rate * t)
        for i in range(n):
            S[i] = f * src_shape[i]
        _rhs(u, pi, phi, r, A, B, b1, C, c1, V, S, dr, eps_dr, stag, pu, pf, k1u, k1p, k1f, t1, t2)
        for i in range(n):
            su[i] = u[i] + 0.5 * dt * k1u[i]
            sp[i] = pi[i] + 0.5 * dt * k1p[i]
            sf[i] = phi[i] + 0.5 * dt * k1f[i]
        f = src_amp * math.exp(-src_rate * (t + 0.5 * dt))
        for i in range(n):
            S[i] = f * src_shape[i]
        _rhs(su, sp, sf, r, A, B, b1, C, c1, V, S, dr, eps_dr, stag, pu, pf, k2u, k2p, k2f, t1, t2)
        for i in range(n):
            su[i] = u[i] + 0.5 * dt * k2u[i]
            sp[i] = pi[i] + 0.5 * dt * k2p[i]
            sf[i] = phi[i] + 0.5 * dt * k2f[i]
        _rhs(su, sp, sf, r, A, B, b1, C, c1, V, S, dr, eps_dr, stag, pu, pf, k3u, k3p, k3f, t1, t2)
        for i in range(n):
            su[i] = u[i] + dt * k3u[i]
            sp[i] = pi[i] + dt * k3p[i]
            sf[i] = phi[i] + dt * k3f[i]
        f = src_amp * math.exp(-src_rate * (t + dt))
        for i in range(n):
            S[i] = f * src_shape[i]
        _rhs(su, sp, sf, r, A, B, b1, C, c1, V, S, dr, eps_dr, stag, pu, pf, k4u, k4p, k4f, t1, t2)
        h6 = dt / 6.0
        for i in range(n):
            u[i] += h6 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i])
            pi[i] += h6 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])
            phi[i] += h6 * (k1f[i] + 2.0 * k2f[i] + 2.0 * k3f[i] + k4f[i])
        t = t0 + (step + 1) * dt
    return rec


# probes ----------------------------------------------------------------------
def lagrange_weights(r_grid, r, stag_parity=None, order=4):
    """Indices and weights of the ``order``-point Lagrange stencil nearest ``r``."""
    n = len(r_grid)
    if not (r_grid[0] - 1e-12 <= r <= r_grid[-1] + 1e-12):
        if stag_parity is None or r < 0 or r > r_grid[-1]:
            raise ChartCoverageError(f"probe r = {r!r} outside grid [{r_grid[0]!r}, {r_grid[-1]!r}]")
    dr = r_grid[1] - r_grid[0]
    i0 = int(math.floor((r - r_grid[0]) / dr)) - (order // 2 - 1)
    i0 = min(max(i0, 0), n - order)
    idx = np.arange(i0, i0 + order)
    xs = r_grid[idx]
    w = np.ones(order)
    for a in range(order):
        for b in range(order):
            if a != b:
                w[a] *= (r - xs[b]) / (xs[a] - xs[b])
    return idx, w


# driver ----------------------------------------------------------------------
@dataclass
class ExteriorConfig:
    ell: int = 0
    mass2: float = 0.0
    n: int = DEFAULT_N
    cfl: float = DEFAULT_CFL
    ko: float = DEFAULT_KO
    t_end: float = 100.0
    dt: float | None = None
    delta_exc: float | None = None
    delta_out: float | None = None
    r_min: float | None = None
    r_max: float | None = None
    pulse_center: float | None = None
    pulse_width: float = 1.0
    pulse_amp: float = 1.0
    pulse_kind: str = "static"  # "static" (Pi = 0) or "ingoing"
    probes: tuple = ()
    record_dt: float | None = None
    snapshot_every: int = 0
    allow_inflow: bool = False  # truncated grids for domain-of-dependence checks only


def exterior_domain(charts, cfg: ExteriorConfig):
    """Radial domain [r_2 - delta_exc, r_3 + delta_out] (or [0, r_3 + delta_out] for dS)."""
    hd = charts.horizons
    d = charts.delta
    de = cfg.delta_exc if cfg.delta_exc is not None else d
    do = cfg.delta_out if cfg.delta_out is not None else d
    if charts.params.family is Family.DS:
        lo, hi, stag = 0.0, hd.r3 + do, True
    else:
        if hd.r2 is None or hd.r3 is None:
            raise DomainError("exterior engine needs event and cosmological horizons (or the dS family)")
        lo, hi, stag = hd.r2 - de, hd.r3 + do, False
    if cfg.r_min is not None:
        lo = cfg.r_min
    if cfg.r_max is not None:
        hi = cfg.r_max
    if lo < charts.r_min - 1e-14 or hi > charts.r_max + 1e-14:
        raise ChartCoverageError(f"domain [{lo!r}, {hi!r}] exceeds chart [{charts.r_min!r}, {charts.r_max!r}]")
    return lo, hi, stag


def initial_data(r, cfg: ExteriorConfig, op: ModeOperator):
    rc = cfg.pulse_center if cfg.pulse_center is not None else 0.5 * (r[0] + r[-1])
    w = cfg.pulse_width
    g = cfg.pulse_amp * np.exp(-(((r - rc) / w) ** 2))
    phi = g * (-2.0 * (r - rc) / w**2)
    if cfg.pulse_kind == "static":
        pi = np.zeros_like(r)
    elif cfg.pulse_kind == "ingoing":
        # Pi = -s_in * Phi along the slower characteristic (approximate)
        pi = phi * ((op.B - 1.0) / op.A)
    else:
        raise ValueError(f"unknown pulse kind {cfg.pulse_kind!r}")
    return g, pi, phi


def exterior_evolve(charts, cfg: ExteriorConfig, data=None, source=None) -> tuple:
    """Evolve one mode; returns (ModeField, TimeSeries).

    ``data`` optionally gives (u, Pi, Phi) on the grid; ``source`` is
    (amp, rate, shape_fn) for S(t, r) = amp e^{-rate t} shape(r), used for
    manufactured solutions.
    """
    lo, hi, stag = exterior_domain(charts, cfg)
    grid = GridSpec(lo, hi, cfg.n, staggered=stag)
    r, dr = grid.radii()
    op = mode_reduce(charts, cfg.ell, cfg.mass2, r)
    if np.any(op.A <= 0):
        raise CausalityError("dt_* is not timelike somewhere in the domain (A <= 0)")
    s_lo, s_hi = op.speeds()
    if cfg.allow_inflow:
        pass
    elif not stag and max(s_lo[0], s_hi[0]) > 1e-12:
        raise CausalityError(f"inner boundary r = {lo!r} is not pure outflow (speeds {s_lo[0]!r}, {s_hi[0]!r})")
    if not cfg.allow_inflow and min(s_lo[-1], s_hi[-1]) < -1e-12:
        raise CausalityError(f"outer boundary r = {hi!r} is not pure outflow (speeds {s_lo[-1]!r}, {s_hi[-1]!r})")
    vmax = float(np.max(np.maximum(np.abs(s_lo), np.abs(s_hi))))
    if not 0 < cfg.cfl <= MAX_CFL:
        raise CFLError(f"cfl = {cfg.cfl!r} outside (0, {MAX_CFL}]")
    dt_max = cfg.cfl * dr / vmax
    if cfg.dt is None:
        nsteps = int(math.ceil(cfg.t_end / dt_max))
        dt = cfg.t_end / nsteps
    else:
        dt = float(cfg.dt)
        if not 0 < dt <= MAX_CFL * dr / vmax + 1e-15:
            raise CFLError(f"dt = {dt!r} outside (0, {MAX_CFL} dr / v_max = {MAX_CFL * dr / vmax!r}]")
        nsteps = int(round(cfg.t_end / dt))
    if data is None:
        u, pi, phi = initial_data(r, cfg, op)
    else:
        u, pi, phi = (np.array(a, dtype=float) for a in data)
    u = np.ascontiguousarray(u, dtype=float).copy()
    pi = np.ascontiguousarray(pi, dtype=float).copy()
    phi = np.ascontiguousarray(phi, dtype=float).copy()
    probes = list(cfg.probes)
    pidx = np.zeros((len(probes), 4), dtype=np.int64)
    pw = np.zeros((len(probes), 4))
    for k, rp in enumerate(probes):
        idx, w = lagrange_weights(r, rp, stag_parity=1 if stag else None)
        pidx[k], pw[k] = idx, w
    rec_every = 1 if cfg.record_dt is None else max(1, int(round(cfg.record_dt / dt)))
    n_rec = nsteps // rec_every + 1 + (1 if nsteps % rec_every else 0)  # final slice always recorded
    out_u = np.zeros((n_rec, len(probes)))
    out_ut = np.zeros_like(out_u)
    out_ur = np.zeros_like(out_u)
    out_t = np.zeros(n_rec)
    snap_every = int(cfg.snapshot_every)
    n_snap = nsteps // snap_every + 1 + (1 if nsteps % snap_every else 0) if snap_every > 0 else 0
    snaps = np.zeros((max(n_snap, 1), len(r) if snap_every > 0 else 1))
    if source is None:
        amp, rate, shape = 0.0, 0.0, np.zeros_like(r)
    else:
        amp, rate, fn = source
        shape = np.asarray(fn(r), dtype=float)
    pu = float((-1) ** cfg.ell)
    pf = -pu
    eps_dr = cfg.ko / (16.0 * dr) * vmax if cfg.ko > 0 else 0.0
    status = _evolve(u, pi, phi, r, op.A, op.B, op.first_t, op.C, op.first_r, op.potential, float(amp), shape,
                     float(rate), 0.0, dt, nsteps, dr, eps_dr, stag, pu, pf, rec_every, pidx, pw, out_u, out_ut,
                     out_ur, out_t, snap_every, snaps)
    if status < 0:
        from ..errors import IntegrationError

        raise IntegrationError(f"non-finite field at step {-status - 1}")
    meta = {
        "scheme": "centred FD2 + RK4 + KO4",
        "design_order": 2,
        "dr": dr,
        "dt": dt,
        "steps": nsteps,
        "v_max": vmax,
        "r_min": lo,
        "r_max": hi,
        "staggered": stag,
        "ell": cfg.ell,
        "mass2": cfg.mass2,
        "allow_inflow": cfg.allow_inflow,
    }
    field_ = ModeField(r, u, pi, phi, nsteps * dt, nsteps, dt, meta=meta)
    if snap_every > 0:
        field_.snapshots = [(min(k * snap_every, nsteps) * dt, snaps[k].copy()) for k in range(n_snap)]
    ts = TimeSeries(out_t[:status], np.array(probes, dtype=float), out_u[:status], out_ut[:status],
                    out_ur[:status], meta=dict(meta))
    return field_, ts
