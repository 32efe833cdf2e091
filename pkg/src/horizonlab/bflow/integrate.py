"""Adaptive integration of the Hamilton flows with invariant logs.

The integrator is scipy's DOP853 (explicit Runge-Kutta, order 8 with
embedded error estimates). Two per-step interventions are implemented as
terminal events followed by a restart:

* fiber renormalisation: when the fiber max-norm leaves [1e-6, 1e6] the
  covector is rescaled by degree-1 homogeneity of H_G; the affine
  parameter and the logged invariants are reported in the original
  normalisation;
* Kerr-de Sitter pole handling: the state switches to the (y, z) chart when
  sin(theta) < 0.1 and back when it exceeds 0.2.

No projection onto G = 0 is applied; conservation is a diagnostic.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import ChartCoverageError, IntegrationError
from .phase import (
    BPhasePoint,
    CompactifiedPoint,
    KdSChart,
    carter,
    dual_metric,
    hamiltonian_rhs,
    kds_hamiltonian,
    kds_point_rhs,
    pole_to_polar,
    polar_to_pole,
    rescaled_rhs,
)

FIBER_LO = 1e-6
FIBER_HI = 1e6
TAU_HI = 1e100
FIBER_LOG_MAX = 600.0
FIBER_BLOWUP = 20.0  # failures after the fiber grew by e^20 count as reaching fiber infinity
POLE_IN = 0.1
POLE_OUT = 0.2
MAX_RESTARTS = 10000


@dataclass
class Trajectory:
    """Integrated flow curve.

    ``states`` rows are in the original fiber normalisation. For KdS the
    rows are always polar ``[tau, r, theta, phi, sigma, xi, eta, zeta]``
    (converted back from the pole chart when needed; ``pole`` marks those).
    ``log_tau`` is log|tau0| per sample; ``states[:, 0]`` saturates to inf
    once tau0 exceeds the float range.
    """

    s: np.ndarray
    states: np.ndarray
    kind: str  # "spherical", "rescaled" or "kds"
    G: np.ndarray
    sigma: np.ndarray
    zeta: np.ndarray | None = None
    carter: np.ndarray | None = None
    pole: np.ndarray | None = None
    sign: int | None = None
    tag: str = "running"
    renormalisations: int = 0
    chart_switches: int = 0
    message: str = ""
    meta: dict = field(default_factory=dict)
    log_tau: np.ndarray | None = None

    @property
    def r(self):
        return self.states[:, 1]

    def fiber_scale(self):
        """Max-norm of the fiber part per sample."""
        if self.kind == "spherical":
            return np.max(np.abs(self.states[:, [3, 4, 5]]), axis=1)
        if self.kind == "kds":
            return np.max(np.abs(self.states[:, [4, 5, 6, 7]]), axis=1)
        return np.ones(len(self.s))

    def drift(self) -> dict:
        """Conservation diagnostics relative to the initial sample."""
        dG = np.abs(self.G - self.G[0])
        with np.errstate(over="ignore", invalid="ignore"):
            scale2 = np.maximum(self.fiber_scale(), 1.0) ** 2 if self.kind != "rescaled" else 1.0
            rel = dG / scale2
        out = {
            "G_drift": float(np.max(dG)),
            "G_drift_scaled": float(np.nanmax(rel)),
            "sigma_drift": float(np.max(np.abs(self.sigma - self.sigma[0]))),
        }
        if self.zeta is not None:
            out["zeta_drift"] = float(np.max(np.abs(self.zeta - self.zeta[0])))
        if self.carter is not None:
            ref = max(abs(self.carter[0]), 1e-300)
            out["carter_rel_drift"] = float(np.max(np.abs(self.carter - self.carter[0])) / ref)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.kind == "kds":
            cols = ["tau", "r", "theta", "phi", "sigma", "xi", "eta", "zeta"]
        elif self.kind == "rescaled":
            cols = ["tau", "r", "phi", "rho_hat", "sigma_hat", "eta_hat"]
        else:
            cols = ["tau", "r", "phi", "sigma", "xi", "eta"]
        extra = ["G"] + (["p_C"] if self.carter is not None else [])
        w.writerow(["s"] + cols + extra)
        for i in range(len(self.s)):
            row = [self.s[i], *self.states[i], self.G[i]]
            if self.carter is not None:
                row.append(self.carter[i])
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "tag": self.tag,
            "n_samples": int(len(self.s)),
            "s_final": float(self.s[-1]),
            "r_initial": float(self.r[0]),
            "r_final": float(self.r[-1]),
            "renormalisations": self.renormalisations,
            "chart_switches": self.chart_switches,
            "message": self.message,
        }
        out.update(self.drift())
        out.update(self.meta)
        return out

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def _fiber_idx(kind):
    # pole-chart states keep the fiber in the same slots as polar ones
    if kind == "spherical":
        return [3, 4, 5]
    if kind == "kds":
        return [4, 5, 6, 7]
    return []


def integrate(point, chart, span: float, rtol: float = 1e-10, atol: float = 1e-12,
              max_step: float = np.inf, n_out: int | None = None) -> Trajectory:
    """Integrate the Hamilton flow from ``point`` over affine length ``span``.

    ``point`` is a :class:`BPhasePoint` (unrescaled flow, spherical or KdS)
    or a :class:`CompactifiedPoint` (rescaled flow; ``span`` then refers to
    the rescaled parameter). Negative ``span`` integrates backwards.
    ``n_out`` resamples the result onto that many equally spaced points.
    Exits from the chart's radial range end the run with tag
    ``exit_low``/``exit_high``. A fiber growing or shrinking past e^600, or
    a solver failure after the fiber grew by e^20 (finite-time blow-up),
    ends it with ``fiber_limit``. Other integration failures raise
    :class:`IntegrationError` carrying the partial trajectory as ``.partial``.
    """
    if isinstance(point, CompactifiedPoint):
        kind = "rescaled"
        y0 = point.state()
        sign = point.sign
        rhs = lambda s, y: rescaled_rhs(y, chart, sign)  # noqa: E731
    elif isinstance(point, BPhasePoint) and point.is_kerr:
        if not isinstance(chart, KdSChart):
            raise TypeError("KdS points need a KdSChart")
        kind = "kds"
        y0 = point.state()
        if abs(math.sin(y0[2])) < POLE_IN:
            y0 = polar_to_pole(y0)
        rhs = lambda s, y: kds_point_rhs(y, chart)  # noqa: E731
    else:
        kind = "spherical"
        y0 = point.state()
        rhs = lambda s, y: hamiltonian_rhs(y, chart)  # noqa: E731
    chart.check(float(y0[1]))
    sign = point.sign if kind == "rescaled" else None
    fid = _fiber_idx(kind)

    direction = 1.0 if span >= 0 else -1.0
    s_done = 0.0
    scale = 1.0  # current fiber = scale * original fiber
    log_tau_off = 0.0  # original tau0 = e^{log_tau_off} * current tau0
    log_taus = []
    ss, ys, poles = [], [], []
    tag, message = "running", ""
    renorm = switches = 0
    y = np.array(y0, dtype=float)

    def ev_rlo(s, y):
        return y[1] - chart.r_min

    def ev_rhi(s, y):
        return chart.r_max - y[1] if math.isfinite(chart.r_max) else 1.0

    def ev_tau(s, y):
        # the tau0 equation is linear and decoupled, so tau0 is renormalised like the fiber
        a = abs(y[0])
        return math.log(TAU_HI) - (math.log(min(max(a, 1e-300), 1e308)) if a == a else 1e3)

    ev_rlo.terminal = ev_rhi.terminal = ev_tau.terminal = True
    ev_rlo.direction = ev_rhi.direction = ev_tau.direction = -1

    for _ in range(MAX_RESTARTS):
        remaining = (abs(span) - abs(s_done)) / scale
        if remaining <= 0:
            break
        events = [ev_rlo, ev_rhi, ev_tau]
        if fid:
            def ev_fhi(s, y, fid=fid):
                return math.log(FIBER_HI) - math.log(max(np.max(np.abs(y[fid])), 1e-300))

            def ev_flo(s, y, fid=fid):
                return math.log(max(np.max(np.abs(y[fid])), 1e-300)) - math.log(FIBER_LO)

            ev_fhi.terminal = ev_flo.terminal = True
            ev_fhi.direction = ev_flo.direction = -1
            events += [ev_fhi, ev_flo]
        if kind == "kds":
            if len(y) == 9:
                def ev_pole(s, y):
                    return POLE_OUT - math.sqrt(y[2] ** 2 + y[3] ** 2)
            else:
                def ev_pole(s, y):
                    return abs(math.sin(y[2])) - POLE_IN
            ev_pole.terminal = True
            ev_pole.direction = -1
            events.append(ev_pole)
        try:
            sol = solve_ivp(rhs, (0.0, direction * remaining), y, method="DOP853", rtol=rtol, atol=atol,
                            max_step=max_step, events=events)
        except ChartCoverageError as exc:
            tag, message = "chart_exit", str(exc)
            break
        except (OverflowError, FloatingPointError) as exc:
            if -math.log(scale) > FIBER_BLOWUP:
                tag, message = "fiber_limit", f"fiber blow-up: {exc}"
                break
            traj = _assemble(ss, ys, poles, kind, chart, sign, tag="failed", message=str(exc))
            traj.log_tau = np.array(log_taus)
            err = IntegrationError(f"integration failed at s = {s_done!r}: {exc}")
            err.partial = traj
            raise err from None
        seg_s = s_done + direction * scale * np.abs(sol.t)
        for k in range(len(sol.t)):
            if ss and k == 0:
                continue
            ss.append(seg_s[k])
            yk = sol.y[:, k].copy()
            poles.append(len(yk) == 9)
            lt = math.log(abs(yk[0])) + log_tau_off if yk[0] != 0 else -math.inf
            log_taus.append(lt)
            with np.errstate(over="ignore"):
                yk[0] = math.copysign(float(np.exp(lt)), yk[0]) if log_tau_off else yk[0]
            if fid:
                yk[fid] = yk[fid] / scale
            ys.append(yk)
        if sol.status < 0 or not np.all(np.isfinite(sol.y)):
            msg = sol.message if sol.status < 0 else "non-finite state"
            if -math.log(scale) > FIBER_BLOWUP:
                tag, message = "fiber_limit", f"fiber blow-up: {msg}"
                break
            traj = _assemble(ss, ys, poles, kind, chart, sign, tag="failed", message=msg)
            traj.log_tau = np.array(log_taus)
            err = IntegrationError(f"integration failed at s = {s_done + direction * scale * abs(sol.t[-1])!r}: {msg}")
            err.partial = traj
            raise err
        s_done = seg_s[-1]
        y = sol.y[:, -1].copy()
        if sol.status == 0:
            break
        hit = [i for i, te in enumerate(sol.t_events) if len(te)]
        i = hit[0]
        if i == 0:
            tag = "exit_low"
            break
        if i == 1:
            tag = "exit_high"
            break
        if i == 2:
            log_tau_off += math.log(abs(y[0]))
            y[0] = math.copysign(1.0, y[0])
            continue
        if fid and i in (3, 4):
            c = 1.0 / float(np.max(np.abs(y[fid])))
            y[fid] *= c
            scale *= c
            renorm += 1
            if abs(math.log(scale)) > FIBER_LOG_MAX:
                # fiber infinity reached at finite affine parameter (radial set)
                tag = "fiber_limit"
                break
            continue
        if kind == "kds":
            y = pole_to_polar(y) if len(y) == 9 else polar_to_pole(y)
            switches += 1
            continue
    else:
        message = "restart limit reached"
    traj = _assemble(ss, ys, poles, kind, chart, sign, tag=tag, message=message)
    traj.renormalisations = renorm
    traj.chart_switches = switches
    traj.log_tau = np.array(log_taus)
    if n_out is not None and len(traj.s) > 1:
        traj = _resample(traj, int(n_out))
    return traj


def _resample(traj, n):
    s_new = np.linspace(traj.s[0], traj.s[-1], n)
    interp = lambda a: np.interp(s_new, traj.s, a) if traj.s[-1] >= traj.s[0] else np.interp(  # noqa: E731
        -s_new, -traj.s, a)
    states = np.column_stack([interp(traj.states[:, k]) for k in range(traj.states.shape[1])])
    out = Trajectory(s_new, states, traj.kind, interp(traj.G), interp(traj.sigma),
                     zeta=None if traj.zeta is None else interp(traj.zeta),
                     carter=None if traj.carter is None else interp(traj.carter),
                     pole=None, sign=traj.sign, tag=traj.tag, renormalisations=traj.renormalisations,
                     chart_switches=traj.chart_switches, message=traj.message, meta=dict(traj.meta),
                     log_tau=None if traj.log_tau is None else interp(traj.log_tau))
    out.meta["resampled"] = "linear"
    return out


def _assemble(ss, ys, poles, kind, chart, sign, tag, message):
    # conserved quantities of fibers near infinity may overflow to inf
    with np.errstate(over="ignore", invalid="ignore"):
        return _assemble_inner(ss, ys, poles, kind, chart, sign, tag, message)


def _assemble_inner(ss, ys, poles, kind, chart, sign, tag, message):
    s = np.asarray(ss, dtype=float)
    rows = []
    for y in ys:
        rows.append(pole_to_polar(y) if len(y) == 9 else y)
    states = np.array(rows) if rows else np.zeros((0, 8 if kind == "kds" else 6))
    if kind == "kds":
        G = np.array([kds_hamiltonian(chart, y) for y in ys])
        pc = np.array([carter(chart, y) for y in ys])
        zeta = states[:, 7]
        return Trajectory(s, states, kind, G, states[:, 4], zeta=zeta, carter=pc,
                          pole=np.array(poles, dtype=bool), tag=tag, message=message)
    if kind == "rescaled":
        G = np.array([_rescaled_G(chart, y, sign) for y in states])
        return Trajectory(s, states, kind, G, states[:, 4] / np.where(states[:, 3] == 0, np.nan, states[:, 3]),
                          sign=sign, tag=tag, message=message)
    G = np.array([dual_metric(y, chart) for y in states])
    return Trajectory(s, states, kind, G, states[:, 3], tag=tag, message=message)


def _rescaled_G(chart, y, sign):
    r = y[1]
    A, B, C = chart.abc(r)[:3]
    return A * y[4] ** 2 - 2.0 * B * y[4] * sign + C - y[5] ** 2 / (r * r)
