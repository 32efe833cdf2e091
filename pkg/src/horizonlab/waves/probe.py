"""Probing computed fields at arbitrary locations."""

from __future__ import annotations

import numpy as np

from ..errors import ChartCoverageError
from .exterior import ModeField, TimeSeries, lagrange_weights
from .interior import InteriorResult

EXTERIOR_KINDS = ("u", "t", "r")
INTERIOR_KINDS = ("u", "v", "V", "u_coord")


def probe_slice(field: ModeField, r: float, kind: str = "u", order: int = 4) -> float:
    """Value of u, d_t u or d_r u on the final slice at radius ``r``.

    ``order`` is the number of Lagrange stencil points (2, 4 or 6).
    """
    if kind not in EXTERIOR_KINDS:
        raise ValueError(f"kind must be one of {EXTERIOR_KINDS}")
    arr = {"u": field.u, "t": field.pi, "r": field.phi}[kind]
    idx, w = lagrange_weights(field.r, r, order=order)
    return float(np.dot(w, arr[idx]))


def probe_snapshots(field: ModeField, r: float, order: int = 4) -> TimeSeries:
    """Series of u(t, r) from stored snapshots; d_t u by centred differences."""
    if not field.snapshots:
        raise ValueError("field carries no snapshots")
    idx, w = lagrange_weights(field.r, r, order=order)
    t = np.array([s[0] for s in field.snapshots])
    u = np.array([np.dot(w, s[1][idx]) for s in field.snapshots])
    ut = np.gradient(u, t, edge_order=2) if len(t) > 2 else np.zeros_like(u)
    ur = np.full_like(u, np.nan)
    return TimeSeries(t, np.array([r]), u[:, None], ut[:, None], ur[:, None], meta={"source": "snapshots"})


def probe_ray(result: InteriorResult, u: float, kind: str = "u") -> TimeSeries:
    """Interior series along the outgoing ray ``u`` (must be a recorded probe ray).

    ``kind``: "u" (the field), "v" (d_v), "V" (log|d_V| with V = -e^{-kappa_1 v}/kappa_1).
    The time column is v.
    """
    keys = np.array(list(result.rays))
    if len(keys) == 0 or np.min(np.abs(keys - u)) > 0.5 * result.meta["h"] + 1e-12:
        raise ChartCoverageError(f"no recorded ray at u = {u!r} (recorded: {sorted(result.rays)})")
    if kind == "u":
        col = result.ray(u)
    elif kind == "v":
        col = result.dphi_dv(u)
    elif kind == "V":
        col = result.log_abs_dphi_dV(u)
    else:
        raise ValueError("kind must be 'u', 'v' or 'V'")
    z = np.full((len(result.v), 1), np.nan)
    return TimeSeries(result.v.copy(), np.array([u]), col[:, None], z, z.copy(), meta={"kind": kind, "ray_u": u})


def d_dv_grid(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Second-order d/dv of a grid function sampled with spacing ``h``."""
    return np.gradient(values, h, axis=axis, edge_order=2)
