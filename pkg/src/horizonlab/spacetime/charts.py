"""Star-coordinate charts (t_*, r, omega) across all horizons.

With t = t_* + F(r), F' = s (1/mu + c), the (t_*, r) block of the metric is

    g = mu dt_*^2 + 2 s (1 + mu c) dt_* dr + (2 c + mu c^2) dr^2,

which has determinant -1 for every c. The inverse block is

    G^{t t} = A = -(2 c + mu c^2),  G^{t r} = B = s (1 + mu c),  G^{r r} = C = -mu,

and B^2 - A C = 1. A chart is a list of radial segments, each carrying a
sign s and a function c(r). Near each horizon r_j, c is a quintic Hermite
blend between +1/mu (on the side where mu < 0) and -1/mu (static side,
where t_* = t up to a constant). Across the wide band between r_1 and r_2
c = k(r)/mu with k a smoothstep, which avoids polynomial overshoot.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly

from ..errors import ChartCoverageError, ChartError, DomainError
from .extension import ExtendedProfile
from .horizons import default_delta, find_horizons
from .params import Family, mu_derivs

N_REPORT = 1000


class RadialProfile:
    """Uniform access to mu (or mu_*) and its derivatives."""

    def __init__(self, source):
        if isinstance(source, ExtendedProfile):
            self.params = source.base
            self.profile = source
        else:
            self.params = source
            self.profile = None

    def derivs(self, r, order=2):
        if self.profile is not None:
            return self.profile.derivs(r, order)
        if self.params.family is Family.DS:
            # closed form, regular at the centre r = 0
            lam = self.params.lambda3
            x = np.asarray(r, dtype=float)
            vals = [1.0 - lam * x * x, -2.0 * lam * x, -2.0 * lam + 0 * x, 0 * x, 0 * x][: order + 1]
            return [float(v) for v in vals] if x.ndim == 0 else vals
        return mu_derivs(self.params, r, order)


def _ratio_derivs(k, m):
    """k/mu and its first two derivatives from [mu, mu', mu'']."""
    m0, m1, m2 = m[0], m[1], m[2]
    return (k / m0, -k * m1 / m0**2, k * (-m2 / m0**2 + 2.0 * m1**2 / m0**3))


@dataclass
class Segment:
    """Radial interval [lo, hi) with sign s and c = k / mu or a blend."""

    lo: float
    hi: float
    s: int
    kind: str  # "ratio", "blend" (Hermite in c) or "kstep" (k(r)/mu)
    k: float = 0.0
    k_hi: float = 0.0
    blend: BPoly | None = field(default=None, repr=False)

    def c_derivs(self, r, m):
        if self.kind == "ratio":
            return _ratio_derivs(self.k, m)
        if self.kind == "kstep":
            return _kstep_derivs(self, r, m)
        b = self.blend
        return (b(r), b(r, 1), b(r, 2))

    def describe(self):
        if self.kind == "ratio":
            c = f"{self.k:+g}/mu"
        elif self.kind == "kstep":
            c = f"smoothstep {self.k:+g}/mu -> {self.k_hi:+g}/mu"
        else:
            c = "quintic blend"
        return {"lo": self.lo, "hi": self.hi, "s": self.s, "c": c}


def _kstep_derivs(seg, r, m):
    """c = k(r)/mu with k a C^2 quintic smoothstep from seg.k to seg.k_hi."""
    w = seg.hi - seg.lo
    x = (np.asarray(r, dtype=float) - seg.lo) / w
    dk = seg.k_hi - seg.k
    k = seg.k + dk * x**3 * (10.0 - 15.0 * x + 6.0 * x * x)
    k1 = dk * 30.0 * x * x * (1.0 - x) ** 2 / w
    k2 = dk * 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / w**2
    m0, m1, m2 = m[0], m[1], m[2]
    c = k / m0
    c1 = k1 / m0 - k * m1 / m0**2
    c2 = k2 / m0 - 2.0 * k1 * m1 / m0**2 + k * (-m2 / m0**2 + 2.0 * m1**2 / m0**3)
    return c, c1, c2


def _make_blend(prof, lo, hi, k_lo, k_hi):
    """Quintic Hermite c on [lo, hi] from k_lo/mu to k_hi/mu matching c, c', c''."""
    m_lo = prof.derivs(lo, 2)
    m_hi = prof.derivs(hi, 2)
    y_lo = list(_ratio_derivs(k_lo, m_lo))
    y_hi = list(_ratio_derivs(k_hi, m_hi))
    return BPoly.from_derivatives([lo, hi], [y_lo, y_hi])


class ChartData:
    """Global star chart built by :func:`build_charts`."""

    def __init__(self, source, horizons, segments, delta, signs, required_bands):
        self.source = source
        self.profile = RadialProfile(source)
        self.params = self.profile.params
        self.horizons = horizons
        self.segments = segments
        self.delta = delta
        self.signs = signs
        self.required_bands = required_bands
        self._los = [seg.lo for seg in segments]
        self.r_min = segments[0].lo
        self.r_max = segments[-1].hi

    # evaluation -------------------------------------------------------------
    def segment_at(self, r: float) -> Segment:
        if not (self.r_min <= r <= self.r_max):
            raise ChartCoverageError(f"r = {r!r} outside chart [{self.r_min!r}, {self.r_max!r}]")
        i = bisect.bisect_right(self._los, r) - 1
        return self.segments[max(i, 0)]

    def c(self, r, order=0):
        """c(r) and optionally its derivatives, with the segment sign s."""
        seg = self.segment_at(r)
        m = self.profile.derivs(r, 2)
        cs = seg.c_derivs(r, m)
        return seg.s, [float(v) for v in cs[: order + 1]]

    def components(self, r: float):
        """(A, B, C, A', B', C') of the inverse metric at a scalar radius."""
        seg = self.segment_at(r)
        m = self.profile.derivs(r, 2)
        c, c1, _ = (float(v) for v in seg.c_derivs(r, m))
        return _abc(seg.s, m[0], m[1], c, c1)

    def components_array(self, r):
        """Vectorised :meth:`components` returning six arrays."""
        r = np.asarray(r, dtype=float)
        out = np.empty((6,) + r.shape)
        if np.any(r < self.r_min) or np.any(r > self.r_max):
            raise ChartCoverageError("radii outside chart coverage")
        idx = np.clip(np.searchsorted(self._los, r, side="right") - 1, 0, len(self.segments) - 1)
        for i, seg in enumerate(self.segments):
            sel = idx == i
            if not np.any(sel):
                continue
            rr = r[sel]
            m = self.profile.derivs(rr, 2)
            c, c1, _ = seg.c_derivs(rr, m)
            vals = _abc(seg.s, m[0], m[1], np.asarray(c), np.asarray(c1))
            for k in range(6):
                out[k][sel] = vals[k]
        return out

    def metric_block(self, r):
        """Covariant (t_*, r) block (g_tt, g_tr, g_rr)."""
        seg = self.segment_at(r)
        m = self.profile.derivs(r, 2)
        c = float(seg.c_derivs(r, m)[0])
        mu0 = m[0]
        return mu0, seg.s * (1.0 + mu0 * c), 2.0 * c + mu0 * c * c

    def inverse_block(self, r):
        a, b, c = self.components(r)[:3]
        return a, b, c

    # coordinate change ------------------------------------------------------
    def dF(self, r):
        """F'(r) = s (1/mu + c); singular at horizons."""
        s, (c,) = self.c(r)
        m = self.profile.derivs(r, 0)[0]
        if m == 0:
            raise DomainError(f"F' undefined at horizon r = {r!r}")
        return s * (1.0 / m + c)

    def _component_bounds(self, r):
        pts = [self.r_min] + [x for x in self.horizon_radii() if self.r_min < x < self.r_max] + [self.r_max]
        for a, b in zip(pts, pts[1:]):
            if a < r < b or (r == a == self.r_min) or (r == b == self.r_max):
                return a, b
        raise DomainError(f"r = {r!r} is a horizon: t is undefined there")

    def F(self, r: float, epsabs=1e-12, epsrel=1e-12) -> float:
        """F(r) with F = 0 at the midpoint of the mu-sign component containing r."""
        a, b = self._component_bounds(r)
        hi = b if math.isfinite(b) else a + 10.0 * max(1.0, a)
        anchor = 0.5 * (a + hi)
        # breakpoints keep quad accurate across blend edges
        pts = [x for x in self._los if min(anchor, r) < x < max(anchor, r)]
        val, _ = quad(self.dF, anchor, r, points=pts or None, epsabs=epsabs, epsrel=epsrel, limit=200)
        return float(val)

    def tstar_of_t(self, t, r):
        """t_* = t - F(r)."""
        return t - self.F(r)

    def horizon_radii(self):
        return [self.horizons.radii[j] for j in sorted(self.horizons.radii)]

    # reports ----------------------------------------------------------------
    def causal_report(self, n=N_REPORT):
        r = np.linspace(self.r_min, self.r_max if math.isfinite(self.r_max) else self.r_min + 50, n)
        A, B, C = self.components_array(r)[:3]
        det = np.array([_det(*self.metric_block(x)) for x in r])
        report = {
            "n": int(n),
            "dtstar_timelike_fraction": float(np.mean(A > 0)),
            "dr_timelike_fraction": float(np.mean(C > 0)),
            "max_det_error": float(np.max(np.abs(det + 1.0))),
            "max_identity_error": float(np.max(np.abs(B * B - A * C - 1.0))),
            "required_bands": [list(b) for b in self.required_bands],
            "required_ok": True,
        }
        for lo, hi in self.required_bands:
            sel = (r >= lo) & (r <= hi)
            if np.any(sel) and np.min(A[sel]) <= 0:
                report["required_ok"] = False
        return report

    def as_dict(self):
        return {
            "params": self.params.as_dict(),
            "delta": self.delta,
            "signs": {str(k): v for k, v in self.signs.items()},
            "horizons": {str(j): self.horizons.radii[j] for j in sorted(self.horizons.radii)},
            "r_min": self.r_min,
            "r_max": self.r_max if math.isfinite(self.r_max) else None,
            "segments": [s.describe() for s in self.segments],
            "c_at_horizons": {str(j): self.c(self.horizons.radii[j])[1][0] for j in sorted(self.horizons.radii)},
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def _abc(s, m0, m1, c, c1):
    A = -(2.0 * c + m0 * c * c)
    B = s * (1.0 + m0 * c)
    C = -m0
    dA = -(2.0 * c1 + m1 * c * c + 2.0 * m0 * c * c1)
    dB = s * (m1 * c + m0 * c1)
    dC = -m1
    return A, B, C, dA, dB, dC


def _det(gtt, gtr, grr):
    return gtt * grr - gtr * gtr


def _sign(prof, r):
    return -1 if prof.derivs(r, 1)[1] > 0 else 1


def build_charts(source, delta: float | None = None, outer_width: float = 4.0) -> ChartData:
    """Assemble the global star chart.

    ``source`` is an :class:`ExtendedProfile` (domain [r0 - 4 delta, r3 + 4 delta])
    or plain :class:`SpacetimeParams` (unextended: from r1 - 2 delta, or
    r2 - 4 delta without a Cauchy horizon, or 0 for de Sitter). Raises
    :class:`ChartError` if dt_* fails to be timelike where required or
    c_j(r_j) >= 0.
    """
    prof = RadialProfile(source)
    params = prof.params
    if params.family is Family.KDS:
        raise DomainError("star-coordinate charts are implemented for spherical families; "
                          "use the per-horizon KdS flow chart instead")
    if isinstance(source, ExtendedProfile):
        hd = source.horizons or find_horizons(params)
        d = source.delta if delta is None else float(delta)
    else:
        hd = find_horizons(params)
        d = default_delta(hd) if delta is None else float(delta)
    if not d > 0:
        raise ChartError("delta must be > 0")
    radii = dict(hd.radii)
    if isinstance(source, ExtendedProfile):
        radii[0] = source.r0
    hs = [radii[j] for j in sorted(radii)]
    gaps = [b - a for a, b in zip(hs, hs[1:])]
    if gaps and min(gaps) < 6 * d:
        raise ChartError(f"delta = {d!r} too large for horizon gaps {gaps}")
    signs = {j: _sign(prof, radii[j]) for j in sorted(radii)}
    segs = []

    def ratio(lo, hi, s, k):
        segs.append(Segment(lo, hi, s, "ratio", k=k))

    def horizon_blend(j):
        r = radii[j]
        lo, hi = r - d, r + d
        slope = prof.derivs(r, 1)[1]
        # mu < 0 side gets +1/mu, static side gets -1/mu
        k_lo, k_hi = (-1.0, 1.0) if slope < 0 else (1.0, -1.0)
        segs.append(Segment(lo, hi, signs[j], "blend", blend=_make_blend(prof, lo, hi, k_lo, k_hi)))

    keys = sorted(radii)
    first, last = keys[0], keys[-1]
    r_first = radii[first]
    # lower end
    if params.family is Family.DS:
        r_min = 0.0
    elif isinstance(source, ExtendedProfile):
        r_min = r_first - outer_width * d
    elif first == 1:
        r_min = r_first - 2 * d
    else:
        r_min = r_first - outer_width * d
    if r_min < 0:
        raise ChartError("chart would extend to r < 0; reduce delta")
    slope_first = prof.derivs(r_first, 1)[1]
    if params.family is Family.DS or slope_first < 0:
        # mu > 0 below the first horizon: static
        ratio(r_min, r_first - d, 1, -1.0)
    else:
        ratio(r_min, r_first - d, signs[first], 1.0)
    for ja, jb in zip(keys, keys[1:]):
        ra, rb = radii[ja], radii[jb]
        horizon_blend(ja)
        mid = 0.5 * (ra + rb)
        if prof.derivs(mid, 0)[0] > 0:
            ratio(ra + d, rb - d, 1, -1.0)
        else:
            sa, sb = signs[ja], signs[jb]
            k_end = 2.0 * sa * sb - 1.0
            ratio(ra + d, ra + 2 * d, sa, 1.0)
            segs.append(Segment(ra + 2 * d, rb - 2 * d, sa, "kstep", k=1.0, k_hi=k_end))
            ratio(rb - 2 * d, rb - d, sb, 1.0)
    horizon_blend(last)
    r_last = radii[last]
    if prof.derivs(r_last, 1)[1] > 0:
        # mu > 0 beyond the last horizon (Lambda = 0): static out to infinity
        ratio(r_last + d, math.inf, 1, -1.0)
    else:
        ratio(r_last + d, r_last + outer_width * d, signs[last], 1.0)

    bands = []
    if 1 in radii:
        bands.append((r_min, radii[1] + 2 * d))
    if 2 in radii:
        top = r_last + outer_width * d if math.isfinite(segs[-1].hi) else radii[2] + 2 * d
        if 3 in radii:
            top = radii[3] + outer_width * d
        bands.append((radii[2] - 2 * d, top))
    elif params.family is Family.DS:
        bands.append((0.0, radii[3] + outer_width * d))
    chart = ChartData(source, hd, segs, d, signs, bands)
    for j in keys:
        cj = chart.c(radii[j])[1][0]
        if not cj < 0:
            raise ChartError(f"c_{j}(r_{j}) = {cj!r} is not negative")
    rep = chart.causal_report()
    if not rep["required_ok"]:
        raise ChartError("dt_* is not timelike throughout the required bands")
    return chart
