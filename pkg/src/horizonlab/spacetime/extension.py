"""Modified radial profile mu_* beyond the Cauchy horizon.

For r >= b = r_1 - 2 delta the profile is mu itself. Below b it is the
degree-4 Taylor polynomial of mu at b plus a correction

    a5 (r-b)^5 + a6 (r-b)^6 + a7 (r-b)^7,

which keeps the match C^4 at b. The three coefficients are fixed by
P(r0) = 0, P'(r0) = p0 and P''(r0) = 0, so that near r0 the profile is
close to linear and stays negative below r0. The slope p0 is scanned
until the sampled sign conditions hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import ExtensionError
from .horizons import HorizonData, default_delta, find_horizons
from .params import SpacetimeParams, mu_derivs

SLOPE_FACTORS = (1.0, 0.5, 2.0, 0.25, 4.0, 0.1, 10.0, 20.0, 50.0, 100.0)
N_CHECK = 2000


@dataclass(frozen=True)
class ExtendedProfile:
    """mu_* on (0, inf) with a single simple zero at ``r0`` below r_1."""

    base: SpacetimeParams
    r0: float
    delta: float
    rPstar: float
    b: float
    taylor: tuple
    coeffs: tuple
    slope: float
    horizons: HorizonData = field(repr=False, default=None)

    def derivs(self, r, order: int = 2):
        """``[mu_*, mu_*', ..., mu_*^(order)]`` (order <= 4)."""
        arr = np.asarray(r, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = [np.empty_like(arr) for _ in range(order + 1)]
        hi = arr >= self.b
        if np.any(hi):
            vals = mu_derivs(self.base, arr[hi], order)
            for k in range(order + 1):
                out[k][hi] = vals[k]
        lo = ~hi
        if np.any(lo):
            x = arr[lo] - self.b
            # full polynomial coefficients in powers of x, degree 7
            poly = [self.taylor[k] / math.factorial(k) for k in range(5)] + list(self.coeffs)
            p = np.polynomial.Polynomial(poly)
            for k in range(order + 1):
                out[k][lo] = p.deriv(k)(x) if k else p(x)
        if scalar:
            return [float(v[0]) for v in out]
        return out

    def mu_star(self, r):
        return self.derivs(r, 0)[0]

    def dmu_star(self, r):
        return self.derivs(r, 1)[1]

    def __call__(self, r):
        return self.mu_star(r)

    def as_dict(self) -> dict:
        return {
            "params": self.base.as_dict(),
            "r0": self.r0,
            "delta": self.delta,
            "rPstar": self.rPstar,
            "b": self.b,
            "slope_r0": self.slope,
            "coeffs": list(self.coeffs),
        }


def _correction(taylor, b, r0, p0):
    x0 = r0 - b
    t = [sum(taylor[k] * x0 ** (k - j) / math.factorial(k - j) for k in range(j, 5)) for j in range(3)]
    m = np.array(
        [
            [x0**5, x0**6, x0**7],
            [5 * x0**4, 6 * x0**5, 7 * x0**6],
            [20 * x0**3, 30 * x0**4, 42 * x0**5],
        ]
    )
    return tuple(float(c) for c in np.linalg.solve(m, [-t[0], p0 - t[1], -t[2]]))


def _sign_changes(v):
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[:-1] != s[1:]))


def _check(prof: ExtendedProfile, r1: float):
    """Return None if the sampled conditions hold, else a reason string."""
    r0, d = prof.r0, prof.delta
    inner = np.linspace(r0, r1, N_CHECK + 2)[1:-1]
    if not np.all(prof.mu_star(inner) > 0):
        return "mu_* not positive on (r0, r1)"
    below = np.linspace(max(r0 - 4 * d, 0.05 * r0), r0, N_CHECK + 1)[:-1]
    if not np.all(prof.mu_star(below) < 0):
        return "mu_* not negative below r0"
    v, dv = prof.derivs(inner, 1)
    g = dv / inner**2 - 2 * v / inner**3
    if _sign_changes(g) != 1:
        return f"(r^-2 mu_*)' has {_sign_changes(g)} sign changes on (r0, r1)"
    return None


def extend_mu(params: SpacetimeParams, r0: float | None = None, delta: float | None = None,
              horizons: HorizonData | None = None) -> ExtendedProfile:
    """Build mu_* with one simple zero at ``r0`` (default r_1 / 2).

    Raises :class:`ExtensionError` when ``r0`` is not in (0, r_1 - 3 delta)
    or no scanned slope satisfies the sign conditions.
    """
    hd = horizons if horizons is not None else find_horizons(params)
    r1 = hd.r1
    if r1 is None:
        raise ExtensionError(f"{params.family.value} has no Cauchy horizon to extend beyond")
    d = default_delta(hd) if delta is None else float(delta)
    if not d > 0:
        raise ExtensionError("delta must be > 0")
    r0 = 0.5 * r1 if r0 is None else float(r0)
    if not 0 < r0 < r1 - 3 * d:
        raise ExtensionError(f"need 0 < r0 < r1 - 3 delta = {r1 - 3 * d!r}, got r0 = {r0!r}")
    b = r1 - 2 * d
    taylor = tuple(mu_derivs(params, b, 4))
    k1 = abs(mu_derivs(params, r1, 1)[1])
    reasons = []
    for fac in SLOPE_FACTORS:
        p0 = fac * k1
        coeffs = _correction(taylor, b, r0, p0)
        prof = ExtendedProfile(params, r0, d, float("nan"), b, taylor, coeffs, p0, hd)
        why = _check(prof, r1)
        if why is None:
            def g(r):
                v, dv = prof.derivs(r, 1)
                return dv / r**2 - 2 * v / r**3

            grid = np.linspace(r0, r1, N_CHECK + 2)[1:-1]
            gv = g(grid)
            i = int(np.nonzero(np.sign(gv[:-1]) != np.sign(gv[1:]))[0][0])
            rp = brentq(g, grid[i], grid[i + 1], xtol=1e-14)
            return ExtendedProfile(params, r0, d, float(rp), b, taylor, coeffs, p0, hd)
        reasons.append(f"slope {p0:.3g}: {why}")
    raise ExtensionError("no admissible extension; " + "; ".join(reasons))
