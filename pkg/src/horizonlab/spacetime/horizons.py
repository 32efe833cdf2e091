"""Horizon radii, surface gravities, thresholds and photon-sphere data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from ..errors import DegenerateRoots, DomainError, NoBracket, NoPhotonSphere
from .params import Family, SpacetimeParams, delta_poly, mu, mu_derivs

ROOT_TOL = 1e-12
DERIV_FLOOR = 1e-8
MIN_SEPARATION = 1e-8
N_SAMPLES = 20000


@dataclass(frozen=True)
class TrappingData:
    r_p: float
    nu_min: float
    gamma0: float

    def as_dict(self):
        return {"r_P": self.r_p, "nu_min": self.nu_min, "gamma0": self.gamma0}


@dataclass(frozen=True)
class HorizonData:
    """Horizon radii keyed by index (0 artificial, 1 Cauchy, 2 event, 3 cosmological).

    Missing horizons (e.g. r_1 for Schwarzschild-de Sitter) are absent from
    ``radii``. ``kappa`` and ``beta`` are filled by :func:`thresholds`.
    """

    params: SpacetimeParams
    radii: dict = field(default_factory=dict)
    kappa: dict = field(default_factory=dict)
    beta: dict = field(default_factory=dict)
    trapping: TrappingData | None = None

    @property
    def roots(self) -> list:
        return [self.radii[j] for j in sorted(self.radii) if j > 0]

    def r(self, j: int) -> float:
        try:
            return self.radii[j]
        except KeyError:
            raise DomainError(f"horizon r_{j} not present for {self.params.family.value}") from None

    @property
    def r1(self):
        return self.radii.get(1)

    @property
    def r2(self):
        return self.radii.get(2)

    @property
    def r3(self):
        return self.radii.get(3)

    def as_dict(self) -> dict:
        out = {"params": self.params.as_dict()}
        for j in range(4):
            out[f"r{j}"] = self.radii.get(j)
            out[f"kappa{j}"] = self.kappa.get(j)
            out[f"beta{j}"] = self.beta.get(j)
        if self.trapping is not None:
            out.update(self.trapping.as_dict())
        return out


def _expected_positive_roots(params: SpacetimeParams) -> int:
    if params.family is Family.DS:
        return 1
    if params.family is Family.RN_FLAT:
        return 2 if params.charge > 0 else 1
    small = params.spin if params.is_kerr else params.charge
    return 3 if small != 0 else 2


def _sample_grid(params: SpacetimeParams, n: int) -> np.ndarray:
    coef = delta_poly(params)
    lead = abs(coef[0])
    hi = 1.0 + np.max(np.abs(coef[1:])) / lead
    c0 = abs(coef[-1])
    if c0 > 0:
        # Cauchy lower bound on |root| for a polynomial with nonzero constant term
        lo = c0 / (c0 + np.max(np.abs(coef[:-1])))
    else:
        lo = 1e-6 * min(1.0, params.mass)
    return np.geomspace(0.5 * lo, 1.01 * hi, n)


def _sign_changes(vals: np.ndarray) -> np.ndarray:
    s = np.sign(vals)
    return np.nonzero(s[:-1] * s[1:] < 0)[0]


def _bracket_roots(params, n):
    rs = _sample_grid(params, n)
    poly = np.poly1d(delta_poly(params))
    vals = poly(rs)
    idx = _sign_changes(vals)
    return rs, vals, poly, [(rs[i], rs[i + 1]) for i in idx]


def _touching_roots(params, rs, poly, scale):
    """Critical points of the sign polynomial where it (nearly) vanishes."""
    dpoly = poly.deriv()
    dv = dpoly(rs)
    hits = []
    for i in _sign_changes(dv):
        rc = brentq(dpoly, rs[i], rs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if abs(poly(rc)) < 1e-10 * scale:
            hits.append(rc)
    return hits


def check_nondegenerate(params: SpacetimeParams, n_samples: int = N_SAMPLES):
    """Return ``(ok, diagnostic)``; ``ok`` iff the horizons are simple and complete.

    For Q = 0 (RNdS) or a = 0 (KdS) the answer is exactly ``9 Lambda M^2 < 1``.
    """
    fam = params.family
    if fam is Family.DS:
        return True, {"reason": "de Sitter: single cosmological horizon"}
    if fam is Family.RN_FLAT:
        d = params.mass**2 - params.charge**2
        ok = d > 0 if params.charge > 0 else True
        return ok, {"reason": "M^2 - Q^2 = %r" % d, "discriminant": d}
    small = params.spin if params.is_kerr else params.charge
    if small == 0:
        val = 9.0 * params.lam * params.mass**2
        ok = val < 1.0
        return ok, {"reason": f"9 Lambda M^2 = {val!r} {'<' if ok else '>='} 1", "value": val}
    rs, vals, poly, brackets = _bracket_roots(params, n_samples)
    diag = {"sign_changes": len(brackets), "brackets": [(float(a), float(b)) for a, b in brackets]}
    if len(brackets) != 3:
        diag["reason"] = f"expected 3 sign changes of mu on r > 0, found {len(brackets)}"
        return False, diag
    scale = float(np.max(np.abs(vals)))
    if _touching_roots(params, rs, poly, scale):
        diag["reason"] = "double root (touching zero) detected"
        return False, diag
    try:
        find_horizons(params, n_samples=n_samples)
    except (DegenerateRoots, NoBracket) as exc:
        diag["reason"] = str(exc)
        return False, diag
    diag["reason"] = "3 simple positive roots"
    return True, diag


def _polish(params, poly, a, b, tol):
    r = brentq(poly, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    dpoly = poly.deriv()
    for _ in range(3):
        d = dpoly(r)
        if d == 0:
            break
        step = poly(r) / d
        rn = r - step
        if not (a <= rn <= b):
            break
        r = rn
        if abs(step) <= 4 * np.finfo(float).eps * abs(r):
            break
    scale = max(1.0, abs(mu(params, a)), abs(mu(params, b)))
    if abs(mu(params, r)) >= tol * scale:
        raise NoBracket(f"root polish did not reach |mu| < {tol}*{scale} at r={r!r}")
    return float(r)


def find_horizons(
    params: SpacetimeParams,
    tol: float = ROOT_TOL,
    n_samples: int = N_SAMPLES,
    min_separation: float = MIN_SEPARATION,
    deriv_floor: float = DERIV_FLOOR,
) -> HorizonData:
    """Bracket the positive zeros of mu by sampling, then polish them.

    Raises :class:`DegenerateRoots` for (near-)double roots and
    :class:`NoBracket` if fewer sign changes than expected are found.
    """
    fam = params.family
    radii = {}
    if fam is Family.RN_FLAT:
        m, q = params.mass, params.charge
        d = m * m - q * q
        if q == 0:
            radii = {2: 2.0 * m}
        else:
            if d <= 0 or math.sqrt(d) < 0.5 * min_separation:
                raise DegenerateRoots(f"extremal or over-extremal RN: M^2 - Q^2 = {d!r}")
            s = math.sqrt(d)
            # r_1 via Q^2 / r_2 avoids cancellation for small Q
            r2 = m + s
            radii = {1: q * q / r2, 2: r2}
    elif fam is Family.DS:
        radii = {3: 1.0 / math.sqrt(params.lambda3)}
    else:
        expected = _expected_positive_roots(params)
        rs, vals, poly, brackets = _bracket_roots(params, n_samples)
        scale = float(np.max(np.abs(vals)))
        touching = _touching_roots(params, rs, poly, scale)
        if touching:
            raise DegenerateRoots(f"double root of mu near r = {touching[0]!r}")
        if len(brackets) < expected:
            raise NoBracket(f"found {len(brackets)} sign changes of mu, expected {expected}")
        if len(brackets) > expected:
            raise NoBracket(f"found {len(brackets)} sign changes of mu, expected {expected}")
        roots = [_polish(params, poly, a, b, tol) for a, b in brackets]
        labels = [1, 2, 3] if expected == 3 else [2, 3]
        radii = dict(zip(labels, roots))
    ordered = [radii[j] for j in sorted(radii)]
    for x, y in zip(ordered, ordered[1:]):
        if y - x < min_separation * max(1.0, y):
            raise DegenerateRoots(f"horizons {x!r} and {y!r} closer than {min_separation}")
    for j, r in radii.items():
        d1 = mu_derivs(params, r, 1)[1]
        if abs(d1) < deriv_floor:
            raise DegenerateRoots(f"|mu'(r_{j})| = {abs(d1)!r} below floor {deriv_floor}")
    return HorizonData(params=params, radii=radii)


def threshold_at(params: SpacetimeParams, r: float, dmu_value: float) -> float:
    """beta at a simple root with slope ``dmu_value`` of the radial function."""
    if abs(dmu_value) < DERIV_FLOOR:
        raise DegenerateRoots(f"|mu'| = {abs(dmu_value)!r} at r = {r!r}: threshold diverges")
    if params.is_kerr:
        return 2.0 * (1.0 + params.gamma) * (r * r + params.spin**2) / abs(dmu_value)
    return 2.0 / abs(dmu_value)


def thresholds(params: SpacetimeParams, horizons: HorizonData, profile=None) -> HorizonData:
    """Fill surface gravities kappa_j and thresholds beta_j = 1 / kappa_j.

    With an extended ``profile`` the artificial horizon r_0 is included,
    using the slope of the modified profile there.
    """
    radii = dict(horizons.radii)
    kappa, beta = {}, {}
    for j, r in radii.items():
        b = threshold_at(params, r, mu_derivs(params, r, 1)[1])
        beta[j] = b
        kappa[j] = 1.0 / b
    if profile is not None:
        r0 = profile.r0
        radii[0] = r0
        b = threshold_at(params, r0, float(profile.dmu_star(r0)))
        beta[0] = b
        kappa[0] = 1.0 / b
    return replace(horizons, radii=radii, kappa=kappa, beta=beta)


def surface_gravity(params: SpacetimeParams, r: float) -> float:
    return 1.0 / threshold_at(params, r, mu_derivs(params, r, 1)[1])


def photon_sphere(params: SpacetimeParams) -> TrappingData:
    """Photon sphere radius, normal expansion rate and essential-gap bound.

    r_P is the larger root of r^2 - 3 M r + 2 Q^2 (independent of Lambda);
    nu_min and gamma0 use the full mu, including the Lambda term.
    """
    if params.is_kerr:
        raise DomainError("closed-form photon sphere is only available for spherical families")
    m, q = params.mass, params.charge
    if m == 0:
        raise NoPhotonSphere("no photon sphere without mass")
    disc = 9.0 * m * m - 8.0 * q * q
    if disc < 0:
        raise NoPhotonSphere(f"9 M^2 - 8 Q^2 = {disc!r} < 0")
    r_p = 0.5 * (3.0 * m + math.sqrt(disc))
    mu_p = mu(params, r_p)
    if mu_p <= 0:
        raise NoPhotonSphere(f"mu(r_P) = {mu_p!r} <= 0: photon sphere outside the static region")
    nu_min = (2.0 / r_p) * math.sqrt((2.0 - 3.0 * m / r_p) / mu_p)
    return TrappingData(r_p=r_p, nu_min=nu_min, gamma0=mu_p * nu_min / 4.0)


def horizon_data(params: SpacetimeParams, with_trapping: bool = True, **kwargs) -> HorizonData:
    """find_horizons + thresholds (+ photon sphere when defined)."""
    hd = thresholds(params, find_horizons(params, **kwargs))
    if with_trapping and not params.is_kerr and params.mass > 0:
        try:
            hd = replace(hd, trapping=photon_sphere(params))
        except NoPhotonSphere:
            pass
    return hd


def default_delta(horizons: HorizonData) -> float:
    """Gluing half-width: 5% of the smallest gap between consecutive radii (0 included)."""
    pts = [0.0] + [horizons.radii[j] for j in sorted(horizons.radii) if j > 0]
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    if len(pts) == 2:
        # a single horizon: use the distance to the origin
        return 0.05 * pts[1]
    return 0.05 * min(gaps)
