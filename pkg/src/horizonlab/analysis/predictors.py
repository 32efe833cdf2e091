"""Regularity predictors and near-extremal parameter design."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import HorizonlabError
from ..spacetime.horizons import horizon_data
from ..spacetime.params import SpacetimeParams


def regularity_predictors(horizons, alpha: float, k: int = 0) -> dict:
    """Regularity report at the Cauchy horizon for decay rate ``alpha``.

    Proved quantities: s(alpha) = 1/2 + alpha beta_1 and the form-degree shift
    s - k. Diagnostics: the H^1 criterion 2 kappa_2 > kappa_1 and the
    expected blow-up exponent kappa_2/kappa_1 - 1. The expected regularity
    cap 1/2 + min(kappa_2, kappa_3)/kappa_1 is labelled as a conjecture.
    """
    if 1 not in horizons.radii:
        raise HorizonlabError("regularity predictors need a Cauchy horizon r_1")
    b1 = horizons.beta[1]
    k1 = horizons.kappa[1]
    k2 = horizons.kappa.get(2)
    k3 = horizons.kappa.get(3)
    s = 0.5 + alpha * b1
    out = {
        "alpha": float(alpha),
        "beta_1": float(b1),
        "kappa": {str(j): float(v) for j, v in sorted(horizons.kappa.items())},
        "s": float(s),
        "k": int(k),
        "s_shifted": float(s - k),
        "status": "theorem",
    }
    if k2 is not None:
        out["h1_criterion"] = {"value": bool(2.0 * k2 > k1), "two_kappa2": float(2.0 * k2), "kappa1": float(k1),
                               "status": "conjecture"}
        out["blowup_exponent"] = {"value": float(k2 / k1 - 1.0), "status": "conjecture"}
        kmin = k2 if k3 is None else min(k2, k3)
        out["regularity_cap"] = {"value": float(0.5 + kmin / k1), "status": "conjecture"}
    if horizons.trapping is not None:
        g0 = horizons.trapping.gamma0
        out["gap_sanity"] = {"gamma0": float(g0), "alpha_below_gamma0": bool(alpha < g0), "status": "report"}
    return out


@dataclass
class NearExtremalDesign:
    epsilon: float
    charge: float
    mass: float
    s_value: float
    target_s: float
    seed_epsilon: float
    lambda_window: tuple
    iterations: int

    def as_dict(self):
        d = asdict(self)
        d["lambda_window"] = list(self.lambda_window)
        return d


def _s_value(mass, eps, lam=0.0):
    q = mass * (1.0 - eps)
    p = SpacetimeParams.rn_flat(mass, q) if lam == 0 else SpacetimeParams.rnds(lam, mass, q)
    hd = horizon_data(p)
    return 0.5 + hd.trapping.gamma0 * hd.beta[1]


def near_extremal_design(target_s: float, mass: float = 1.0, tol: float = 1e-12, max_iter: int = 200):
    """Largest epsilon with 1/2 + gamma_0 beta_1 > target_s at Q = M(1 - epsilon), Lambda = 0.

    The product diverges like 1/(16 sqrt(epsilon)), so the admissible set is
    an interval (0, epsilon_*]; bisection (relative tolerance ``tol``) starts
    from the asymptotic seed and returns a point on the admissible side.
    The Lambda window is the range [0, Lambda_max) over which the same
    charge keeps the inequality with a non-degenerate RNdS horizon triple.
    """
    if not target_s > 0.5:
        raise ValueError("target_s must exceed 1/2")
    seed = (1.0 / (16.0 * (target_s - 0.5))) ** 2
    f = lambda e: _s_value(mass, e) - target_s  # noqa: E731
    lo = min(seed, 0.5)
    while f(lo) <= 0:
        lo *= 0.5
    hi = min(max(2.0 * seed, lo * 2.0), 0.999)
    while f(hi) > 0 and hi < 0.999:
        hi = min(2.0 * hi, 0.999)
    if f(hi) > 0:
        lo = hi
    it = 0
    while hi - lo > tol * hi and it < max_iter:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    eps = lo
    q = mass * (1.0 - eps)
    # Lambda window at this charge
    def ok(lam):
        try:
            return _s_value(mass, eps, lam) > target_s
        except HorizonlabError:
            return False
    lam_hi = 1.0 / (9.0 * mass * mass)
    lam_lo = 0.0
    if ok(lam_hi * 0.5 ** 40):
        lam_lo = lam_hi * 0.5**40
        for _ in range(60):
            mid = 0.5 * (lam_lo + lam_hi)
            if ok(mid):
                lam_lo = mid
            else:
                lam_hi = mid
    window = (0.0, float(lam_lo))
    return NearExtremalDesign(float(eps), float(q), float(mass), float(_s_value(mass, eps)), float(target_s),
                              float(seed), window, it)
