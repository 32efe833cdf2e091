"""Background parameters and the radial metric function.

Geometric units throughout. For the charged family

    mu(r) = 1 - 2 M / r + Q^2 / r^2 - lambda r^2,    lambda = Lambda / 3,

and for the rotating family

    mu~(r) = (r^2 + a^2)(1 - lambda r^2) - 2 M r.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


class Family(str, enum.Enum):
    RNDS = "RNdS"
    KDS = "KdS"
    RN_FLAT = "RN_flat"
    DS = "dS"


@dataclass(frozen=True)
class SpacetimeParams:
    """Immutable description of the background.

    ``charge`` is only meaningful for RNdS / RN_flat and ``spin`` only for KdS.
    Schwarzschild-de Sitter is RNdS with ``charge=0``.
    """

    family: Family
    lam: float = 0.0
    mass: float = 1.0
    charge: float = 0.0
    spin: float = 0.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        for name in ("lam", "mass", "charge", "spin"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.lam < 0:
            raise DomainError("cosmological constant must be >= 0")
        if self.charge < 0:
            raise DomainError("charge must be >= 0")
        if fam is Family.DS:
            if self.lam <= 0:
                raise DomainError("de Sitter family needs Lambda > 0")
            if self.mass != 0 or self.charge != 0 or self.spin != 0:
                raise DomainError("de Sitter family has M = Q = a = 0")
            return
        if self.mass <= 0:
            raise DomainError("mass must be > 0")
        if fam is Family.RN_FLAT:
            if self.lam != 0:
                raise DomainError("RN_flat family has Lambda = 0")
            if self.spin != 0:
                raise DomainError("RN_flat family has no spin")
        elif fam is Family.RNDS:
            if self.lam <= 0:
                raise DomainError("RNdS family needs Lambda > 0")
            if self.spin != 0:
                raise DomainError("RNdS family has no spin")
        elif fam is Family.KDS:
            if self.lam <= 0:
                raise DomainError("KdS family needs Lambda > 0")
            if self.charge != 0:
                raise DomainError("KdS family has no charge")

    # convenience constructors -------------------------------------------------
    @classmethod
    def rnds(cls, lam, mass=1.0, charge=0.0):
        return cls(Family.RNDS, lam=lam, mass=mass, charge=charge)

    @classmethod
    def kds(cls, lam, mass=1.0, spin=0.0):
        return cls(Family.KDS, lam=lam, mass=mass, spin=spin)

    @classmethod
    def rn_flat(cls, mass=1.0, charge=0.0):
        return cls(Family.RN_FLAT, lam=0.0, mass=mass, charge=charge)

    @classmethod
    def de_sitter(cls, lam):
        return cls(Family.DS, lam=lam, mass=0.0)

    @property
    def lambda3(self) -> float:
        """lambda = Lambda / 3."""
        return self.lam / 3.0

    @property
    def gamma(self) -> float:
        """gamma = Lambda a^2 / 3 (zero outside KdS)."""
        return self.lam * self.spin**2 / 3.0

    @property
    def is_kerr(self) -> bool:
        return self.family is Family.KDS

    def as_dict(self) -> dict:
        return {
            "family": self.family.value,
            "lam": self.lam,
            "mass": self.mass,
            "charge": self.charge,
            "spin": self.spin,
        }


def _check_r(r):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("radius must be > 0")
    return arr


def mu_derivs(params: SpacetimeParams, r, order: int = 2):
    """Return ``[mu, mu', ..., mu^(order)]`` at ``r`` (scalar or array).

    Derivatives are exact; ``order`` may be at most 4.
    """
    if order > 4:
        raise ValueError("order <= 4 supported")
    arr = _check_r(r)
    lam = params.lambda3
    m = params.mass
    out = []
    if params.is_kerr:
        a2 = params.spin**2
        # mu~ = -lam r^4 + (1 - lam a^2) r^2 - 2 M r + a^2
        c2 = 1.0 - lam * a2
        vals = [
            -lam * arr**4 + c2 * arr**2 - 2.0 * m * arr + a2,
            -4.0 * lam * arr**3 + 2.0 * c2 * arr - 2.0 * m,
            -12.0 * lam * arr**2 + 2.0 * c2,
            -24.0 * lam * arr,
            -24.0 * lam * np.ones_like(arr),
        ]
        out = vals[: order + 1]
    else:
        q2 = params.charge**2
        inv = 1.0 / arr
        for k in range(order + 1):
            # d^k r^-1 = (-1)^k k! r^-(k+1);  d^k r^-2 = (-1)^k (k+1)! r^-(k+2)
            sgn = -1.0 if k % 2 else 1.0
            term = (
                -2.0 * m * sgn * math.factorial(k) * inv ** (k + 1)
                + q2 * sgn * math.factorial(k + 1) * inv ** (k + 2)
            )
            if k == 0:
                term = term + 1.0 - lam * arr**2
            elif k == 1:
                term = term - 2.0 * lam * arr
            elif k == 2:
                term = term - 2.0 * lam
            out.append(term)
    if np.ndim(r) == 0:
        return [float(v) for v in out]
    return out


def mu(params: SpacetimeParams, r):
    """Radial metric function (mu for RNdS/RN/dS, mu~ for KdS)."""
    return mu_derivs(params, r, 0)[0]


def dmu(params: SpacetimeParams, r):
    return mu_derivs(params, r, 1)[1]


def d2mu(params: SpacetimeParams, r):
    return mu_derivs(params, r, 2)[2]


def delta_poly(params: SpacetimeParams) -> np.ndarray:
    """Coefficients (highest power first) of a polynomial with the sign of mu on r > 0.

    RNdS: r^2 mu = -lam r^4 + r^2 - 2 M r + Q^2;  KdS: mu~ itself.
    """
    lam = params.lambda3
    m = params.mass
    if params.is_kerr:
        a2 = params.spin**2
        return np.array([-lam, 0.0, 1.0 - lam * a2, -2.0 * m, a2])
    return np.array([-lam, 0.0, 1.0, -2.0 * m, params.charge**2])
