"""1+1 reduction of the Klein-Gordon operator for a single (l, m) mode.

With |g|^{1/2} = r^2 sin(theta) (the (t_*, r) block has unit determinant)
the mode u(t_*, r) of a solution of G^{ab} nabla_a nabla_b u + m^2 u = 0
(the physical, non-tachyonic sign for the signature of G) satisfies

    A u_tt + 2 B u_tr + r^-2 (r^2 B)' u_t + r^-2 (r^2 C u_r)' + (l(l+1)/r^2 + m^2) u = 0

with A = G^{t t}, B = G^{t r}, C = G^{r r}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModeOperator:
    """Coefficients of the reduced operator on a radial grid."""

    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    ell: int
    mass2: float

    @property
    def first_t(self):
        """Coefficient of u_t: r^-2 (r^2 B)'."""
        return self.dB + 2.0 * self.B / self.r

    @property
    def first_r(self):
        """Coefficient of u_r: r^-2 (r^2 C)'."""
        return self.dC + 2.0 * self.C / self.r

    @property
    def potential(self):
        return self.ell * (self.ell + 1) / self.r**2 + self.mass2

    def speeds(self):
        """Characteristic speeds dr/dt = (B -+ 1) / A."""
        return (self.B - 1.0) / self.A, (self.B + 1.0) / self.A

    def apply(self, u, u_t, u_tt, u_r, u_rr, u_tr):
        """Residual of the operator on given derivative arrays."""
        return (
            self.A * u_tt
            + 2.0 * self.B * u_tr
            + self.first_t * u_t
            + self.C * u_rr
            + self.first_r * u_r
            + self.potential * u
        )


def mode_reduce(charts, ell: int, mass2: float, r) -> ModeOperator:
    """Reduced operator for degree ``ell`` and mass ``mass2`` on radii ``r``.

    ``charts`` needs ``components_array(r) -> (A, B, C, A', B', C')``.
    """
    if ell < 0 or int(ell) != ell:
        raise ValueError("ell must be a non-negative integer")
    if mass2 < 0:
        raise ValueError("mass2 must be >= 0")
    r = np.asarray(r, dtype=float)
    A, B, C, _, dB, dC = charts.components_array(r)
    return ModeOperator(r, A, B, C, dB, dC, int(ell), float(mass2))
