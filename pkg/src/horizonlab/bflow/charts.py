"""Radial charts used by the flow.

Every chart exposes ``abc(r) -> (A, B, C, A', B', C')`` so that for the
b-covector sigma dtau/tau + xi dr + eta domega (dtau/tau = -dt) the dual
metric function is

    G = A sigma^2 - 2 B sigma xi + C xi^2 - r^-2 |eta|^2.
"""

from __future__ import annotations

import numpy as np

from ..errors import ChartCoverageError
from ..spacetime.charts import ChartData, RadialProfile


class FlowChart:
    name = "abstract"
    r_min = 0.0
    r_max = np.inf

    def __init__(self, source):
        self.profile = RadialProfile(source)
        self.params = self.profile.params

    def mu(self, r, order=2):
        return self.profile.derivs(r, order)

    def check(self, r):
        if not (self.r_min <= r <= self.r_max):
            raise ChartCoverageError(f"r = {r!r} outside {self.name} chart [{self.r_min!r}, {self.r_max!r}]")

    def abc(self, r):
        raise NotImplementedError


class EFChart(FlowChart):
    """t_0 = t - F with F' = s_j / mu_*: A = 0, B = s_j, C = -mu_*.

    The resulting G = -2 s_j sigma xi - mu_* xi^2 - r^-2 |eta|^2 is smooth
    at every horizon.
    """

    name = "t0"

    def __init__(self, source, s: int, r_min=0.0, r_max=np.inf):
        super().__init__(source)
        self.s = int(s)
        self.r_min = r_min
        self.r_max = r_max

    def abc(self, r):
        m = self.mu(r, 1)
        return 0.0, float(self.s), -m[0], 0.0, 0.0, -m[1]


class StaticChart(FlowChart):
    """Static coordinates: A = 1/mu, B = 0, C = -mu (singular at horizons)."""

    name = "static"

    def __init__(self, source, r_min=0.0, r_max=np.inf):
        super().__init__(source)
        self.r_min = r_min
        self.r_max = r_max

    def abc(self, r):
        m = self.mu(r, 1)
        return 1.0 / m[0], 0.0, -m[0], -m[1] / m[0] ** 2, 0.0, -m[1]


class StarChart(FlowChart):
    """Global (t_*, r) chart from :func:`horizonlab.spacetime.charts.build_charts`."""

    name = "star"

    def __init__(self, charts: ChartData):
        super().__init__(charts.source)
        self.charts = charts
        self.r_min = charts.r_min
        self.r_max = charts.r_max

    def abc(self, r):
        return self.charts.components(r)


def ef_chart(source, horizons, j: int) -> EFChart:
    """t_0 chart adapted to horizon ``j`` (s_j = -sgn mu_*'(r_j))."""
    prof = RadialProfile(source)
    r = horizons.radii[j]
    s = -1 if prof.derivs(r, 1)[1] > 0 else 1
    return EFChart(source, s)
