"""Parameters, horizons, the extended profile and global star charts."""

from .charts import ChartData, build_charts
from .extension import ExtendedProfile, extend_mu
from .horizons import HorizonData, TrappingData, default_delta, find_horizons, horizon_data, photon_sphere
from .params import Family, SpacetimeParams, mu, mu_derivs

__all__ = [
    "ChartData",
    "build_charts",
    "ExtendedProfile",
    "extend_mu",
    "HorizonData",
    "TrappingData",
    "default_delta",
    "find_horizons",
    "horizon_data",
    "photon_sphere",
    "Family",
    "SpacetimeParams",
    "mu",
    "mu_derivs",
]
