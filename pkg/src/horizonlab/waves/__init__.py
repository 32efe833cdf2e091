"""Mode evolution: exterior t_* engine and interior double-null engine."""

from .exterior import ExteriorConfig, ModeField, TimeSeries, exterior_evolve
from .interior import HorizonData1D, InteriorConfig, InteriorResult, Tortoise, interior_evolve
from .operator import ModeOperator, mode_reduce
from .probe import probe_ray, probe_slice, probe_snapshots

__all__ = [
    "ExteriorConfig",
    "ModeField",
    "TimeSeries",
    "exterior_evolve",
    "HorizonData1D",
    "InteriorConfig",
    "InteriorResult",
    "Tortoise",
    "interior_evolve",
    "ModeOperator",
    "mode_reduce",
    "probe_ray",
    "probe_slice",
    "probe_snapshots",
]
