"""Hamilton flows on the b-cotangent bundle: charts, integration, structure."""

from .charts import EFChart, StarChart, StaticChart, ef_chart
from .integrate import Trajectory, integrate
from .phase import BPhasePoint, CompactifiedPoint, KdSChart, dual_metric
from .structure import classify_component, linearize_radial, linearize_trapping, measure_beta

__all__ = [
    "EFChart",
    "StarChart",
    "StaticChart",
    "ef_chart",
    "Trajectory",
    "integrate",
    "BPhasePoint",
    "CompactifiedPoint",
    "KdSChart",
    "dual_metric",
    "classify_component",
    "linearize_radial",
    "linearize_trapping",
    "measure_beta",
]
