"""Decay and power-law fitting, and regularity predictors."""

from .fits import FitResult, fit_decay, fit_late_constant, fit_power, fit_prony
from .predictors import NearExtremalDesign, near_extremal_design, regularity_predictors

__all__ = [
    "FitResult",
    "fit_decay",
    "fit_late_constant",
    "fit_power",
    "fit_prony",
    "regularity_predictors",
    "near_extremal_design",
    "NearExtremalDesign",
]
