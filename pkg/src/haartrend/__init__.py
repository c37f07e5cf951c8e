"""Trend estimation for time series with Haar-type wavelets on arbitrary sample sizes."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .grid import SampleGrid, finest_scale, index_set, interval_count, scaling_values, wavelet_values
from .plm import build_design, fit_plm, ols, project_identifiable
from .shrinkage import (
    ThresholdPolicy,
    apply_policy,
    critical_scale,
    estimate_trend,
    hard,
    sn_diagnostic,
    soft,
    threshold_value,
)
from .transform import CoefficientSet, analyze, energy_gap, synthesize

__all__ = [
    "SampleGrid",
    "finest_scale",
    "index_set",
    "interval_count",
    "scaling_values",
    "wavelet_values",
    "CoefficientSet",
    "analyze",
    "synthesize",
    "energy_gap",
    "ThresholdPolicy",
    "apply_policy",
    "critical_scale",
    "estimate_trend",
    "hard",
    "soft",
    "sn_diagnostic",
    "threshold_value",
    "build_design",
    "fit_plm",
    "ols",
    "project_identifiable",
]
