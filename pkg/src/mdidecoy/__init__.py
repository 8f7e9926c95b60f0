"""Decoy-state MDI-QKD key-rate simulation with phase-randomized weak coherent sources."""

from .decoy import BoundEstimates, estimate_bounds
from .keyrate import PROTOCOLS, ProtocolParams, RateReport, evaluate_rates
from .optics import ChannelParams, DetectorParams, GainTable, compute_gain_table, yield_table
from .optimize import SweepConfig, optimize_point, sweep
from .source import BasisIntensities, SourceSet, poisson_distribution

__version__ = "0.1.0"

__all__ = [
    "BasisIntensities",
    "BoundEstimates",
    "ChannelParams",
    "DetectorParams",
    "GainTable",
    "PROTOCOLS",
    "ProtocolParams",
    "RateReport",
    "SourceSet",
    "SweepConfig",
    "compute_gain_table",
    "estimate_bounds",
    "evaluate_rates",
    "optimize_point",
    "poisson_distribution",
    "sweep",
    "yield_table",
]
