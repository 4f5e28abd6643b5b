"""Monte Carlo and analytics toolkit for surface-code repeater links."""

__version__ = "0.1.0"

from .lattice import BOUNDARY, BondId, LinkGeometry, VertexId, bond_of_bell_pair, build_geometry, path_distance
from .noise import BellNoise, ErrorPattern, component_flip_probability, error_class_distribution, fidelity_of
from .decoder import DecodeOutcome, LatticeMatcher, decode, oracle_decode
from .montecarlo import FailureEstimate, SweepResult, TrialPlan, estimate_p_link, run_sweep, threshold_estimate

__all__ = [
    "BOUNDARY", "BondId", "LinkGeometry", "VertexId", "bond_of_bell_pair", "build_geometry", "path_distance",
    "BellNoise", "ErrorPattern", "component_flip_probability", "error_class_distribution", "fidelity_of",
    "DecodeOutcome", "LatticeMatcher", "decode", "oracle_decode",
    "FailureEstimate", "SweepResult", "TrialPlan", "estimate_p_link", "run_sweep", "threshold_estimate",
]
