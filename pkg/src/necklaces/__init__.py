"""Necklace Markov chains.

Build necklaces from a bead and an indicator vector, compute their exact
stationary and ``t``-step laws two independent ways, compare them with the
wrapped-Gaussian local limit, and evaluate eigenvalue, comparison and Nash
convergence bounds.
"""

__version__ = "0.1.0"

from .bead import (
    BeadAnalysis,
    BeadSpec,
    FirstPassagePMF,
    analyze_bead,
    closure,
    closure_stationary,
    first_passage_pmf,
    fpt_moments,
    simple_bead,
    taboo_sums,
    validate_bead,
)
from .kernels import BACKEND
from .necklace import (
    NecklaceSpec,
    StateId,
    build_necklace,
    evolve,
    indicator_gallery,
    point_mass,
    stationary,
    tv_distance,
)
from .limit import llt_predict, optimal_hold, theta, time_scale, tv_curve, tv_limit

__all__ = [
    "BACKEND",
    "BeadAnalysis",
    "BeadSpec",
    "FirstPassagePMF",
    "NecklaceSpec",
    "StateId",
    "analyze_bead",
    "build_necklace",
    "closure",
    "closure_stationary",
    "evolve",
    "first_passage_pmf",
    "fpt_moments",
    "indicator_gallery",
    "llt_predict",
    "optimal_hold",
    "point_mass",
    "simple_bead",
    "stationary",
    "taboo_sums",
    "theta",
    "time_scale",
    "tv_curve",
    "tv_distance",
    "tv_limit",
    "validate_bead",
]
