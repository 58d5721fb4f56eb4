"""Constant-odds-ratio robustness of classifier predictions."""

from .arc import ARCurve, ScoredOutcome, arc_from_arrays, average_arcs, build_arc
from .errors import (
    InvalidInputError,
    LoadError,
    NoFlipPossibleError,
    NoWitnessError,
    RobustcorError,
    StratificationError,
    ValidationError,
)
from .metrics import (
    ClassDistribution,
    RobustnessScore,
    cor_to_star,
    robustness,
    robustness_cor,
    robustness_cor_many,
    robustness_star,
    robustness_star_many,
    star_to_cor,
    top_two,
)
from .selection import SelectionPolicy, apply_policy, fit_rsd, fit_rsi, robustness_ratio

__version__ = "0.1.0"
