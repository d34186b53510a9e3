"""Budget-feasible online procurement mechanisms with value predictions.

Submodules: ``valuations``, ``instances``, ``offline``, ``mechanisms`` (monotone
case), ``nonmono`` (two-disjoint-solution variants), ``bounds``, ``audit``,
``lowerbound``, ``plotting`` and ``cli``.
"""

from .instances import (
    ArrivalOrder,
    AugmentedInstance,
    GeneratorConfig,
    Instance,
    attach_prediction,
    generate_instance,
    sample_arrival,
)
from .mechanisms import CoinTranscript, MechanismOutcome, MechParams
from .offline import Solution, brute_force_opt, greedy_knapsack_monotone, solve_sample_nonmonotone
from .registry import MECHANISMS
from .valuations import Additive, Coverage, GraphCut, LookupTable

__version__ = "0.1.0"

__all__ = [
    "Additive", "ArrivalOrder", "AugmentedInstance", "CoinTranscript", "Coverage",
    "GeneratorConfig", "GraphCut", "Instance", "LookupTable", "MECHANISMS", "MechParams",
    "MechanismOutcome", "Solution", "attach_prediction", "brute_force_opt",
    "generate_instance", "greedy_knapsack_monotone", "sample_arrival",
    "solve_sample_nonmonotone",
]
