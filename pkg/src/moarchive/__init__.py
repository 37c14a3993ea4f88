"""Bounded multi-objective archivers, quality indicators and property checkers."""
from .archivers import Archiver, ArchiverConfig, run
from .core import (
    Batch,
    Trajectory,
    UsageError,
    better,
    dominates,
    ideal_point,
    minimal_set,
    nadir_point,
    weakly_dominates,
)
from .indicators import IndicatorSpec, epsilon_additive, hv_contribution, hypervolume, igd_plus, r2
from .properties import check_anytime, check_lemmas, is_optimal_approximation, run_limit_experiment
from .sequences import FrontSpec, OrderPolicy, order_and_batch, read_sequence, sample_ground_set, scenario, write_sequence

__all__ = [
    "Archiver", "ArchiverConfig", "Batch", "FrontSpec", "IndicatorSpec", "OrderPolicy", "Trajectory",
    "UsageError", "better", "check_anytime", "check_lemmas", "dominates", "epsilon_additive",
    "hv_contribution", "hypervolume", "ideal_point", "igd_plus", "is_optimal_approximation",
    "minimal_set", "nadir_point", "order_and_batch", "r2", "read_sequence", "run", "run_limit_experiment",
    "sample_ground_set", "scenario", "weakly_dominates", "write_sequence",
]
