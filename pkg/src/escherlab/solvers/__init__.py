"""Solver engines, estimators and configuration."""

from .config import ALGORITHMS, AVERAGING, DEFAULT_MODES, VALUE_SOURCES, EstimatorMode, LearnedValueSpec, SolverConfig
from .engine import IterationReport, RunResult, Solver, run_solver
from .estimators import (
    ZeroBaseline,
    baseline_corrected_estimate,
    baseline_recursion,
    escher_regret_estimate,
    os_mccfr_regret_estimate,
)
from .learned import LearnedValues, batch_rollouts, learned_value_refresh
from .sampling import Trajectory, build_sampling_policy, sample_trajectory

__all__ = [
    "ALGORITHMS", "AVERAGING", "DEFAULT_MODES", "VALUE_SOURCES", "EstimatorMode", "LearnedValueSpec",
    "SolverConfig", "IterationReport", "RunResult", "Solver", "run_solver", "ZeroBaseline",
    "baseline_corrected_estimate", "baseline_recursion", "escher_regret_estimate", "os_mccfr_regret_estimate",
    "LearnedValues", "batch_rollouts", "learned_value_refresh", "Trajectory", "build_sampling_policy",
    "sample_trajectory",
]
