"""Solver configuration and the estimator-mode matrix."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..games import ConfigurationError
from ..policy import SamplingPolicySpec
from ..values import NOISE_REDRAW

ALGORITHMS = ("cfr", "os_mccfr", "escher", "dream_oracle", "ablation1", "ablation2")
VALUE_SOURCES = ("oracle", "noisy", "learned", "terminal")
AVERAGING = ("exact", "sampled")


@dataclass(frozen=True)
class EstimatorMode:
    use_bootstrap_baseline: bool
    use_reach_weighting: bool
    value_source: str

    def __post_init__(self):
        if self.value_source not in VALUE_SOURCES:
            raise ConfigurationError(f"value_source: expected one of {VALUE_SOURCES}, got {self.value_source!r}")


# (bootstrapped baseline, reach weighting, value source)
DEFAULT_MODES = {
    "escher": EstimatorMode(False, False, "oracle"),
    "ablation1": EstimatorMode(True, False, "oracle"),
    "ablation2": EstimatorMode(False, True, "oracle"),
    "dream_oracle": EstimatorMode(True, True, "oracle"),
    "os_mccfr": EstimatorMode(False, True, "terminal"),
}


@dataclass(frozen=True)
class LearnedValueSpec:
    """Monte-Carlo history-value refresh: K rollouts under the current policy
    mixed with ``exploration_mix`` times uniform."""

    rollouts: int = 1000
    exploration_mix: float = 0.01

    def __post_init__(self):
        if self.rollouts < 1:
            raise ConfigurationError(f"learned_value.rollouts must be >= 1, got {self.rollouts}")
        if not 0.0 <= self.exploration_mix <= 1.0:
            raise ConfigurationError(f"learned_value.exploration_mix must be in [0, 1], got {self.exploration_mix}")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "escher"
    iterations: int = 1000
    trajectories_per_update: int = 1
    sampling: SamplingPolicySpec = field(default_factory=SamplingPolicySpec)
    os_exploration_eps: float = 0.6
    seed: int = 0
    averaging: str = "exact"
    oracle_noise: float = 0.0
    noise_redraw: str = "iteration"
    learned_value: LearnedValueSpec | None = None
    # explicit overrides of the algorithm's estimator mode
    use_bootstrap_baseline: bool | None = None
    use_reach_weighting: bool | None = None
    value_source: str | None = None
    track_true_regret: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"algorithm: expected one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        if self.trajectories_per_update < 1:
            raise ConfigurationError(f"trajectories_per_update must be >= 1, got {self.trajectories_per_update}")
        if not 0.0 < self.os_exploration_eps <= 1.0:
            raise ConfigurationError(f"os_exploration_eps must be in (0, 1], got {self.os_exploration_eps}")
        if self.averaging not in AVERAGING:
            raise ConfigurationError(f"averaging: expected one of {AVERAGING}, got {self.averaging!r}")
        if self.oracle_noise < 0:
            raise ConfigurationError(f"oracle_noise must be >= 0, got {self.oracle_noise}")
        if self.noise_redraw not in NOISE_REDRAW:
            raise ConfigurationError(f"noise_redraw: expected one of {NOISE_REDRAW}, got {self.noise_redraw!r}")
        if self.value_source is not None and self.value_source not in VALUE_SOURCES:
            raise ConfigurationError(f"value_source: expected one of {VALUE_SOURCES}, got {self.value_source!r}")
        if self.algorithm == "cfr" and any(
            v is not None for v in (self.use_bootstrap_baseline, self.use_reach_weighting, self.value_source)
        ):
            raise ConfigurationError("estimator flags do not apply to algorithm 'cfr'")

    @property
    def sampled(self) -> bool:
        return self.algorithm != "cfr"

    @property
    def mode(self) -> EstimatorMode | None:
        if not self.sampled:
            return None
        base = DEFAULT_MODES[self.algorithm]
        source = self.value_source or base.value_source
        if self.value_source is None and source == "oracle":
            if self.learned_value is not None:
                source = "learned"
            elif self.oracle_noise > 0:
                source = "noisy"
        return EstimatorMode(
            base.use_bootstrap_baseline if self.use_bootstrap_baseline is None else self.use_bootstrap_baseline,
            base.use_reach_weighting if self.use_reach_weighting is None else self.use_reach_weighting,
            source,
        )

    @property
    def update_sampling(self) -> SamplingPolicySpec:
        """Sampling policy of the update player."""
        if self.algorithm == "os_mccfr":
            return SamplingPolicySpec("epsilon", self.os_exploration_eps)
        return self.sampling

    @property
    def learned(self) -> LearnedValueSpec:
        return self.learned_value or LearnedValueSpec()

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)
