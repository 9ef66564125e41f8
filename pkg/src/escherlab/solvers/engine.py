"""Iteration engines: exact CFR and the sampled estimators sharing one loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..games import Game, GameSpec
from ..metrics import EstimateLog, SeriesRow, iteration_variance
from ..policy import TabularPolicy, average_policy_flat, regret_matching_flat
from ..tree import GameTree, build_tree
from ..values import (
    NoisyOracle,
    OracleValueFn,
    counterfactual_values,
    exploitability,
    infoset_own_reach,
)
from .config import SolverConfig
from .estimators import (
    ZeroBaseline,
    baseline_recursion,
    escher_regret_estimate,
    os_mccfr_regret_estimate,
)
from .learned import LearnedValues, learned_value_refresh
from .sampling import Trajectory, build_sampling_policy, sample_trajectory


@dataclass
class IterationReport:
    iteration: int
    infosets_visited: int
    estimates: int
    iteration_variance: float | None
    touched: tuple[frozenset, frozenset] = (frozenset(), frozenset())
    fallbacks: int = 0
    exploitability: float | None = None


@dataclass
class RunResult:
    series: list[SeriesRow]
    average_policy: np.ndarray
    reports: list[IterationReport] = field(default_factory=list)

    @property
    def final_exploitability(self) -> float | None:
        for row in reversed(self.series):
            if row.exploitability is not None:
                return row.exploitability
        return None


def _as_tree(game) -> GameTree:
    return game if isinstance(game, GameTree) else build_tree(game)


class Solver:
    """One solver run. Owns its regret tables, policy and random streams.

    Three independent generators are derived from the seed: one drives
    trajectory sampling, one the oracle noise and one the learned-value
    rollouts, so switching those features on or off never shifts the
    sampling stream.
    """

    def __init__(self, game: Game | GameSpec | GameTree | str, config: SolverConfig | None = None,
                 keep_reports: bool = False, log_rate: float = 1.0):
        self.tree = _as_tree(game)
        self.config = config or SolverConfig()
        self.mode = self.config.mode
        seed = self.config.seed
        self.rng = np.random.default_rng(seed)
        self._noise_seed = [seed, 1]
        self._learn_rng = np.random.default_rng([seed, 2])
        n = self.tree.num_slots
        self.regrets = np.zeros(n)
        self.avg_weight = np.zeros(n)
        self.policy = self.tree.uniform_policy()
        self.oracle = OracleValueFn(self.tree, self.policy)
        self.noisy = None
        if self.mode is not None and self.mode.value_source == "noisy":
            self.noisy = NoisyOracle(self.oracle, self.config.oracle_noise, seed=self._noise_seed,
                                     redraw=self.config.noise_redraw)
        self.learned: LearnedValues | None = None
        self.log = EstimateLog()
        # estimate vectors are kept with probability log_rate, drawn from a
        # dedicated stream so logging never perturbs the solver
        self.log_rate = log_rate
        self._log_rng = np.random.default_rng([seed, 3])
        self.t = 0
        self.infosets_visited = 0
        self.true_regret = np.zeros(n) if self.config.track_true_regret else None
        self.keep_reports = keep_reports
        self.reports: list[IterationReport] = []

    # ---- value sources -------------------------------------------------
    def _set_policy(self, policy: np.ndarray) -> None:
        self.oracle.set_policy(policy)

    def _values(self):
        src = self.mode.value_source
        if src == "oracle":
            return self.oracle
        if src == "noisy":
            return self.noisy
        if src == "learned":
            return self.learned
        return ZeroBaseline(self.tree)

    def _refresh_learned(self) -> None:
        spec = self.config.learned
        self.learned = learned_value_refresh(
            self.tree, self.policy, spec.rollouts, spec.exploration_mix, self._learn_rng, self.oracle
        )

    # ---- estimators ----------------------------------------------------
    def estimates_for(self, traj: Trajectory, i: int) -> list[tuple[int, np.ndarray]]:
        """(infoset, regret-estimate vector) for every player-i step on ``traj``."""
        mode = self.mode
        tree = self.tree
        steps = traj.steps_of(i)
        out = []
        if mode.use_bootstrap_baseline:
            rec = baseline_recursion(tree, self._values(), self.policy, traj, i)
            for k in steps:
                ua, uh = rec[k]
                r = ua - uh
                if mode.use_reach_weighting:
                    r = r / traj.sampled_reach(i, k)
                out.append((int(tree.infoset[traj.nodes[k]]), r))
        elif mode.value_source == "terminal":
            for k in steps:
                r = os_mccfr_regret_estimate(tree, self.policy, traj, k, i, mode.use_reach_weighting)
                out.append((int(tree.infoset[traj.nodes[k]]), r))
        else:
            values = self._values()
            for k in steps:
                r = escher_regret_estimate(tree, values, self.policy, traj, k, i)
                if mode.use_reach_weighting:
                    r = r / traj.sampled_reach(i, k)
                out.append((int(tree.infoset[traj.nodes[k]]), r))
        return out

    # ---- iterations ----------------------------------------------------
    def run_iteration(self) -> IterationReport:
        self.t += 1
        if not self.config.sampled:
            report = self._cfr_iteration()
        else:
            report = self._sampled_iteration()
        self.log.close(self.t)
        report.iteration_variance = iteration_variance(self.log, self.t)
        if self.keep_reports:
            self.reports.append(report)
        return report

    def _cfr_iteration(self) -> IterationReport:
        tree = self.tree
        snapshot = self.policy
        cfv = counterfactual_values(tree, snapshot)
        inst = cfv.regrets(tree)
        self.regrets += inst
        if self.true_regret is not None:
            self.true_regret += inst
        self.avg_weight += infoset_own_reach(tree, snapshot)[tree.slot_infoset] * snapshot
        self.policy = regret_matching_flat(tree, self.regrets)
        self.log.record(self.t, inst)
        visited = int(tree.is_decision.sum())
        self.infosets_visited += visited
        return IterationReport(self.t, visited, inst.size, None)

    def _sampled_iteration(self) -> IterationReport:
        cfg = self.config
        tree = self.tree
        snapshot = self.policy
        if self.noisy is not None:
            self.noisy.new_iteration()
        visited = 0
        count = 0
        fallbacks = 0
        touched = []
        for i in (0, 1):
            self._set_policy(self.policy)
            if self.mode.value_source == "learned":
                self._refresh_learned()
            if self.true_regret is not None:
                inst = counterfactual_values(tree, self.policy).regrets(tree)
                self.true_regret += np.where(tree.slot_player == i, inst, 0.0)
            sampling = build_sampling_policy(tree, i, self.policy, cfg.update_sampling)
            mine: set[int] = set()
            for _ in range(cfg.trajectories_per_update):
                traj = sample_trajectory(tree, sampling, self.rng, self.policy)
                visited += sum(1 for p in traj.players if p >= 0)
                for s, r in self.estimates_for(traj, i):
                    sl = slice(int(tree.infoset_offset[s]), int(tree.infoset_offset[s]) + r.size)
                    self.regrets[sl] += r
                    if self.log_rate >= 1.0 or self._log_rng.random() < self.log_rate:
                        self.log.record(self.t, r)
                    count += r.size
                    if cfg.averaging == "sampled":
                        self.avg_weight[sl] += self.policy[sl]
                    mine.add(s)
            if self.learned is not None:
                fallbacks += self.learned.fallbacks
            touched.append(frozenset(mine))
            self.policy = regret_matching_flat(tree, self.regrets)
        if cfg.averaging == "exact":
            self.avg_weight += infoset_own_reach(tree, snapshot)[tree.slot_infoset] * snapshot
        self.infosets_visited += visited
        return IterationReport(self.t, visited, count, None, tuple(touched), fallbacks)

    # ---- outputs -------------------------------------------------------
    def average_policy(self) -> np.ndarray:
        return average_policy_flat(self.tree, self.avg_weight)

    def average_tabular_policy(self) -> TabularPolicy:
        return TabularPolicy.from_flat(self.tree, self.average_policy())

    def exploitability(self) -> float:
        return exploitability(self.tree, self.average_policy())

    def regret_bound_ratio(self) -> float:
        """Mean over infosets of max_a R+(s, a), divided by sqrt(T), from tracked exact regrets."""
        if self.true_regret is None:
            raise RuntimeError("run with track_true_regret=True")
        pos = np.maximum(self.true_regret, 0.0)
        per_infoset = np.maximum.reduceat(pos, self.tree.infoset_offset)
        return float(per_infoset.mean() / math.sqrt(max(self.t, 1)))

    def run(self, iterations: int | None = None, eval_every: int | None = 100, callback=None) -> RunResult:
        """Run ``iterations`` more iterations (default: the configured count).

        Exploitability of the average policy is evaluated every ``eval_every``
        iterations and always after the last one.
        """
        total = self.config.iterations if iterations is None else iterations
        series = []
        for n in range(total):
            rep = self.run_iteration()
            last = n == total - 1
            expl = None
            if last or (eval_every and rep.iteration % eval_every == 0):
                expl = self.exploitability()
                rep.exploitability = expl
            series.append(SeriesRow(rep.iteration, self.infosets_visited, expl, rep.iteration_variance))
            if callback is not None:
                callback(self, rep)
        return RunResult(series, self.average_policy(), list(self.reports))


def run_solver(game, config: SolverConfig, eval_every: int | None = 100) -> RunResult:
    return Solver(game, config).run(eval_every=eval_every)
