"""Exact values on the compiled tree: history and action values, reach
probabilities, counterfactual values, best responses and exploitability.

Everything here is the ground truth the sampled estimators are checked
against. Policies are flat slot vectors (see ``GameTree``); ``TabularPolicy``
inputs are converted on entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import Action, GameState, InfoKey, UsageError
from .policy import TabularPolicy
from .tree import GameTree


def _flat(tree: GameTree, policy) -> np.ndarray:
    if policy is None:
        return tree.uniform_policy()
    if isinstance(policy, TabularPolicy):
        return policy.to_flat(tree)
    return np.asarray(policy, dtype=np.float64)


def node_values(tree: GameTree, policy: np.ndarray) -> np.ndarray:
    """Player 0's expected utility at every node under a joint policy."""
    ep = tree.edge_probs(policy)
    v = tree.u0.copy()
    for lvl in reversed(tree.levels):
        w = ep[lvl.lo:lvl.hi] * v[lvl.lo:lvl.hi]
        v[lvl.nodes] = np.add.reduceat(w, lvl.offsets)
    return v


@dataclass(frozen=True)
class Reach:
    """Per-node reach factors: each player's own contribution and chance's."""

    player0: np.ndarray
    player1: np.ndarray
    chance: np.ndarray

    def own(self, i: int) -> np.ndarray:
        return self.player0 if i == 0 else self.player1

    def others(self, i: int) -> np.ndarray:
        """Opponent-and-chance reach (eta_{-i})."""
        return (self.player1 if i == 0 else self.player0) * self.chance

    @property
    def total(self) -> np.ndarray:
        return self.player0 * self.player1 * self.chance


@dataclass(frozen=True)
class ReachProfile:
    eta_i: float
    eta_minus_i: float
    eta: float


def reach_probabilities(tree: GameTree, policy: np.ndarray) -> Reach:
    ep = tree.edge_probs(policy)
    out = [np.ones(tree.num_nodes) for _ in range(3)]
    owner = tree.player[tree.parent[1:]]
    factors = []
    for p in (0, 1, -1):
        f = np.ones(tree.num_nodes)
        f[1:] = np.where(owner == p, ep[1:], 1.0)
        factors.append(f)
    for lvl in tree.levels:
        ch = slice(lvl.lo, lvl.hi)
        par = tree.parent[ch]
        for arr, f in zip(out, factors):
            arr[ch] = arr[par] * f[ch]
    return Reach(*out)


def reach_profile(tree: GameTree, policy, h: GameState | int, i: int) -> ReachProfile:
    node = h if isinstance(h, (int, np.integer)) else tree.node_of(h)
    r = reach_probabilities(tree, _flat(tree, policy))
    return ReachProfile(float(r.own(i)[node]), float(r.others(i)[node]), float(r.total[node]))


def infoset_own_reach(tree: GameTree, policy: np.ndarray) -> np.ndarray:
    """eta_i(s) for every infoset: product of the owner's own action probabilities
    on the path to s (well defined under perfect recall)."""
    reach = np.ones(tree.num_infosets)
    for level in tree.own_levels[1:]:
        ps = tree.infoset_parent_slot[level]
        reach[level] = reach[tree.slot_infoset[ps]] * policy[ps]
    return reach


class OracleValueFn:
    """Exact history values under a fixed joint policy.

    The full value pass is memoized and recomputed only after
    ``set_policy``; callers that hold the policy fixed for an iteration share
    one pass.
    """

    def __init__(self, tree: GameTree, policy=None):
        self.tree = tree
        self.passes = 0
        self.set_policy(policy)

    def set_policy(self, policy) -> None:
        self.policy = np.array(_flat(self.tree, policy), dtype=np.float64)
        self._values: np.ndarray | None = None

    @property
    def values0(self) -> np.ndarray:
        if self._values is None:
            self._values = node_values(self.tree, self.policy)
            self.passes += 1
        return self._values

    def node_value(self, node: int, i: int) -> float:
        v = float(self.values0[node])
        return v if i == 0 else -v

    def child_values(self, node: int, i: int) -> np.ndarray:
        lo = int(self.tree.child_start[node])
        q = self.values0[lo:lo + int(self.tree.num_children[node])]
        return q if i == 0 else -q

    def history_value(self, h: GameState, i: int) -> float:
        return self.node_value(self.tree.node_of(h), i)

    def action_value(self, h: GameState, a: Action | int, i: int) -> float:
        node = self.tree.node_of(h)
        idx = a if isinstance(a, (int, np.integer)) else a.id
        if self.tree.child_start[node] < 0 or not 0 <= idx < self.tree.num_children[node]:
            raise UsageError(f"action {a!r} is not legal at {h!r}")
        return float(self.child_values(node, i)[idx])


def history_value(oracle: OracleValueFn, h: GameState, i: int) -> float:
    return oracle.history_value(h, i)


def action_value(oracle: OracleValueFn, h: GameState, a: Action | int, i: int) -> float:
    return oracle.action_value(h, a, i)


@dataclass(frozen=True)
class CounterfactualValues:
    """v^c per infoset and q^c per slot for both players' infosets."""

    infoset: np.ndarray
    slot: np.ndarray

    def regrets(self, tree: GameTree) -> np.ndarray:
        return self.slot - self.infoset[tree.slot_infoset]


def counterfactual_values(tree: GameTree, policy, values0: np.ndarray | None = None,
                          reach: Reach | None = None) -> CounterfactualValues:
    """Counterfactual values of every infoset (for its owner) in one pass."""
    policy = _flat(tree, policy)
    v0 = node_values(tree, policy) if values0 is None else values0
    reach = reach or reach_probabilities(tree, policy)
    members = tree.member_nodes
    owner = tree.player[members]
    sign = np.where(owner == 0, 1.0, -1.0)
    opp = np.where(owner == 0, reach.player1[members], reach.player0[members]) * reach.chance[members]
    v_info = np.bincount(tree.infoset[members], weights=opp * sign * v0[members], minlength=tree.num_infosets)
    edges = tree.decision_edges
    par = tree.parent[edges]
    esign = np.where(tree.player[par] == 0, 1.0, -1.0)
    eopp = np.where(tree.player[par] == 0, reach.player1[par], reach.player0[par]) * reach.chance[par]
    q_slot = np.bincount(tree.slot[edges], weights=eopp * esign * v0[edges], minlength=tree.num_slots)
    return CounterfactualValues(v_info, q_slot)


def counterfactual_value(tree: GameTree, policy, s: InfoKey, i: int | None = None) -> float:
    """v^c_i(pi, s) = sum over h in s of eta_{-i}(h) v_i(pi, h)."""
    idx = tree.infoset_index(s)
    if i is not None and i != s.player:
        raise UsageError(f"{s} belongs to player {s.player}, not {i}")
    return float(counterfactual_values(tree, policy).infoset[idx])


def counterfactual_action_values(tree: GameTree, policy, s: InfoKey) -> np.ndarray:
    """q^c(pi, s, a) for every action at s."""
    idx = tree.infoset_index(s)
    return counterfactual_values(tree, policy).slot[tree.slots_of(idx)].copy()


def counterfactual_regrets(tree: GameTree, policy) -> np.ndarray:
    """Exact r^c(pi, s, a) for every slot."""
    return counterfactual_values(tree, policy).regrets(tree)


def best_response(tree: GameTree, policy, i: int) -> tuple[float, np.ndarray]:
    """Value of player i's best response to the other player's part of ``policy``,
    and the chosen (pure) response as a flat slot vector over player i's infosets."""
    policy = _flat(tree, policy)
    ep = tree.edge_probs(policy)
    reach = reach_probabilities(tree, policy)
    opp = reach.others(i)
    v = tree.utility(i).copy()
    best_slot = np.full(tree.num_infosets, -1, dtype=np.int64)
    seg = tree.infoset_offset
    for lvl in reversed(tree.levels):
        ch = np.arange(lvl.lo, lvl.hi)
        par = tree.parent[ch]
        mine = tree.player[par] == i
        factor = ep[ch]
        if mine.any():
            idx = ch[mine]
            score = np.bincount(tree.slot[idx], weights=opp[tree.parent[idx]] * v[idx], minlength=tree.num_slots)
            seg_max = np.maximum.reduceat(score, seg)
            is_max = score >= seg_max[tree.slot_infoset]
            first = np.minimum.reduceat(np.where(is_max, np.arange(tree.num_slots), tree.num_slots), seg)
            infos = np.unique(tree.infoset[par[mine]])
            best_slot[infos] = first[infos]
            factor = factor.copy()
            factor[mine] = (tree.slot[idx] == best_slot[tree.infoset[tree.parent[idx]]]).astype(np.float64)
        v[lvl.nodes] = np.add.reduceat(factor * v[ch], lvl.offsets)
    response = np.zeros(tree.num_slots)
    chosen = best_slot[best_slot >= 0]
    response[chosen] = 1.0
    return float(v[0]), response


def best_response_value(tree: GameTree, opponent_policy, i: int) -> float:
    return best_response(tree, opponent_policy, i)[0]


@dataclass(frozen=True)
class Exploitability:
    nash_conv: float
    best_response_values: tuple[float, float]

    def __float__(self) -> float:
        return self.nash_conv


def exploitability_report(tree: GameTree, policy) -> Exploitability:
    policy = _flat(tree, policy)
    br = (best_response(tree, policy, 0)[0], best_response(tree, policy, 1)[0])
    return Exploitability(br[0] + br[1], br)


def exploitability(tree: GameTree, policy) -> float:
    """Sum over both players of their best-response value (NashConv units)."""
    return exploitability_report(tree, policy).nash_conv


NOISE_REDRAW = ("iteration", "run")


class NoisyOracle:
    """Oracle whose action values carry a frozen error delta(h, a) drawn
    uniformly from [-epsilon, epsilon].

    With ``redraw="iteration"`` the errors are redrawn at each
    ``new_iteration``; with ``redraw="run"`` one error function is kept for
    the whole run.
    """

    def __init__(self, oracle: OracleValueFn, epsilon: float, seed=None, redraw: str = "iteration"):
        if epsilon < 0:
            raise UsageError(f"noise bound must be non-negative, got {epsilon}")
        if redraw not in NOISE_REDRAW:
            raise UsageError(f"redraw must be one of {NOISE_REDRAW}, got {redraw!r}")
        self.redraw = redraw
        self.oracle = oracle
        self.epsilon = float(epsilon)
        self.rng = np.random.default_rng(seed)
        self._delta: dict[tuple[int, int], float] = {}

    @property
    def tree(self) -> GameTree:
        return self.oracle.tree

    def new_iteration(self) -> None:
        if self.redraw == "iteration":
            self._delta.clear()

    def delta(self, child: int, i: int) -> float:
        key = (child, i)
        d = self._delta.get(key)
        if d is None:
            d = float(self.rng.uniform(-self.epsilon, self.epsilon)) if self.epsilon > 0 else 0.0
            self._delta[key] = d
        return d

    def child_values(self, node: int, i: int) -> np.ndarray:
        q = np.array(self.oracle.child_values(node, i))
        lo = int(self.tree.child_start[node])
        for k in range(q.size):
            q[k] += self.delta(lo + k, i)
        return q

    def action_value(self, h: GameState, a: Action | int, i: int) -> float:
        node = self.tree.node_of(h)
        idx = a if isinstance(a, (int, np.integer)) else a.id
        return self.oracle.action_value(h, a, i) + self.delta(int(self.tree.child_start[node]) + idx, i)


def noisy_lookup(noisy: NoisyOracle, h: GameState, a: Action | int, i: int) -> float:
    return noisy.action_value(h, a, i)
