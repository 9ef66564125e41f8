"""Monte-Carlo history-value tables, a tabular stand-in for a learned value network."""

from __future__ import annotations

import numpy as np

from ..tree import GameTree
from ..values import OracleValueFn


def batch_rollouts(tree: GameTree, policy: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Play ``k`` root-to-terminal rollouts at once.

    Returns the per-node visit counts and per-node sums of player 0's final
    utility over the rollouts passing through each node.
    """
    ep = tree.edge_probs(policy)
    # sibling-local cumulative probabilities shifted by the parent index so a
    # single searchsorted over the whole array picks a child for every rollout
    cum = np.zeros(tree.num_nodes)
    for lvl in tree.levels:
        seg = ep[lvl.lo:lvl.hi]
        c = np.cumsum(seg)
        starts = np.repeat(np.concatenate(([0.0], c[lvl.offsets[1:] - 1])), np.diff(np.append(lvl.offsets, seg.size)))
        cum[lvl.lo:lvl.hi] = c - starts + tree.parent[lvl.lo:lvl.hi]
    node = np.zeros(k, dtype=np.int64)
    path = [node]
    live = tree.child_start[node] >= 0
    while live.any():
        cur = node[live]
        lo = tree.child_start[cur]
        hi = lo + tree.num_children[cur] - 1
        u = rng.random(cur.size)
        pick = np.searchsorted(cum, cur + u, side="right")
        node = node.copy()
        node[live] = np.clip(pick, lo, hi)
        path.append(node)
        live = tree.child_start[node] >= 0
    final = tree.u0[node]
    # rollouts that already ended repeat their terminal; count each node once
    seen = np.stack(path[1:], axis=1) if len(path) > 1 else np.zeros((k, 0), dtype=np.int64)
    fresh = np.ones_like(seen, dtype=bool)
    fresh[:, 1:] = seen[:, 1:] != seen[:, :-1]
    nodes = seen[fresh]
    weights = np.broadcast_to(final[:, None], seen.shape)[fresh]
    visits = np.bincount(nodes, minlength=tree.num_nodes).astype(np.float64)
    sums = np.bincount(nodes, weights=weights, minlength=tree.num_nodes)
    return visits, sums


def mixed_policy(tree: GameTree, policy: np.ndarray, mix: float) -> np.ndarray:
    return (1.0 - mix) * policy + mix * tree.uniform_policy()


class LearnedValues:
    """Action values estimated as the mean return observed after each edge.

    Edges no rollout went through fall back to the exact oracle; the number of
    such lookups is kept in ``fallbacks``.
    """

    def __init__(self, tree: GameTree, visits: np.ndarray, sums: np.ndarray, oracle: OracleValueFn | None = None):
        self.tree = tree
        self.visits = visits
        self.estimates = np.divide(sums, visits, out=np.zeros_like(sums), where=visits > 0)
        self.oracle = oracle
        self.fallbacks = 0

    def child_values(self, node: int, i: int) -> np.ndarray:
        lo = int(self.tree.child_start[node])
        hi = lo + int(self.tree.num_children[node])
        q = self.estimates[lo:hi].copy()
        missing = self.visits[lo:hi] == 0
        if missing.any():
            if self.oracle is None:
                raise LookupError(f"no rollout data below node {node} and no oracle to fall back on")
            q[missing] = self.oracle.values0[lo:hi][missing]
            self.fallbacks += int(missing.sum())
        return q if i == 0 else -q

    def coverage(self) -> float:
        """Fraction of tree edges seen by at least one rollout."""
        return float(np.mean(self.visits[1:] > 0))


def learned_value_refresh(tree: GameTree, policy: np.ndarray, k: int, mix: float, rng: np.random.Generator,
                          oracle: OracleValueFn | None = None) -> LearnedValues:
    """Fit a value table from ``k`` rollouts of ``(1 - mix) * policy + mix * uniform``."""
    visits, sums = batch_rollouts(tree, mixed_policy(tree, policy, mix), k, rng)
    return LearnedValues(tree, visits, sums, oracle)
