"""Instantaneous regret estimators evaluated along one sampled trajectory.

``values`` arguments are any object with ``child_values(node, i)`` returning
player i's action values at ``node`` (OracleValueFn, NoisyOracle,
LearnedValues or ZeroBaseline).
"""

from __future__ import annotations

import numpy as np

from ..games import UsageError
from ..tree import GameTree
from .sampling import Trajectory


class ZeroBaseline:
    """Baseline that knows nothing: every action value is 0."""

    def __init__(self, tree: GameTree):
        self.tree = tree

    def child_values(self, node: int, i: int) -> np.ndarray:
        return np.zeros(int(self.tree.num_children[node]))


def _check_step(traj: Trajectory, k: int, i: int) -> None:
    if not 0 <= k < len(traj) or traj.players[k] != i:
        raise UsageError(f"step {k} is not an update-player ({i}) decision on the trajectory")


def _node_policy(tree: GameTree, policy: np.ndarray, node: int) -> np.ndarray:
    lo = int(tree.child_start[node])
    n = int(tree.num_children[node])
    if tree.player[node] < 0:
        return tree.chance_prob[lo:lo + n]
    off = int(tree.infoset_offset[tree.infoset[node]])
    return policy[off:off + n]


def escher_regret_estimate(tree: GameTree, values, policy: np.ndarray, traj: Trajectory, k: int, i: int) -> np.ndarray:
    """q_i(h, a) - sum_a' pi_i(s, a') q_i(h, a') at the on-trajectory history h = z[s].

    No importance weights appear anywhere.
    """
    _check_step(traj, k, i)
    node = traj.nodes[k]
    q = values.child_values(node, i)
    return q - _node_policy(tree, policy, node) @ q


def os_mccfr_regret_estimate(tree: GameTree, policy: np.ndarray, traj: Trajectory, k: int, i: int,
                             reach_weighting: bool = True) -> np.ndarray:
    """Outcome-sampling regret estimate at step ``k``.

    The sampled action's value is the terminal utility corrected by the
    policy/sampling ratio of the tail after it; unsampled actions get 0. With
    ``reach_weighting`` the result is divided by the update player's sampling
    reach of z[s].
    """
    _check_step(traj, k, i)
    n = int(tree.num_children[traj.nodes[k]])
    u = traj.utility0 if i == 0 else -traj.utility0
    tail = 1.0
    for j in range(k + 1, len(traj)):
        tail *= traj.policy_probs[j] / traj.sample_probs[j]
    q_sampled = u * tail / traj.sample_probs[k]
    r = np.zeros(n)
    r[traj.actions[k]] = q_sampled
    r -= traj.policy_probs[k] * q_sampled
    if reach_weighting:
        reach = traj.sampled_reach(i, k)
        if reach <= 0.0:
            raise AssertionError("zero sampling reach on a sampled trajectory")
        r /= reach
    return r


def baseline_recursion(tree: GameTree, baseline, policy: np.ndarray, traj: Trajectory, i: int) -> list[tuple[np.ndarray, float]]:
    """Bootstrapped action values along the trajectory, bottom-up.

    Returns, for every step k, the vector of corrected action values
    u(h, .) and the corrected history value u(h).
    """
    out: list[tuple[np.ndarray, float]] = [None] * len(traj)  # type: ignore[list-item]
    u_next = traj.utility0 if i == 0 else -traj.utility0
    for k in range(len(traj) - 1, -1, -1):
        node = traj.nodes[k]
        a = traj.actions[k]
        b = np.array(baseline.child_values(node, i), dtype=np.float64)
        ua = b.copy()
        ua[a] = b[a] + (u_next - b[a]) / traj.sample_probs[k]
        uh = float(_node_policy(tree, policy, node) @ ua)
        out[k] = (ua, uh)
        u_next = uh
    return out


def baseline_corrected_estimate(tree: GameTree, baseline, policy: np.ndarray, traj: Trajectory, k: int, i: int,
                                reach_weighting: bool = True,
                                recursion: list[tuple[np.ndarray, float]] | None = None) -> np.ndarray:
    """Regret from bootstrapped values: u(h, a) - u(h), optionally divided by
    the update player's sampling reach of z[s]."""
    _check_step(traj, k, i)
    if recursion is None:
        recursion = baseline_recursion(tree, baseline, policy, traj, i)
    ua, uh = recursion[k]
    r = ua - uh
    if reach_weighting:
        r = r / traj.sampled_reach(i, k)
    return r
