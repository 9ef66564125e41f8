"""Sampling policies and single-trajectory playouts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..games import ConfigurationError, GameState
from ..policy import SamplingPolicySpec
from ..tree import GameTree


def build_sampling_policy(tree: GameTree, i: int, policy: np.ndarray, b_i: SamplingPolicySpec) -> np.ndarray:
    """Joint sampling policy for update player ``i`` as a flat slot vector:
    ``b_i`` at player i's infosets and the current policy elsewhere."""
    b = b_i.flat(tree, policy)
    mine = tree.slot_player == i
    if np.any(b[mine] <= 0.0):
        raise ConfigurationError("sampling policy must put positive probability on every action of the update player")
    return np.where(mine, b, policy)


@dataclass
class Trajectory:
    """Root-to-terminal playout.

    ``nodes[k]`` is the k-th visited node (the last is terminal) and
    ``actions[k]``, ``sample_probs[k]`` and ``policy_probs[k]`` describe the
    edge taken from it. ``players[k]`` is the acting player (-1 for chance).
    """

    nodes: list[int] = field(default_factory=list)
    players: list[int] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    sample_probs: list[float] = field(default_factory=list)
    policy_probs: list[float] = field(default_factory=list)
    utility0: float = 0.0

    @property
    def terminal(self) -> int:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.actions)

    def steps_of(self, player: int) -> list[int]:
        return [k for k, p in enumerate(self.players) if p == player]

    def sampled_reach(self, player: int, upto: int | None = None) -> float:
        """Product of ``player``'s sampling probabilities on steps before ``upto``."""
        upto = len(self.actions) if upto is None else upto
        r = 1.0
        for k in range(upto):
            if self.players[k] == player:
                r *= self.sample_probs[k]
        return r

    def policy_reach(self, player: int, start: int = 0, stop: int | None = None) -> float:
        stop = len(self.actions) if stop is None else stop
        r = 1.0
        for k in range(start, stop):
            if self.players[k] == player:
                r *= self.policy_probs[k]
        return r

    def states(self, tree: GameTree) -> list[GameState]:
        return [tree.state_of(n) for n in self.nodes]


def sample_trajectory(tree: GameTree, sampling: np.ndarray, rng: np.random.Generator,
                      policy: np.ndarray | None = None) -> Trajectory:
    """Play one trajectory from the root using the flat sampling policy.

    ``policy`` (the current joint policy) is only used to record the
    per-step policy probabilities; it defaults to ``sampling``.
    """
    policy = sampling if policy is None else policy
    child_start = tree.child_start
    num_children = tree.num_children
    player = tree.player
    chance_prob = tree.chance_prob
    offset = tree.infoset_offset
    infoset = tree.infoset
    traj = Trajectory()
    node = 0
    while child_start[node] >= 0:
        lo = int(child_start[node])
        n = int(num_children[node])
        p = int(player[node])
        if p < 0:
            probs = chance_prob[lo:lo + n]
            pol = probs
        else:
            off = int(offset[infoset[node]])
            probs = sampling[off:off + n]
            pol = policy[off:off + n]
        u = rng.random()
        acc = 0.0
        a = n - 1
        for k in range(n):
            acc += probs[k]
            if u < acc:
                a = k
                break
        while probs[a] <= 0.0:  # guard against rounding onto a zero-probability tail
            a -= 1
        traj.nodes.append(node)
        traj.players.append(p)
        traj.actions.append(a)
        traj.sample_probs.append(float(probs[a]))
        traj.policy_probs.append(float(pol[a]))
        node = lo + a
    traj.nodes.append(node)
    traj.utility0 = float(tree.u0[node])
    return traj


def enumerate_trajectories(tree: GameTree, sampling: np.ndarray, policy: np.ndarray | None = None):
    """Yield ``(probability, Trajectory)`` for every terminal reachable under
    ``sampling``; exact expectations over the sampling distribution."""
    policy = sampling if policy is None else policy
    stack = [(0, 1.0, Trajectory())]
    while stack:
        node, prob, traj = stack.pop()
        if tree.child_start[node] < 0:
            traj.nodes.append(node)
            traj.utility0 = float(tree.u0[node])
            yield prob, traj
            continue
        lo = int(tree.child_start[node])
        n = int(tree.num_children[node])
        p = int(tree.player[node])
        if p < 0:
            probs = pol = tree.chance_prob[lo:lo + n]
        else:
            off = int(tree.infoset_offset[tree.infoset[node]])
            probs, pol = sampling[off:off + n], policy[off:off + n]
        for a in range(n - 1, -1, -1):
            if probs[a] <= 0.0:
                continue
            nxt = Trajectory(traj.nodes + [node], traj.players + [p], traj.actions + [a],
                             traj.sample_probs + [float(probs[a])], traj.policy_probs + [float(pol[a])])
            stack.append((lo + a, prob * float(probs[a]), nxt))
