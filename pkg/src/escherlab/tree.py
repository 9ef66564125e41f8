"""Flat, breadth-first compilation of a game tree into numpy arrays.

Nodes are numbered in BFS order, so nodes are sorted by depth and the
children of any node occupy a contiguous index range. Every decision edge
maps to a *slot*: a (infoset, action) pair laid out contiguously per
infoset. Policies, regrets and average-policy weights over the whole game
are plain float vectors indexed by slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .games import CHANCE, TERMINAL, Game, GameSpec, GameState, InfoKey, UsageError, load_game


class PerfectRecallError(AssertionError):
    pass


@dataclass
class Level:
    depth: int
    nodes: np.ndarray  # internal nodes at this depth
    lo: int  # first child index of the level
    hi: int  # one past the last child index
    offsets: np.ndarray  # child_start[nodes] - lo, for reduceat


class GameTree:
    """Exhaustively enumerated game tree.

    Per-node arrays are indexed by node id (the root is 0); per-edge data is
    stored on the child node. ``slot`` maps a decision edge to its
    (infoset, action) slot, ``chance_prob`` holds chance edge probabilities,
    and ``u0`` holds player 0's terminal utility.
    """

    def __init__(self, game: Game):
        self.game = game
        self.spec = game.spec
        self.payoff_range = float(game.payoff_range)
        self._build()

    # ------------------------------------------------------------------
    def _build(self) -> None:
        game = self.game
        player: list[int] = []
        parent: list[int] = []
        depth: list[int] = []
        action_in_parent: list[int] = []
        child_start: list[int] = []
        num_children: list[int] = []
        chance_prob: list[float] = []
        slot: list[int] = []
        infoset: list[int] = []
        u0: list[float] = []

        keys: list[InfoKey] = []
        labels: list[tuple[str, ...]] = []
        key_index: dict[InfoKey, int] = {}
        info_offset: list[int] = []
        info_depth: list[int] = []
        info_parent_slot: list[int] = []

        # frontier entries: (world, own-previous-slot per player)
        frontier = [(game._root(), (-1, -1))]
        player.append(0)
        parent.append(-1)
        depth.append(0)
        action_in_parent.append(-1)
        chance_prob.append(1.0)
        slot.append(-1)
        next_index = 1
        total_slots = 0
        node = 0
        d = 0
        while frontier:
            next_frontier = []
            for world, own_prev in frontier:
                p = game._player(world)
                player[node] = p
                if p == TERMINAL:
                    child_start.append(-1)
                    num_children.append(0)
                    infoset.append(-1)
                    u0.append(game._returns(world)[0])
                    node += 1
                    continue
                u0.append(0.0)
                if p == CHANCE:
                    outcomes = game._chance(world)
                    infoset.append(-1)
                    probs = [pr for _, pr in outcomes]
                    child_slots = [-1] * len(outcomes)
                    child_prev = [own_prev] * len(outcomes)
                else:
                    acts = tuple(game._legal(world))
                    key = InfoKey(p, game._info(world, p))
                    idx = key_index.get(key)
                    if idx is None:
                        idx = len(keys)
                        key_index[key] = idx
                        keys.append(key)
                        labels.append(acts)
                        info_offset.append(total_slots)
                        total_slots += len(acts)
                        info_depth.append(d)
                        info_parent_slot.append(own_prev[p])
                    else:
                        if labels[idx] != acts:
                            raise PerfectRecallError(f"{key}: legal actions differ across member histories")
                        if info_depth[idx] != d or info_parent_slot[idx] != own_prev[p]:
                            raise PerfectRecallError(f"{key}: members disagree on own action prefix or depth")
                    infoset.append(idx)
                    base = info_offset[idx]
                    probs = [0.0] * len(acts)
                    child_slots = [base + a for a in range(len(acts))]
                    child_prev = []
                    for s in child_slots:
                        prev = list(own_prev)
                        prev[p] = s
                        child_prev.append(tuple(prev))
                n = len(probs)
                child_start.append(next_index)
                num_children.append(n)
                for a in range(n):
                    player.append(0)
                    parent.append(node)
                    depth.append(d + 1)
                    action_in_parent.append(a)
                    chance_prob.append(probs[a])
                    slot.append(child_slots[a])
                    next_frontier.append((game._next(world, a), child_prev[a]))
                next_index += n
                node += 1
            frontier = next_frontier
            d += 1

        self.num_nodes = len(player)
        self.player = np.asarray(player, dtype=np.int8)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.depth = np.asarray(depth, dtype=np.int64)
        self.action_in_parent = np.asarray(action_in_parent, dtype=np.int64)
        self.child_start = np.asarray(child_start, dtype=np.int64)
        self.num_children = np.asarray(num_children, dtype=np.int64)
        self.chance_prob = np.asarray(chance_prob, dtype=np.float64)
        self.slot = np.asarray(slot, dtype=np.int64)
        self.infoset = np.asarray(infoset, dtype=np.int64)
        self.u0 = np.asarray(u0, dtype=np.float64)

        self.infoset_keys = keys
        self.infoset_labels = labels
        self.key_index = key_index
        self.num_infosets = len(keys)
        self.infoset_player = np.asarray([k.player for k in keys], dtype=np.int8)
        self.infoset_num_actions = np.asarray([len(a) for a in labels], dtype=np.int64)
        self.infoset_offset = np.asarray(info_offset, dtype=np.int64)
        self.infoset_depth = np.asarray(info_depth, dtype=np.int64)
        self.infoset_parent_slot = np.asarray(info_parent_slot, dtype=np.int64)
        self.num_slots = int(self.infoset_num_actions.sum())
        self.slot_infoset = np.repeat(np.arange(self.num_infosets), self.infoset_num_actions)
        self.slot_player = self.infoset_player[self.slot_infoset]

        self.is_terminal = self.player == TERMINAL
        self.is_chance = self.player == CHANCE
        self.is_decision = self.player >= 0
        edges = np.arange(1, self.num_nodes)
        self.decision_edges = edges[self.slot[edges] >= 0]
        self.chance_edges = edges[self.slot[edges] < 0]
        self.terminals = np.flatnonzero(self.is_terminal)

        self.levels: list[Level] = []
        internal = np.flatnonzero(~self.is_terminal)
        for dd in range(int(self.depth.max()) + 1):
            nodes = internal[self.depth[internal] == dd]
            if len(nodes) == 0:
                continue
            lo = int(self.child_start[nodes[0]])
            last = nodes[-1]
            hi = int(self.child_start[last] + self.num_children[last])
            self.levels.append(Level(dd, nodes, lo, hi, self.child_start[nodes] - lo))

        # infoset members (decision nodes), grouped by infoset
        dec = np.flatnonzero(self.is_decision)
        order = np.argsort(self.infoset[dec], kind="stable")
        self.member_nodes = dec[order]
        counts = np.bincount(self.infoset[dec], minlength=self.num_infosets)
        self.member_offset = np.concatenate([[0], np.cumsum(counts)])

        # infosets by own depth (number of own earlier decisions) for reach passes
        own_depth = np.zeros(self.num_infosets, dtype=np.int64)
        for s in range(self.num_infosets):
            ps = self.infoset_parent_slot[s]
            own_depth[s] = 0 if ps < 0 else own_depth[self.slot_infoset[ps]] + 1
        self.infoset_own_depth = own_depth
        self.own_levels = [np.flatnonzero(own_depth == k) for k in range(int(own_depth.max()) + 1)] if self.num_infosets else []

    # ------------------------------------------------------------------
    def node_of(self, state: GameState | tuple[int, ...]) -> int:
        """Node index of a state (or of a raw history of local action ids)."""
        history = state.history if isinstance(state, GameState) else state
        node = 0
        for a in history:
            if self.child_start[node] < 0 or not 0 <= a < self.num_children[node]:
                raise UsageError(f"history {tuple(history)} is not in the tree")
            node = int(self.child_start[node] + a)
        return node

    def history_of(self, node: int) -> tuple[int, ...]:
        path = []
        while node > 0:
            path.append(int(self.action_in_parent[node]))
            node = int(self.parent[node])
        return tuple(reversed(path))

    def state_of(self, node: int) -> GameState:
        state = self.game.initial_state()
        for a in self.history_of(node):
            state = GameState(self.game, state.history + (a,), self.game._next(state.world, a))
        return state

    def infoset_index(self, key: InfoKey) -> int:
        try:
            return self.key_index[key]
        except KeyError:
            raise UsageError(f"unknown information set {key}") from None

    def slots_of(self, s: int) -> slice:
        off = int(self.infoset_offset[s])
        return slice(off, off + int(self.infoset_num_actions[s]))

    def members(self, s: int) -> np.ndarray:
        return self.member_nodes[self.member_offset[s]:self.member_offset[s + 1]]

    def children(self, node: int) -> range:
        lo = int(self.child_start[node])
        return range(lo, lo + int(self.num_children[node]))

    def utility(self, player: int) -> np.ndarray:
        """Terminal utilities for ``player`` (zero at non-terminals)."""
        return self.u0 if player == 0 else -self.u0

    def uniform_policy(self) -> np.ndarray:
        return 1.0 / self.infoset_num_actions[self.slot_infoset].astype(np.float64)

    def edge_probs(self, policy: np.ndarray) -> np.ndarray:
        """Probability of every edge (indexed by child node) under a flat joint policy."""
        ep = self.chance_prob.copy()
        ep[self.decision_edges] = policy[self.slot[self.decision_edges]]
        return ep

    def __repr__(self) -> str:
        return f"GameTree({self.spec.name}, nodes={self.num_nodes}, infosets={self.num_infosets})"


@lru_cache(maxsize=16)
def _cached_tree(spec: GameSpec) -> GameTree:
    return GameTree(load_game(spec))


def build_tree(game: Game | GameSpec | str) -> GameTree:
    """Compile (and cache per process) the tree of a game."""
    if isinstance(game, str):
        game = GameSpec(game)
    if isinstance(game, GameSpec):
        return _cached_tree(game)
    return _cached_tree(game.spec)
