"""Tabular policies, regret matching and regret/average-policy accumulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .games import ConfigurationError, InfoKey, UsageError

if TYPE_CHECKING:
    from .tree import GameTree


def regret_matching(cum_regrets) -> np.ndarray:
    """Distribution proportional to positive regrets; uniform if none are positive."""
    r = np.asarray(cum_regrets, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise UsageError("regret_matching needs a non-empty 1-d vector")
    pos = np.maximum(r, 0.0)
    with np.errstate(over="ignore"):
        total = pos.sum()
    if not total > 0.0 or not np.isfinite(total):
        if np.isinf(total):
            # scale down before normalizing so huge regrets stay finite
            top = pos.max()
            pos = pos / top
            return pos / pos.sum()
        return np.full(r.size, 1.0 / r.size)
    return pos / total


def regret_matching_flat(tree: "GameTree", regrets: np.ndarray) -> np.ndarray:
    """Regret matching applied to every infoset of a flat slot vector at once."""
    pos = np.maximum(regrets, 0.0)
    sums = np.add.reduceat(pos, tree.infoset_offset) if tree.num_slots else pos
    per_slot = sums[tree.slot_infoset]
    uniform = tree.uniform_policy()
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(per_slot > 0.0, pos / np.where(per_slot > 0.0, per_slot, 1.0), uniform)
    return out


@dataclass
class TabularPolicy:
    """Map from InfoKey to a probability vector; absent keys are uniform."""

    table: dict[InfoKey, np.ndarray] = field(default_factory=dict)
    labels: dict[InfoKey, tuple[str, ...]] = field(default_factory=dict)

    def probs(self, key: InfoKey, num_actions: int) -> np.ndarray:
        vec = self.table.get(key)
        if vec is None:
            return np.full(num_actions, 1.0 / num_actions)
        if len(vec) != num_actions:
            raise UsageError(f"{key}: stored policy has {len(vec)} actions, expected {num_actions}")
        return vec

    def __setitem__(self, key: InfoKey, probs) -> None:
        vec = np.asarray(probs, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0 or np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-9:
            raise UsageError(f"{key}: not a probability vector: {probs!r}")
        self.table[key] = vec

    def __getitem__(self, key: InfoKey) -> np.ndarray:
        return self.table[key]

    def __contains__(self, key: object) -> bool:
        return key in self.table

    def __len__(self) -> int:
        return len(self.table)

    @classmethod
    def from_flat(cls, tree: "GameTree", flat: np.ndarray) -> "TabularPolicy":
        pol = cls()
        for s, key in enumerate(tree.infoset_keys):
            pol.table[key] = np.array(flat[tree.slots_of(s)], dtype=np.float64)
            pol.labels[key] = tree.infoset_labels[s]
        return pol

    def to_flat(self, tree: "GameTree") -> np.ndarray:
        flat = tree.uniform_policy()
        for key, vec in self.table.items():
            s = tree.key_index.get(key)
            if s is None:
                continue
            sl = tree.slots_of(s)
            if len(vec) != sl.stop - sl.start:
                raise UsageError(f"{key}: policy length does not match the game")
            flat[sl] = vec
        return flat

    # text table format: "<player>:<key>\t<action label>\t<probability>"
    def dumps(self) -> str:
        lines = []
        for key in sorted(self.table):
            labels = self.labels.get(key) or tuple(str(a) for a in range(len(self.table[key])))
            for label, p in zip(labels, self.table[key]):
                lines.append(f"{key}\t{label}\t{p:.17g}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def loads(cls, text: str) -> "TabularPolicy":
        rows: dict[InfoKey, list[tuple[str, float]]] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                key, label, prob = line.split("\t")
                rows.setdefault(InfoKey.parse(key), []).append((label, float(prob)))
            except ValueError:
                raise UsageError(f"policy table line {lineno}: expected 3 tab-separated fields") from None
        pol = cls()
        for key, entries in rows.items():
            pol.table[key] = np.array([p for _, p in entries])
            pol.labels[key] = tuple(label for label, _ in entries)
        return pol


@dataclass(frozen=True)
class SamplingPolicySpec:
    """Fixed (or exploration-mixed) sampling policy for the update player.

    ``kind`` is one of ``uniform``, ``epsilon`` (epsilon-uniform mix with the
    current policy) or ``table`` (a custom full-support TabularPolicy).
    """

    kind: str = "uniform"
    epsilon: float = 0.6
    table: TabularPolicy | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "epsilon", "table"):
            raise ConfigurationError(f"sampling.kind: unknown kind {self.kind!r}")
        if self.kind == "epsilon" and not 0.0 < self.epsilon <= 1.0:
            raise ConfigurationError(f"sampling.epsilon must be in (0, 1], got {self.epsilon}")
        if self.kind == "table":
            if self.table is None:
                raise ConfigurationError("sampling.table is required for kind='table'")
            for key, vec in self.table.table.items():
                if np.any(np.asarray(vec) <= 0.0):
                    raise ConfigurationError(f"sampling.table: {key} puts zero probability on an action")

    @property
    def is_fixed(self) -> bool:
        return self.kind != "epsilon"

    def flat(self, tree: "GameTree", current: np.ndarray) -> np.ndarray:
        """Sampling distribution over every slot of the game."""
        if self.kind == "uniform":
            return tree.uniform_policy()
        if self.kind == "epsilon":
            return self.epsilon * tree.uniform_policy() + (1.0 - self.epsilon) * current
        return self.table.to_flat(tree)


class RegretAccumulator:
    """Cumulative regrets and average-policy weights keyed by InfoKey.

    Storage is a pair of flat float arrays. Keys are laid out lazily on first
    use, or up front from a GameTree (``for_tree``) so that the arrays line
    up with the tree's slot order and can be updated in bulk.
    """

    def __init__(self):
        self._index: dict[InfoKey, tuple[int, int]] = {}
        self.regrets = np.zeros(0)
        self.avg_weight = np.zeros(0)
        self.t = 0
        self._labels: dict[InfoKey, tuple[str, ...]] = {}

    @classmethod
    def for_tree(cls, tree: "GameTree") -> "RegretAccumulator":
        acc = cls()
        acc._index = {
            key: (int(tree.infoset_offset[s]), int(tree.infoset_num_actions[s]))
            for s, key in enumerate(tree.infoset_keys)
        }
        acc.regrets = np.zeros(tree.num_slots)
        acc.avg_weight = np.zeros(tree.num_slots)
        acc._labels = dict(zip(tree.infoset_keys, tree.infoset_labels))
        return acc

    def _slice(self, key: InfoKey, n: int) -> slice:
        entry = self._index.get(key)
        if entry is None:
            off = self.regrets.size
            self._index[key] = (off, n)
            self.regrets = np.concatenate([self.regrets, np.zeros(n)])
            self.avg_weight = np.concatenate([self.avg_weight, np.zeros(n)])
            return slice(off, off + n)
        off, size = entry
        if size != n:
            raise UsageError(f"{key}: vector of length {n} does not match {size} actions")
        return slice(off, off + size)

    def keys(self) -> Iterable[InfoKey]:
        return self._index.keys()

    def regret(self, key: InfoKey) -> np.ndarray:
        off, n = self._index[key]
        return self.regrets[off:off + n]

    def accumulate(self, key: InfoKey, r_hat) -> None:
        vec = np.asarray(r_hat, dtype=np.float64)
        sl = self._slice(key, vec.size)  # may grow the arrays, so resolve first
        self.regrets[sl] += vec

    def update_average(self, key: InfoKey, policy, weight: float) -> None:
        if weight < 0:
            raise UsageError(f"average-policy weight must be non-negative, got {weight}")
        vec = np.asarray(policy, dtype=np.float64)
        sl = self._slice(key, vec.size)
        self.avg_weight[sl] += weight * vec

    def current_policy(self, key: InfoKey) -> np.ndarray:
        return regret_matching(self.regret(key))

    def average_policy(self) -> TabularPolicy:
        pol = TabularPolicy()
        for key, (off, n) in self._index.items():
            w = self.avg_weight[off:off + n]
            total = w.sum()
            pol.table[key] = w / total if total > 0 else np.full(n, 1.0 / n)
            if key in self._labels:
                pol.labels[key] = self._labels[key]
        return pol


def accumulate_regret(acc: RegretAccumulator, key: InfoKey, r_hat) -> None:
    acc.accumulate(key, r_hat)


def update_average(acc: RegretAccumulator, key: InfoKey, policy, weight: float) -> None:
    acc.update_average(key, policy, weight)


def extract_average_policy(acc: RegretAccumulator) -> TabularPolicy:
    return acc.average_policy()


def average_policy_flat(tree: "GameTree", avg_weight: np.ndarray) -> np.ndarray:
    """Normalize flat average-policy weights per infoset (uniform where empty)."""
    sums = np.add.reduceat(avg_weight, tree.infoset_offset)[tree.slot_infoset]
    return np.where(sums > 0.0, avg_weight / np.where(sums > 0.0, sums, 1.0), tree.uniform_policy())
