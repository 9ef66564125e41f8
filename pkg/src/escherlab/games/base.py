"""Extensive-form game abstraction shared by all concrete games.

A game is a set of rules (``Game``) plus immutable ``GameState`` values.
States carry the action history from the root as local action ids, so two
equal histories always describe the same node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

CHANCE = -1
TERMINAL = -2


class GameError(Exception):
    """Base class for game-core errors."""


class ConfigurationError(GameError, ValueError):
    """Unknown game name or invalid game parameters."""


class UsageError(GameError, ValueError):
    """An operation was called on a state where it is undefined."""


@dataclass(frozen=True)
class Action:
    id: int
    label: str


@dataclass(frozen=True, order=True)
class InfoKey:
    player: int
    key: str

    def __str__(self) -> str:
        return f"{self.player}:{self.key}"

    @classmethod
    def parse(cls, text: str) -> "InfoKey":
        player, _, key = text.partition(":")
        return cls(int(player), key)


@dataclass(frozen=True)
class GameSpec:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.name, tuple(sorted((k, _freeze(v)) for k, v in self.params.items()))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameSpec):
            return NotImplemented
        return self.name == other.name and dict(self.params) == dict(other.params)


def _freeze(value: Any) -> Hashable:
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    return value


class Game:
    """Rules of a two-player zero-sum game.

    Subclasses work on an opaque, hashable ``world`` value and implement the
    underscore hooks below. The public methods take and return ``GameState``.
    """

    name: str = ""
    payoff_range: float = 1.0
    max_depth: int = 0

    def __init__(self, spec: GameSpec):
        self.spec = spec

    # --- hooks -----------------------------------------------------------
    def _root(self) -> Any:
        raise NotImplementedError

    def _player(self, world: Any) -> int:
        raise NotImplementedError

    def _legal(self, world: Any) -> Sequence[str]:
        raise NotImplementedError

    def _chance(self, world: Any) -> Sequence[tuple[str, float]]:
        raise NotImplementedError

    def _next(self, world: Any, index: int) -> Any:
        raise NotImplementedError

    def _returns(self, world: Any) -> tuple[float, float]:
        raise NotImplementedError

    def _info(self, world: Any, player: int) -> str:
        raise NotImplementedError

    # --- public API ------------------------------------------------------
    def initial_state(self) -> "GameState":
        return GameState(self, (), self._root())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({dict(self.spec.params)!r})"


@dataclass(frozen=True, eq=False)
class GameState:
    game: Game
    history: tuple[int, ...]
    world: Any

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameState):
            return NotImplemented
        return self.game.spec == other.game.spec and self.history == other.history

    def __hash__(self) -> int:
        return hash(self.history)

    @property
    def current_player(self) -> int:
        return self.game._player(self.world)

    @property
    def is_terminal(self) -> bool:
        return self.current_player == TERMINAL

    @property
    def is_chance(self) -> bool:
        return self.current_player == CHANCE

    def legal_actions(self) -> list[Action]:
        player = self.current_player
        if player == TERMINAL:
            raise UsageError("legal_actions called on a terminal state")
        if player == CHANCE:
            labels = [label for label, _ in self.game._chance(self.world)]
        else:
            labels = list(self.game._legal(self.world))
        return [Action(i, label) for i, label in enumerate(labels)]

    def chance_outcomes(self) -> list[tuple[Action, float]]:
        if not self.is_chance:
            raise UsageError("chance_outcomes called on a non-chance state")
        return [(Action(i, label), p) for i, (label, p) in enumerate(self.game._chance(self.world))]

    def apply(self, action: Action | int) -> "GameState":
        legal = self.legal_actions()
        index = action if isinstance(action, int) else action.id
        if not 0 <= index < len(legal):
            raise UsageError(f"illegal action {action!r} at history {self.history}")
        if isinstance(action, Action) and legal[index].label != action.label:
            raise UsageError(f"illegal action {action!r}: expected label {legal[index].label!r}")
        return GameState(self.game, self.history + (index,), self.game._next(self.world, index))

    def returns(self) -> tuple[float, float]:
        if not self.is_terminal:
            raise UsageError("returns requested for a non-terminal state")
        return self.game._returns(self.world)

    def info_key(self) -> InfoKey:
        player = self.current_player
        if player < 0:
            raise UsageError("info_key is only defined at player decision nodes")
        return InfoKey(player, self.game._info(self.world, player))

    def info_key_for(self, player: int) -> str:
        """The observation/action string ``player`` holds at this state."""
        return self.game._info(self.world, player)

    def __repr__(self) -> str:
        return f"GameState({self.game.name}, history={self.history})"


# Module-level operations mirroring the state methods.

def legal_actions(state: GameState) -> list[Action]:
    return state.legal_actions()


def apply_action(state: GameState, action: Action | int) -> GameState:
    return state.apply(action)


def chance_outcomes(state: GameState) -> list[tuple[Action, float]]:
    return state.chance_outcomes()


def info_key(state: GameState) -> InfoKey:
    return state.info_key()
