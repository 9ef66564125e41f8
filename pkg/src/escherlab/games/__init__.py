"""Concrete games and the name-based registry."""

from __future__ import annotations

from typing import Any, Mapping

from .base import (
    CHANCE,
    TERMINAL,
    Action,
    ConfigurationError,
    Game,
    GameError,
    GameSpec,
    GameState,
    InfoKey,
    UsageError,
    apply_action,
    chance_outcomes,
    info_key,
    legal_actions,
)
from .battleship import Battleship
from .kuhn import KuhnPoker
from .leduc import LeducPoker
from .liars_dice import LiarsDice

GAMES: dict[str, type[Game]] = {
    "kuhn_poker": KuhnPoker,
    "leduc_poker": LeducPoker,
    "liars_dice": LiarsDice,
    "battleship": Battleship,
}


def load_game(spec: GameSpec | str, params: Mapping[str, Any] | None = None) -> Game:
    if isinstance(spec, str):
        spec = GameSpec(spec, dict(params or {}))
    try:
        cls = GAMES[spec.name]
    except KeyError:
        raise ConfigurationError(f"unknown game {spec.name!r}; expected one of {sorted(GAMES)}") from None
    return cls(spec)


def initial_state(spec: GameSpec | str) -> GameState:
    return load_game(spec).initial_state()


__all__ = [
    "CHANCE", "TERMINAL", "Action", "ConfigurationError", "Game", "GameError", "GameSpec",
    "GameState", "InfoKey", "UsageError", "GAMES", "load_game", "initial_state",
    "legal_actions", "apply_action", "chance_outcomes", "info_key",
    "KuhnPoker", "LeducPoker", "LiarsDice", "Battleship",
]
