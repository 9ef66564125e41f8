"""Leduc poker, two players.

Six-card deck (J, Q, K in two suits), ante 1, two betting rounds with raise
sizes 2 and 4, at most two raises per round. Player 0 acts first in each
round. A pair with the public card beats any unpaired hand; otherwise the
higher rank wins and equal ranks split.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .base import CHANCE, TERMINAL, ConfigurationError, Game, GameSpec

RANKS = "JQK"
SUITS = "sh"
FOLD, CALL, RAISE = "fold", "call", "raise"


def card_label(card: int) -> str:
    return RANKS[card // 2] + SUITS[card % 2]


@dataclass(frozen=True)
class _World:
    private: tuple[int, ...] = ()
    public: int | None = None
    round: int = 0
    actions: tuple[str, ...] = ((), ())  # per-round action codes
    contrib: tuple[int, int] = (1, 1)
    raises: int = 0
    folder: int | None = None
    showdown: bool = False


class LeducPoker(Game):
    name = "leduc_poker"
    max_depth = 3 + 2 * 4

    def __init__(self, spec: GameSpec | None = None):
        spec = spec or GameSpec("leduc_poker")
        players = spec.params.get("players", 2)
        if players != 2:
            raise ConfigurationError(f"leduc_poker: players must be 2, got {players!r}")
        unknown = set(spec.params) - {"players"}
        if unknown:
            raise ConfigurationError(f"leduc_poker: unknown parameters {sorted(unknown)}")
        super().__init__(spec)
        self.ante = 1
        self.raise_sizes = (2, 4)
        self.max_raises = 2
        self.payoff_range = float(self.ante + self.max_raises * sum(self.raise_sizes))

    def _root(self):
        return _World(actions=((), ()))

    def _player(self, w: _World):
        if w.folder is not None or w.showdown:
            return TERMINAL
        if len(w.private) < 2:
            return CHANCE
        if w.round == 1 and w.public is None:
            return CHANCE
        return len(w.actions[w.round]) % 2

    def _legal(self, w: _World):
        player = len(w.actions[w.round]) % 2
        moves = []
        if w.contrib[player] < max(w.contrib):
            moves.append(FOLD)
        moves.append(CALL)
        if w.raises < self.max_raises:
            moves.append(RAISE)
        return moves

    def _chance(self, w: _World):
        used = set(w.private)
        remaining = [c for c in range(6) if c not in used]
        p = 1.0 / len(remaining)
        return [(card_label(c), p) for c in remaining]

    def _next(self, w: _World, index: int):
        if self._player(w) == CHANCE:
            used = set(w.private)
            card = [c for c in range(6) if c not in used][index]
            if len(w.private) < 2:
                return replace(w, private=w.private + (card,))
            return replace(w, public=card)
        player = len(w.actions[w.round]) % 2
        move = self._legal(w)[index]
        acts = list(w.actions)
        acts[w.round] = acts[w.round] + (move[0],)
        w = replace(w, actions=tuple(acts))
        if move == FOLD:
            return replace(w, folder=player)
        contrib = list(w.contrib)
        stakes = max(contrib)
        if move == RAISE:
            contrib[player] = stakes + self.raise_sizes[w.round]
            return replace(w, contrib=tuple(contrib), raises=w.raises + 1)
        contrib[player] = stakes
        w = replace(w, contrib=tuple(contrib))
        if len(acts[w.round]) >= 2:
            if w.round == 1:
                return replace(w, showdown=True)
            return replace(w, round=1, raises=0)
        return w

    def _returns(self, w: _World):
        if w.folder is not None:
            winner = 1 - w.folder
        else:
            ranks = [c // 2 for c in w.private]
            board = w.public // 2
            strength = [(r == board, r) for r in ranks]
            if strength[0] == strength[1]:
                return (0.0, 0.0)
            winner = 0 if strength[0] > strength[1] else 1
        won = float(w.contrib[1 - winner])
        return (won, -won) if winner == 0 else (-won, won)

    def _info(self, w: _World, player: int):
        public = card_label(w.public) if w.public is not None else "-"
        bets = "".join(w.actions[0]) + "/" + "".join(w.actions[1])
        return f"{card_label(w.private[player])}|{public}|{bets}"
