"""Kuhn poker: three cards, one card each, one betting round."""

from __future__ import annotations

from itertools import permutations

from .base import CHANCE, TERMINAL, Game, GameSpec

CARDS = "JQK"
DEALS = list(permutations(range(3), 2))
PASS, BET = 0, 1

# terminal betting sequences -> (kind, stake); kind: showdown or winner index
_TERMINALS = {
    "pp": ("showdown", 1),
    "bp": (0, 1),
    "bb": ("showdown", 2),
    "pbp": (1, 1),
    "pbb": ("showdown", 2),
}


class KuhnPoker(Game):
    name = "kuhn_poker"
    payoff_range = 2.0
    max_depth = 4

    def __init__(self, spec: GameSpec | None = None):
        super().__init__(spec or GameSpec("kuhn_poker"))

    # world: (deal or None, betting string)
    def _root(self):
        return (None, "")

    def _player(self, world):
        deal, bets = world
        if deal is None:
            return CHANCE
        if bets in _TERMINALS:
            return TERMINAL
        return len(bets) % 2

    def _legal(self, world):
        return ("pass", "bet")

    def _chance(self, world):
        return [(CARDS[a] + CARDS[b], 1 / 6) for a, b in DEALS]

    def _next(self, world, index):
        deal, bets = world
        if deal is None:
            return (DEALS[index], "")
        return (deal, bets + "pb"[index])

    def _returns(self, world):
        deal, bets = world
        kind, stake = _TERMINALS[bets]
        if kind == "showdown":
            winner = 0 if deal[0] > deal[1] else 1
        else:
            winner = kind
        u0 = stake if winner == 0 else -stake
        return (float(u0), float(-u0))

    def _info(self, world, player):
        deal, bets = world
        return f"{CARDS[deal[player]]}|{bets}"
