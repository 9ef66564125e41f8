"""Liar's dice with two players and one die each.

Bids are (quantity, face) pairs ordered quantity-major; each bid must exceed
the previous one. After the first bid a player may call "Liar" instead. The
highest face is wild. The bidder wins if at least ``quantity`` dice show the
bid face (or the wild face), otherwise the caller wins.
"""

from __future__ import annotations

from .base import CHANCE, TERMINAL, ConfigurationError, Game, GameSpec

LIAR = "Liar"


class LiarsDice(Game):
    name = "liars_dice"
    payoff_range = 1.0

    def __init__(self, spec: GameSpec | None = None):
        spec = spec or GameSpec("liars_dice")
        params = dict(spec.params)
        players = params.pop("players", 2)
        dice = params.pop("numdice", 1)
        sides = params.pop("dice_sides", 6)
        if params:
            raise ConfigurationError(f"liars_dice: unknown parameters {sorted(params)}")
        if players != 2 or dice != 1 or sides != 6:
            raise ConfigurationError("liars_dice: only 2 players, 1 die each, 6 sides are supported")
        super().__init__(spec)
        self.sides = sides
        self.total_dice = 2 * dice
        self.num_bids = self.total_dice * sides
        self.max_depth = 2 + self.num_bids + 1

    def bid_label(self, bid: int) -> str:
        return f"{bid // self.sides + 1}-{bid % self.sides + 1}"

    # world: (dice tuple, bids tuple, called)
    def _root(self):
        return ((), (), False)

    def _player(self, world):
        dice, bids, called = world
        if len(dice) < 2:
            return CHANCE
        if called:
            return TERMINAL
        return len(bids) % 2

    def _legal_codes(self, world):
        _, bids, _ = world
        start = bids[-1] + 1 if bids else 0
        codes = list(range(start, self.num_bids))
        if bids:
            codes.append(self.num_bids)
        return codes

    def _legal(self, world):
        return [LIAR if c == self.num_bids else self.bid_label(c) for c in self._legal_codes(world)]

    def _chance(self, world):
        return [(str(face), 1.0 / self.sides) for face in range(1, self.sides + 1)]

    def _next(self, world, index):
        dice, bids, called = world
        if len(dice) < 2:
            return (dice + (index + 1,), bids, called)
        code = self._legal_codes(world)[index]
        if code == self.num_bids:
            return (dice, bids, True)
        return (dice, bids + (code,), called)

    def _returns(self, world):
        dice, bids, _ = world
        last = bids[-1]
        quantity, face = last // self.sides + 1, last % self.sides + 1
        matches = sum(1 for d in dice if d == face or d == self.sides)
        bidder = (len(bids) - 1) % 2
        winner = bidder if matches >= quantity else 1 - bidder
        return (1.0, -1.0) if winner == 0 else (-1.0, 1.0)

    def _info(self, world, player):
        dice, bids, _ = world
        return f"{dice[player]}|" + ",".join(self.bid_label(b) for b in bids)
