"""Two-player Battleship on a small grid.

Players alternately place their ships (placement is a decision), then
alternately shoot, player 0 first. A shooter learns hit (H), water (W) or
sunk (S); the target sees where the shot landed. The game stops when one
fleet is fully sunk or both players have used their shots. Each player's
payoff is the value of enemy ships it sank minus the value of its own ships
that were sunk.
"""

from __future__ import annotations

import ast

from .base import TERMINAL, ConfigurationError, Game, GameSpec

DEFAULTS = {
    "board_width": 2,
    "board_height": 2,
    "ship_sizes": [2],
    "ship_values": [2],
    "num_shots": 3,
    "allow_repeated_shots": False,
}


def _as_list(value, field):
    if isinstance(value, str):
        value = ast.literal_eval(value.replace(";", ","))
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return [v for v in value]
    except TypeError:
        raise ConfigurationError(f"battleship: {field} must be a list, got {value!r}") from None


class Battleship(Game):
    name = "battleship"

    def __init__(self, spec: GameSpec | None = None):
        spec = spec or GameSpec("battleship")
        unknown = set(spec.params) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"battleship: unknown parameters {sorted(unknown)}")
        p = {**DEFAULTS, **spec.params}
        self.width = int(p["board_width"])
        self.height = int(p["board_height"])
        self.ship_sizes = [int(s) for s in _as_list(p["ship_sizes"], "ship_sizes")]
        self.ship_values = [float(v) for v in _as_list(p["ship_values"], "ship_values")]
        self.num_shots = int(p["num_shots"])
        self.allow_repeats = bool(p["allow_repeated_shots"])
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("battleship: board dimensions must be positive")
        if len(self.ship_sizes) != len(self.ship_values) or not self.ship_sizes:
            raise ConfigurationError("battleship: ship_sizes and ship_values must be non-empty and equal length")
        if any(s < 1 or s > max(self.width, self.height) for s in self.ship_sizes):
            raise ConfigurationError("battleship: every ship must fit on the board")
        if any(v <= 0 for v in self.ship_values):
            raise ConfigurationError("battleship: ship_values must be positive")
        if self.num_shots < 1:
            raise ConfigurationError("battleship: num_shots must be >= 1")
        if not self.allow_repeats and self.num_shots > self.width * self.height:
            raise ConfigurationError("battleship: num_shots exceeds board cells without repeated shots")
        super().__init__(GameSpec("battleship", p))
        self.payoff_range = float(sum(self.ship_values))
        self.max_depth = 2 * len(self.ship_sizes) + 2 * self.num_shots

    # world: (placements per player: tuple of frozensets of cells, shots: tuple of (player, cell))
    def _root(self):
        return (((), ()), ())

    def _placement_turn(self, world):
        placements, _ = world
        placed = len(placements[0]) + len(placements[1])
        if placed < 2 * len(self.ship_sizes):
            return placed % 2, placed // 2
        return None

    def _sunk_value(self, world, target):
        """Total value of ``target``'s ships that are fully hit."""
        placements, shots = world
        hits = {cell for shooter, cell in shots if shooter != target}
        return sum(v for ship, v in zip(placements[target], self.ship_values) if ship <= hits)

    def _player(self, world):
        turn = self._placement_turn(world)
        if turn is not None:
            return turn[0]
        _, shots = world
        if shots:
            if self._sunk_value(world, 0) == sum(self.ship_values) or self._sunk_value(world, 1) == sum(self.ship_values):
                return TERMINAL
        if len(shots) >= 2 * self.num_shots:
            return TERMINAL
        return len(shots) % 2

    def _cell_label(self, cell):
        return f"{cell // self.width}_{cell % self.width}"

    def _placements(self, world):
        player, ship = self._placement_turn(world)
        size = self.ship_sizes[ship]
        occupied = set().union(*world[0][player])
        options = []
        for orient in "hv":
            for r in range(self.height):
                for c in range(self.width):
                    if orient == "h":
                        cells = [r * self.width + c + k for k in range(size)] if c + size <= self.width else None
                    else:
                        cells = [(r + k) * self.width + c for k in range(size)] if r + size <= self.height else None
                    if cells is None or occupied.intersection(cells):
                        continue
                    options.append((f"{orient}_{r}_{c}", frozenset(cells)))
        return options

    def _shots(self, world):
        _, shots = world
        player = len(shots) % 2
        taken = {cell for shooter, cell in shots if shooter == player}
        return [c for c in range(self.width * self.height) if self.allow_repeats or c not in taken]

    def _legal(self, world):
        if self._placement_turn(world) is not None:
            return [label for label, _ in self._placements(world)]
        return ["s_" + self._cell_label(c) for c in self._shots(world)]

    def _chance(self, world):
        raise AssertionError("battleship has no chance nodes")

    def _next(self, world, index):
        placements, shots = world
        turn = self._placement_turn(world)
        if turn is not None:
            player, _ = turn
            _, cells = self._placements(world)[index]
            new = list(placements)
            new[player] = new[player] + (cells,)
            return (tuple(new), shots)
        player = len(shots) % 2
        return (placements, shots + ((player, self._shots(world)[index]),))

    def _returns(self, world):
        u0 = self._sunk_value(world, 1) - self._sunk_value(world, 0)
        return (float(u0), float(-u0))

    def _info(self, world, player):
        placements, shots = world
        parts = []
        for cells in placements[player]:
            parts.append("p" + "".join(self._cell_label(c) + "." for c in sorted(cells)).rstrip("."))
        enemy = placements[1 - player]
        fired: set[int] = set()
        for shooter, cell in shots:
            if shooter == player:
                before = self._sunk_count(enemy, fired)
                fired.add(cell)
                if self._sunk_count(enemy, fired) > before:
                    mark = "S"
                elif any(cell in ship for ship in enemy):
                    mark = "H"
                else:
                    mark = "W"
                parts.append(f"s{self._cell_label(cell)}:{mark}")
            else:
                parts.append(f"o{self._cell_label(cell)}")
        return "/" + "/".join(parts)

    @staticmethod
    def _sunk_count(ships, hits):
        return sum(1 for ship in ships if ship <= hits)
