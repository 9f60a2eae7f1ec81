"""Occupancy grid and the ASCII map format.

Map files are plain text, one row per line, all rows the same length:

    .      free cell
    #      blocked cell
    0-9    waypoint cell; the digit gives its position in the patrol cycle
    a-z    robot start cell; robot ``i`` starts on the ``(i mod count)``-th letter

Waypoint and start cells are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

SQRT2 = math.sqrt(2.0)

FREE = "."
BLOCKED = "#"

# (dx, dy) in a fixed order so neighbour lists are reproducible.
OFFSETS = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)


class MapParseError(ValueError):
    """Raised for malformed map text. Carries 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class CellCoord(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridMap:
    """Immutable occupancy grid.

    ``blocked`` is a row-major byte string (1 = blocked), which keeps the
    grid hashable so planned paths can be cached per map.
    """

    width: int
    height: int
    blocked: bytes
    waypoint_cells: tuple[CellCoord, ...] = ()
    start_cells: tuple[CellCoord, ...] = ()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        if len(self.blocked) != self.width * self.height:
            raise ValueError("blocked mask size does not match width*height")
        for c in (*self.waypoint_cells, *self.start_cells):
            if not self.in_bounds(c):
                raise ValueError(f"cell {tuple(c)} out of bounds")
            if self.is_blocked(c):
                raise ValueError(f"waypoint/start cell {tuple(c)} is blocked")

    @classmethod
    def empty(cls, width: int, height: int, waypoints=(), starts=()) -> "GridMap":
        return cls(
            width,
            height,
            bytes(width * height),
            tuple(CellCoord(*c) for c in waypoints),
            tuple(CellCoord(*c) for c in starts),
        )

    @classmethod
    def from_rows(cls, rows, waypoints=(), starts=()) -> "GridMap":
        """Build from rows of booleans/ints (truthy = blocked) or strings (``#`` = blocked)."""
        rows = [[ch == BLOCKED for ch in r] if isinstance(r, str) else list(r) for r in rows]
        height = len(rows)
        width = len(rows[0]) if height else 0
        mask = bytes(1 if v else 0 for r in rows for v in r)
        return cls(
            width,
            height,
            mask,
            tuple(CellCoord(*c) for c in waypoints),
            tuple(CellCoord(*c) for c in starts),
        )

    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_blocked(self, c) -> bool:
        return self.blocked[c[1] * self.width + c[0]] == 1

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and not self.is_blocked(c)

    def index(self, c) -> int:
        return c[1] * self.width + c[0]

    def coord(self, idx: int) -> CellCoord:
        return CellCoord(idx % self.width, idx // self.width)

    @property
    def n_free(self) -> int:
        return self.blocked.count(0)


def neighbors(grid: GridMap, c) -> list[tuple[CellCoord, float]]:
    """Free cells in the 8-neighbourhood of ``c`` with their move costs.

    Diagonal moves are allowed even when both flanking orthogonal cells are
    blocked.
    """
    if not grid.in_bounds(c):
        raise ValueError(f"cell {tuple(c)} is out of bounds")
    if grid.is_blocked(c):
        raise ValueError(f"cell {tuple(c)} is blocked")
    x, y = c
    out = []
    for dx, dy in OFFSETS:
        n = CellCoord(x + dx, y + dy)
        if grid.is_free(n):
            out.append((n, SQRT2 if dx and dy else 1.0))
    return out


def parse_map(text: str) -> GridMap:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapParseError("map is empty")
    width = len(lines[0])
    if width == 0:
        raise MapParseError("first row is empty", 1, 1)

    mask = bytearray()
    waypoints: dict[int, CellCoord] = {}
    starts: dict[str, CellCoord] = {}
    for y, line in enumerate(lines):
        if len(line) != width:
            raise MapParseError(
                f"row has length {len(line)}, expected {width}", y + 1, min(len(line), width) + 1
            )
        for x, ch in enumerate(line):
            if ch == BLOCKED:
                mask.append(1)
                continue
            if ch == FREE:
                pass
            elif ch.isdigit() and ch.isascii():
                label = int(ch)
                if label in waypoints:
                    raise MapParseError(f"duplicate waypoint label {ch!r}", y + 1, x + 1)
                waypoints[label] = CellCoord(x, y)
            elif "a" <= ch <= "z":
                if ch in starts:
                    raise MapParseError(f"duplicate start label {ch!r}", y + 1, x + 1)
                starts[ch] = CellCoord(x, y)
            else:
                raise MapParseError(f"unexpected character {ch!r}", y + 1, x + 1)
            mask.append(0)

    if not waypoints:
        raise MapParseError("map has no waypoints")
    return GridMap(
        width,
        len(lines),
        bytes(mask),
        tuple(waypoints[k] for k in sorted(waypoints)),
        tuple(starts[k] for k in sorted(starts)),
    )


def serialize_map(grid: GridMap) -> str:
    """Inverse of :func:`parse_map`.

    Labels are reassigned from list order, so at most 10 waypoints and 26
    start cells can be written.
    """
    if len(grid.waypoint_cells) > 10:
        raise ValueError("at most 10 waypoints can be serialized")
    if len(grid.start_cells) > 26:
        raise ValueError("at most 26 start cells can be serialized")
    chars = [BLOCKED if b else FREE for b in grid.blocked]
    for i, c in enumerate(grid.waypoint_cells):
        chars[grid.index(c)] = str(i)
    for i, c in enumerate(grid.start_cells):
        chars[grid.index(c)] = chr(ord("a") + i)
    w = grid.width
    rows = ("".join(chars[r * w:(r + 1) * w]) for r in range(grid.height))
    return "\n".join(rows) + "\n"


def load_map(path: str | Path) -> GridMap:
    return parse_map(Path(path).read_text(encoding="utf-8"))


def default_map_text() -> str:
    return resources.files("li_patrol").joinpath("data/default_map.txt").read_text(encoding="utf-8")


def default_map() -> GridMap:
    """The bundled office-like map: 4 waypoints on a loop and 6 start cells."""
    return parse_map(default_map_text())
