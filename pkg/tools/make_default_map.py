"""Regenerate src/li_patrol/data/default_map.txt.

The layout is a small open-plan office: outer walls, a central block of
desks that the patrol loop runs around, two side rooms with doorways and a
few pillars. Waypoints 0-3 sit at the corners of the loop; start cells a-f
are spread over the rooms and corridors.

    python tools/make_default_map.py [--scale 2.0] [--out PATH]
"""

from __future__ import annotations

import argparse
from pathlib import Path

BASE_W, BASE_H = 400, 260


def build(scale: float = 2.0) -> str:
    def s(v: float) -> int:
        return int(round(v * scale))

    w, h = s(BASE_W), s(BASE_H)
    grid = [["." for _ in range(w)] for _ in range(h)]

    def block(x0, y0, x1, y1):
        for y in range(max(0, s(y0)), min(h, s(y1))):
            for x in range(max(0, s(x0)), min(w, s(x1))):
                grid[y][x] = "#"

    def clear(x0, y0, x1, y1):
        for y in range(max(0, s(y0)), min(h, s(y1))):
            for x in range(max(0, s(x0)), min(w, s(x1))):
                grid[y][x] = "."

    # outer walls
    block(0, 0, BASE_W, 3)
    block(0, BASE_H - 3, BASE_W, BASE_H)
    block(0, 0, 3, BASE_H)
    block(BASE_W - 3, 0, BASE_W, BASE_H)

    # central desk island, split by a narrow gap the route does not use
    block(100, 75, 190, 185)
    block(210, 75, 300, 185)
    block(190, 75, 210, 120)
    block(190, 140, 210, 185)

    # west meeting room with a doorway onto the loop
    block(3, 100, 45, 103)
    block(3, 160, 45, 163)
    block(42, 100, 45, 163)
    clear(42, 120, 45, 140)

    # east kitchen
    block(355, 95, 397, 98)
    block(355, 165, 397, 168)
    block(355, 95, 358, 168)
    clear(355, 118, 358, 145)

    # north wall offices
    block(130, 3, 133, 30)
    block(265, 3, 268, 30)

    # pillars and furniture in the corridors
    block(150, 35, 160, 45)
    block(240, 215, 250, 225)
    block(65, 120, 75, 140)
    block(325, 120, 335, 140)

    # a table in the central gap
    block(193, 122, 207, 138)

    waypoints = [(55, 40), (345, 40), (345, 220), (55, 220)]
    starts = [(200, 15), (20, 130), (380, 130), (200, 245), (110, 20), (290, 240)]
    for i, (x, y) in enumerate(waypoints):
        grid[s(y)][s(x)] = str(i)
    for i, (x, y) in enumerate(starts):
        grid[s(y)][s(x)] = chr(ord("a") + i)
    return "\n".join("".join(r) for r in grid) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=2.0)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/li_patrol/data/default_map.txt")
    args = ap.parse_args()
    args.out.write_text(build(args.scale), encoding="utf-8")


if __name__ == "__main__":
    main()
