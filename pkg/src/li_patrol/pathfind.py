"""A* shortest paths on the 8-connected grid with octile costs."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .gridmap import SQRT2, CellCoord, GridMap

_OCTILE_K = SQRT2 - 2.0


class UnreachableError(RuntimeError):
    pass


@dataclass(frozen=True)
class Path:
    cells: tuple[CellCoord, ...]
    total_cost: float

    @property
    def n_transitions(self) -> int:
        return len(self.cells) - 1


def path_cost(cells) -> float:
    """Canonical cost of a cell sequence: n_orthogonal + n_diagonal * sqrt(2).

    Summing by move type (rather than in path order) makes the cost of two
    equally long paths bit-identical.
    """
    n_orth = n_diag = 0
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        if x0 != x1 and y0 != y1:
            n_diag += 1
        else:
            n_orth += 1
    return n_orth + n_diag * SQRT2


def _check_endpoint(grid: GridMap, c, name: str):
    if not grid.in_bounds(c):
        raise ValueError(f"{name} {tuple(c)} is out of bounds")
    if grid.is_blocked(c):
        raise ValueError(f"{name} {tuple(c)} is blocked")


def _astar(grid: GridMap, src: int, dst: int, extra_blocked: frozenset[int]) -> list[int] | None:
    w, h = grid.width, grid.height
    blocked = grid.blocked
    gx, gy = dst % w, dst // w

    g = {src: 0.0}
    parent = {src: -1}
    closed = set()
    sx, sy = src % w, src // w
    dx, dy = abs(sx - gx), abs(sy - gy)
    # Heap key: lowest f, then highest g, then row-major (y, x) order.
    heap = [((dx + dy) + _OCTILE_K * min(dx, dy), -0.0, src)]
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        _, neg_g, cur = pop(heap)
        if cur in closed:
            continue
        if cur == dst:
            out = []
            while cur != -1:
                out.append(cur)
                cur = parent[cur]
            out.reverse()
            return out
        closed.add(cur)
        cg = -neg_g
        cx, cy = cur % w, cur // w
        for ddy in (-1, 0, 1):
            ny = cy + ddy
            if ny < 0 or ny >= h:
                continue
            row = ny * w
            for ddx in (-1, 0, 1):
                if ddx == 0 and ddy == 0:
                    continue
                nx = cx + ddx
                if nx < 0 or nx >= w:
                    continue
                n = row + nx
                if blocked[n] or n in closed or n in extra_blocked:
                    continue
                ng = cg + (SQRT2 if ddx and ddy else 1.0)
                old = g.get(n)
                if old is not None and ng >= old:
                    continue
                g[n] = ng
                parent[n] = cur
                ex, ey = abs(nx - gx), abs(ny - gy)
                push(heap, (ng + (ex + ey) + _OCTILE_K * (ex if ex < ey else ey), -ng, n))
    return None


_CACHE_LIMIT = 8192
_cache: dict = {}


def _plan_cached(grid: GridMap, src: int, dst: int, extra_blocked: frozenset[int]):
    key = (grid, src, dst, extra_blocked)
    hit = _cache.get(key, _cache)
    if hit is not _cache:
        return hit
    cells = _astar(grid, src, dst, extra_blocked)
    if cells is None:
        planned = None
    else:
        w = grid.width
        costs = tuple(
            SQRT2 if (a % w != b % w and a // w != b // w) else 1.0 for a, b in zip(cells, cells[1:])
        )
        planned = tuple(cells), costs
    if len(_cache) >= _CACHE_LIMIT:
        _cache.clear()
    _cache[key] = planned
    return planned


def export_path_cache(grid: GridMap) -> dict:
    """Cached plans for ``grid`` without temporary obstacles (for seeding worker processes)."""
    return {k[1:3]: v for k, v in _cache.items() if k[0] == grid and not k[3]}


def import_path_cache(grid: GridMap, entries: dict) -> None:
    for (src, dst), planned in entries.items():
        _cache[(grid, src, dst, frozenset())] = planned


def plan_indices(
    grid: GridMap, src: int, dst: int, extra_blocked: frozenset[int] = frozenset()
) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Flat-index form of :func:`plan_path` for the engine's inner loop.

    Returns the cell indices and the cost of each transition.
    """
    planned = _plan_cached(grid, src, dst, extra_blocked)
    if planned is None:
        raise UnreachableError(f"no path from {tuple(grid.coord(src))} to {tuple(grid.coord(dst))}")
    return planned


def plan_path(grid: GridMap, start, goal, extra_blocked=()) -> Path:
    """Minimum-cost path from ``start`` to ``goal`` (both inclusive).

    ``extra_blocked`` lists cells to treat as obstacles for this query only.
    Raises :class:`UnreachableError` if the goal cannot be reached.
    """
    _check_endpoint(grid, start, "start")
    _check_endpoint(grid, goal, "goal")
    extra = frozenset(grid.index(c) for c in extra_blocked)
    idx, _ = plan_indices(grid, grid.index(start), grid.index(goal), extra)
    cells = tuple(grid.coord(i) for i in idx)
    return Path(cells, path_cost(cells))


def route_adjacency(grid: GridMap, waypoints) -> np.ndarray:
    """W x W matrix of shortest-path costs between waypoints."""
    waypoints = [CellCoord(*c) for c in waypoints]
    if len(waypoints) < 2:
        raise ValueError("need at least 2 waypoints")
    n = len(waypoints)
    adj = np.zeros((n, n))
    for i, a in enumerate(waypoints):
        for j, b in enumerate(waypoints):
            if i == j:
                continue
            try:
                adj[i, j] = plan_path(grid, a, b).total_cost
            except UnreachableError as exc:
                raise UnreachableError(f"waypoint {i} {tuple(a)} cannot reach waypoint {j} {tuple(b)}") from exc
    return adj
