from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from li_patrol.gridmap import (
    CellCoord,
    GridMap,
    MapParseError,
    default_map,
    default_map_text,
    neighbors,
    parse_map,
    serialize_map,
)

SQ2 = math.sqrt(2.0)


def test_minimal_map():
    g = parse_map("0.1")
    assert (g.width, g.height) == (3, 1)
    assert g.waypoint_cells == ((0, 0), (2, 0))
    assert g.start_cells == ()


def test_single_obstacle():
    g = parse_map("0#1")
    assert g.waypoint_cells == ((0, 0), (2, 0))
    assert g.is_blocked((1, 0))
    assert not g.is_blocked((0, 0))


def test_waypoints_ordered_by_label_not_position():
    g = parse_map("2.0\n.1.\nb.a\n")
    assert g.waypoint_cells == ((2, 0), (1, 1), (0, 0))
    assert g.start_cells == ((2, 2), (0, 2))


def test_default_map_round_trip():
    text = default_map_text()
    g = parse_map(text)
    assert len(g.waypoint_cells) == 4
    assert len(g.start_cells) == 6
    assert serialize_map(g) == text
    assert parse_map(serialize_map(g)) == g


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("0.!", 1, 3),
        ("0..\n.?1", 2, 2),
        ("0.1\n..", 2, 3),
    ],
)
def test_parse_error_location(text, line, column):
    with pytest.raises(MapParseError) as err:
        parse_map(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_duplicate_waypoint_label():
    with pytest.raises(MapParseError, match="duplicate"):
        parse_map("0.0")


def test_no_waypoints():
    with pytest.raises(MapParseError, match="no waypoints"):
        parse_map("..a")


def test_waypoint_on_blocked_cell_rejected():
    with pytest.raises(ValueError):
        GridMap.from_rows(["#.."], waypoints=[(0, 0)])
    with pytest.raises(ValueError):
        GridMap.from_rows(["..#"], waypoints=[(0, 0)], starts=[(2, 0)])


def test_interior_neighbors():
    g = GridMap.empty(5, 5)
    nb = neighbors(g, (2, 2))
    assert len(nb) == 8
    assert sorted(c for _, c in nb) == [1.0] * 4 + [SQ2] * 4


def test_corner_neighbors():
    assert len(neighbors(GridMap.empty(5, 5), (0, 0))) == 3


def test_blocked_orthogonal_neighbor():
    g = GridMap.from_rows([".....", ".....", "..#..", ".....", "....."])
    nb = neighbors(g, (2, 1))
    assert len(nb) == 7
    assert CellCoord(2, 2) not in [c for c, _ in nb]


def test_diagonal_squeeze_allowed():
    g = GridMap.from_rows([".#", "#."])
    assert neighbors(g, (0, 0)) == [(CellCoord(1, 1), SQ2)]


@pytest.mark.parametrize("cell", [(-1, 0), (5, 0), (0, 5)])
def test_neighbors_out_of_bounds(cell):
    with pytest.raises(ValueError):
        neighbors(GridMap.empty(5, 5), cell)


def test_neighbors_of_blocked_cell():
    with pytest.raises(ValueError):
        neighbors(GridMap.from_rows(["#."]), (0, 0))


@st.composite
def grids(draw, max_side=9):
    w = draw(st.integers(1, max_side))
    h = draw(st.integers(1, max_side))
    cells = draw(st.lists(st.booleans(), min_size=w * h, max_size=w * h))
    free = [(i % w, i // w) for i, b in enumerate(cells) if not b]
    if not free:
        cells[0] = False
        free = [(0, 0)]
    order = draw(st.permutations(free))
    n_wp = draw(st.integers(1, min(10, len(order))))
    n_st = draw(st.integers(0, min(26, len(order) - n_wp)))
    rows = ["".join("#" if cells[y * w + x] else "." for x in range(w)) for y in range(h)]
    return GridMap.from_rows(rows, waypoints=order[:n_wp], starts=order[n_wp:n_wp + n_st])


@settings(max_examples=200, deadline=None)
@given(grids())
def test_round_trip_property(g):
    assert parse_map(serialize_map(g)) == g


@settings(max_examples=200, deadline=None)
@given(grids())
def test_neighbors_free_and_symmetric(g):
    for y in range(g.height):
        for x in range(g.width):
            if g.is_blocked((x, y)):
                continue
            for n, cost in neighbors(g, (x, y)):
                assert g.is_free(n)
                assert max(abs(n.x - x), abs(n.y - y)) == 1
                back = dict(neighbors(g, n))
                assert back[CellCoord(x, y)] == cost


def test_default_map_loads(office_map):
    assert office_map == default_map()
    assert all(office_map.is_free(c) for c in office_map.waypoint_cells + office_map.start_cells)
