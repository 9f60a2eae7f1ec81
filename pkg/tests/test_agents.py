from __future__ import annotations

import random

import pytest

from li_patrol.agents import (
    UNKNOWN,
    Belief,
    BeliefStore,
    Robot,
    advance_route,
    decide_scan,
    record_observation,
    rescan_probability,
)
from li_patrol.gridmap import GridMap
from li_patrol.world import PatrolRoute


class CountingRandom(random.Random):
    def __init__(self, seed):
        super().__init__(seed)
        self.draws = 0

    def random(self):
        self.draws += 1
        return super().random()


@pytest.mark.parametrize("li", [0.0, 0.5, 0.95, 1.0])
def test_unknown_and_rewarding_always_scanned(li):
    rng = CountingRandom(0)
    assert decide_scan(Belief(), li, rng)
    assert decide_scan(Belief(1, 3), li, rng)
    assert decide_scan(UNKNOWN, li, rng)
    assert rng.draws == 0


def test_li_one_never_rescans():
    rng = random.Random(0)
    assert not any(decide_scan(Belief(0, 1), 1.0, rng) for _ in range(1000))


@pytest.mark.parametrize("li", [0.0, 0.5, 0.95, 1.0])
def test_rescan_frequency(li):
    rng = CountingRandom(int(li * 100))
    hits = sum(decide_scan(Belief(0, 1), li, rng) for _ in range(10_000))
    assert abs(hits / 10_000 - (1 - li)) <= 0.03
    assert rng.draws == 10_000


def test_invalid_li():
    with pytest.raises(ValueError):
        decide_scan(Belief(), 1.5, random.Random(0))
    with pytest.raises(ValueError):
        rescan_probability(-0.1)


def test_record_observation():
    store = BeliefStore(4)
    assert store[2].unknown
    record_observation(store, 2, 0, 10)
    assert store[2] == Belief(0, 10)
    record_observation(store, 2, 1, 15)
    assert store[2] == Belief(1, 15)
    assert store.value_of(3) == UNKNOWN


def test_shared_store_visible_to_other_robot():
    shared = BeliefStore(16, shared=True)
    a = Robot(0, 0.95, 0, 10, shared)
    b = Robot(1, 1.0, 1, 10, shared)
    record_observation(a.store, 5, 1, 3)
    assert decide_scan(b.store[5], b.li, random.Random(0))
    record_observation(a.store, 6, 0, 4)
    assert not decide_scan(b.store[6], b.li, random.Random(0))


def test_private_stores_are_independent():
    a = Robot(0, 0.5, 0, 10, BeliefStore(8))
    b = Robot(1, 0.5, 1, 10, BeliefStore(8))
    record_observation(a.store, 1, 1, 0)
    assert b.store[1].unknown


def test_advance_route():
    g = GridMap.empty(6, 6, waypoints=[(0, 0), (5, 0), (5, 5), (0, 5)])
    route = PatrolRoute.from_grid(g)
    r = Robot(0, 0.5, 0, 6, BeliefStore(16), route_index=3)
    assert advance_route(r, route) == (0, 0) and r.route_index == 0
    assert advance_route(r, route) == (5, 0) and r.route_index == 1
    for _ in range(4):
        advance_route(r, route)
    assert r.route_index == 1


def test_robot_pos_and_li_check():
    r = Robot(0, 0.5, 23, 10, BeliefStore(4))
    assert r.pos == (3, 2)
    with pytest.raises(ValueError):
        Robot(0, 2.0, 0, 10, BeliefStore(4))
