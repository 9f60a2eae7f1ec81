"""Targets, ground-truth rewards, shift schedule and the cyclic patrol route."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .gridmap import CellCoord, GridMap
from .pathfind import route_adjacency

TARGETS_PER_WAYPOINT = 4


@dataclass(frozen=True)
class Target:
    id: int
    waypoint_index: int
    slot: int

    @classmethod
    def from_id(cls, target_id: int) -> "Target":
        return cls(target_id, target_id // TARGETS_PER_WAYPOINT, target_id % TARGETS_PER_WAYPOINT)


def targets_for(n_waypoints: int) -> list[Target]:
    return [Target.from_id(i) for i in range(TARGETS_PER_WAYPOINT * n_waypoints)]


@dataclass(frozen=True)
class RewardTable:
    rewards: tuple[int, ...]

    def __len__(self):
        return len(self.rewards)

    @property
    def n_rewarding(self) -> int:
        return sum(self.rewards)

    def rewarding(self) -> list[int]:
        return [i for i, v in enumerate(self.rewards) if v]

    def unrewarding(self) -> list[int]:
        return [i for i, v in enumerate(self.rewards) if not v]


@dataclass(frozen=True)
class ShiftSchedule:
    shift_steps: tuple[int, ...]

    @property
    def n_shifts(self) -> int:
        return len(self.shift_steps)


def init_rewards(n_targets: int, env_seed: int) -> RewardTable:
    """Mark a random half of the targets as rewarding, fixed by ``env_seed``."""
    if n_targets < 0 or n_targets % 2:
        raise ValueError(f"n_targets must be a non-negative even number, got {n_targets}")
    rng = random.Random(env_seed)
    chosen = set(rng.sample(range(n_targets), n_targets // 2))
    return RewardTable(tuple(1 if i in chosen else 0 for i in range(n_targets)))


def shift_times(horizon: int, n_shifts: int) -> ShiftSchedule:
    """Steps at which the reward table changes.

    A single shift happens at T/3; two or more are spaced at k*T/(S+1).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n_shifts < 0:
        raise ValueError("n_shifts must be >= 0")
    if n_shifts == 0:
        steps = ()
    elif n_shifts == 1:
        steps = (horizon // 3,)
    else:
        steps = tuple(k * horizon // (n_shifts + 1) for k in range(1, n_shifts + 1))
    if any(s <= 0 or s >= horizon for s in steps) or any(a >= b for a, b in zip(steps, steps[1:])):
        raise ValueError(f"horizon {horizon} too short for {n_shifts} distinct shifts")
    return ShiftSchedule(steps)


def flip_targets(table: RewardTable, target_ids) -> RewardTable:
    ids = set(target_ids)
    return RewardTable(tuple(1 - v if i in ids else v for i, v in enumerate(table.rewards)))


def choose_flips(table: RewardTable, rng: random.Random) -> list[int]:
    """Pick n/4 unrewarding and n/4 rewarding targets to flip (sorted ids)."""
    n = len(table)
    if n % 4:
        raise ValueError(f"cannot balance a shift over {n} targets (need a multiple of 4)")
    rewarding = table.rewarding()
    if len(rewarding) * 2 != n:
        raise ValueError("reward table is not half rewarding")
    k = n // 4
    up = rng.sample(table.unrewarding(), k)
    down = rng.sample(rewarding, k)
    return sorted(up + down)


def apply_shift(table: RewardTable, rng: random.Random) -> RewardTable:
    """Flip half the targets: a quarter become rewarding, a quarter stop."""
    return flip_targets(table, choose_flips(table, rng))


def truth_at(target_id: int, table: RewardTable) -> int:
    if not 0 <= target_id < len(table.rewards):
        raise IndexError(f"invalid target id {target_id}")
    return table.rewards[target_id]


@dataclass(frozen=True, eq=False)
class PatrolRoute:
    """Closed route through all waypoints in label order."""

    waypoints: tuple[CellCoord, ...]
    adjacency: np.ndarray
    cyclic: bool = True

    @classmethod
    def from_grid(cls, grid: GridMap) -> "PatrolRoute":
        wps = tuple(grid.waypoint_cells)
        if len(wps) >= 2:
            adj = route_adjacency(grid, wps)
        else:
            adj = np.zeros((len(wps), len(wps)))
        return cls(wps, adj)

    def __len__(self):
        return len(self.waypoints)

    def next_index(self, index: int) -> int:
        return (index + 1) % len(self.waypoints)

    @property
    def cycle_length(self) -> float:
        n = len(self.waypoints)
        return float(sum(self.adjacency[i, (i + 1) % n] for i in range(n)))
