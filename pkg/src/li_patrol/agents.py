"""Robot state, belief memory and the latent-inhibition scan rule."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .gridmap import CellCoord

UNKNOWN = -1


@dataclass(frozen=True)
class Belief:
    """What a robot remembers about one target.

    ``value`` is None until the target has been scanned at least once.
    """

    value: int | None = None
    step: int | None = None

    @property
    def unknown(self) -> bool:
        return self.value is None


class BeliefStore:
    """Last observed reward per target.

    One store per robot when robots do not communicate; a single store
    referenced by every robot when they do.
    """

    def __init__(self, n_targets: int, shared: bool = False):
        self.shared = shared
        self._values = [UNKNOWN] * n_targets
        self._steps = [-1] * n_targets

    def __len__(self):
        return len(self._values)

    def __getitem__(self, target_id: int) -> Belief:
        v = self._values[target_id]
        if v == UNKNOWN:
            return Belief()
        return Belief(v, self._steps[target_id])

    def value_of(self, target_id: int) -> int:
        """Raw last-observed value, or ``UNKNOWN`` (-1)."""
        return self._values[target_id]

    def record(self, target_id: int, value: int, step: int) -> None:
        self._values[target_id] = value
        self._steps[target_id] = step

    def snapshot(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self._values, self._steps))


def record_observation(store: BeliefStore, target_id: int, value: int, step: int) -> BeliefStore:
    store.record(target_id, value, step)
    return store


def check_li(li: float) -> float:
    li = float(li)
    if not 0.0 <= li <= 1.0:
        raise ValueError(f"latent inhibition must be in [0, 1], got {li}")
    return li


def rescan_probability(li: float) -> float:
    return 1.0 - check_li(li)


def decide_scan(belief, li: float, rng: random.Random) -> bool:
    """Whether to scan a target given what is believed about it.

    Unknown and last-rewarding targets are always scanned. A target last
    seen unrewarding is rescanned with probability ``1 - li``; only this
    branch draws from ``rng`` (exactly once).
    """
    p = rescan_probability(li)
    value = belief.value if isinstance(belief, Belief) else belief
    if value is None or value == UNKNOWN or value == 1:
        return True
    return rng.random() < p


class Phase(Enum):
    IDLE = "idle"
    TRAVELLING = "travelling"
    SCANNING = "scanning"
    BLOCKED = "blocked"


@dataclass(eq=False)
class Robot:
    """Mutable per-trial robot state.

    Positions and paths are held as flat cell indices for the step loop;
    ``pos`` gives the coordinate view.
    """

    id: int
    li: float
    cell: int
    width: int
    store: BeliefStore
    route_index: int = 0
    phase: Phase = Phase.IDLE
    path: tuple[int, ...] = ()
    path_costs: tuple[float, ...] = ()
    path_pos: int = 0
    scan_target: int = -1
    steps_remaining: int = 0
    pending_slots: list[int] = field(default_factory=list)
    block_cell: int = -1
    block_count: int = 0
    avoid: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.li = check_li(self.li)

    @property
    def pos(self) -> CellCoord:
        return CellCoord(self.cell % self.width, self.cell // self.width)


def advance_route(robot: Robot, route) -> CellCoord:
    """Move the robot's route pointer to the next waypoint and return it."""
    robot.route_index = (robot.route_index + 1) % len(route.waypoints)
    return route.waypoints[robot.route_index]
