"""Discrete-time patrol simulation.

Each step: apply a scheduled reward shift (if any), then let every robot act
in ascending id order, then record the cumulative reward. A robot acts
according to its phase:

* scanning -- count down; when done, score the target against the current
  reward table, update beliefs, then decide on the next target at this
  waypoint or head for the next waypoint;
* blocked -- count down; when done, retry the move that was refused;
* travelling -- walk along the planned path spending at most
  ``move_budget`` cost units. Entering an occupied cell puts the robot into
  the blocked phase for ``block_steps`` steps.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .agents import BeliefStore, Phase, Robot, check_li, decide_scan
from .gridmap import GridMap
from .pathfind import UnreachableError, plan_indices
from .world import (
    TARGETS_PER_WAYPOINT,
    PatrolRoute,
    RewardTable,
    choose_flips,
    flip_targets,
    init_rewards,
    shift_times,
)

log = logging.getLogger(__name__)

EVENT_HEADER = ("step", "robot_id", "event_kind", "target_id", "value")


class Event(NamedTuple):
    """One event-log record; -1 marks fields that do not apply.

    ``value`` holds the observed reward for ``scan_done``, the new reward
    for ``shift``, the waypoint index for ``arrive`` and the id of the
    occupying robot for ``blocked``.
    """

    step: int
    robot_id: int
    event_kind: str
    target_id: int
    value: int


@dataclass(frozen=True)
class TrialConfig:
    map: GridMap
    li_values: tuple[float, ...]
    comm_enabled: bool = False
    n_shifts: int = 0
    env_seed: int = 0
    trial_seed: int = 0
    horizon: int = 1300
    move_budget: float = 20.0
    scan_steps: int = 6
    block_steps: int = 3
    replan_after: int = 5

    def __post_init__(self):
        object.__setattr__(self, "li_values", tuple(check_li(v) for v in self.li_values))
        if not self.li_values:
            raise ValueError("at least one robot is required")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.move_budget <= 0:
            raise ValueError("move_budget must be positive")
        if self.scan_steps < 1 or self.block_steps < 1:
            raise ValueError("scan_steps and block_steps must be >= 1")
        if self.n_shifts < 0:
            raise ValueError("n_shifts must be >= 0")

    @property
    def n_robots(self) -> int:
        return len(self.li_values)


@dataclass(frozen=True)
class TrialResult:
    total_reward: int
    reward_timeseries: tuple[int, ...]
    scan_count: int
    rescans_of_unrewarding: int
    collision_delays: int
    events: tuple[Event, ...] = field(default=(), repr=False)


class OccupancyError(AssertionError):
    pass


class Simulation:
    """Mutable state of one trial. Not thread-safe; one instance per trial."""

    def __init__(self, config: TrialConfig, record_events: bool = True, check_invariants: bool = False):
        grid = config.map
        self.config = config
        self.grid = grid
        self.route = PatrolRoute.from_grid(grid)
        n_wp = len(self.route)
        if n_wp == 0:
            raise ValueError("map has no waypoints")
        if config.n_robots > len(grid.start_cells):
            raise ValueError(
                f"{config.n_robots} robots requested but the map has {len(grid.start_cells)} start cells"
            )
        self.record_events = record_events
        self.check_invariants = check_invariants

        self.reward_table: RewardTable = init_rewards(TARGETS_PER_WAYPOINT * n_wp, config.env_seed)
        self.schedule = shift_times(config.horizon, config.n_shifts)
        self._shift_steps = set(self.schedule.shift_steps)
        self.rng = random.Random(config.trial_seed)
        self._wp_cells = [grid.index(c) for c in self.route.waypoints]

        n_targets = TARGETS_PER_WAYPOINT * n_wp
        if config.comm_enabled:
            shared = BeliefStore(n_targets, shared=True)
            self.stores = [shared]
        else:
            self.stores = [BeliefStore(n_targets) for _ in range(config.n_robots)]

        self.step_index = 0
        self.total_reward = 0
        self.scan_count = 0
        self.rescans = 0
        self.collisions = 0
        self.timeseries: list[int] = []
        self.events: list[Event] = []
        self.occupancy: dict[int, int] = {}
        self.robots: list[Robot] = []

        for i, li in enumerate(config.li_values):
            start = grid.index(grid.start_cells[i])
            store = self.stores[0] if config.comm_enabled else self.stores[i]
            robot = Robot(i, li, start, grid.width, store)
            robot.route_index = self._nearest_waypoint(start)
            self._set_path(robot, plan_indices(grid, start, self._wp_cells[robot.route_index]))
            self.occupancy[start] = i
            self.robots.append(robot)

    def _nearest_waypoint(self, cell: int) -> int:
        best, best_cost = None, None
        for j, wp in enumerate(self._wp_cells):
            try:
                _, costs = plan_indices(self.grid, cell, wp)
            except UnreachableError:
                continue
            cost = sum(costs)
            if best_cost is None or cost < best_cost - 1e-9:
                best, best_cost = j, cost
        if best is None:
            raise UnreachableError(f"start cell {tuple(self.grid.coord(cell))} cannot reach any waypoint")
        return best

    def _set_path(self, robot: Robot, planned) -> None:
        robot.path, robot.path_costs = planned
        robot.path_pos = 0
        robot.phase = Phase.TRAVELLING

    def _emit(self, robot_id: int, kind: str, target: int = -1, value: int = -1) -> None:
        if self.record_events:
            self.events.append(Event(self.step_index, robot_id, kind, target, value))

    @property
    def done(self) -> bool:
        return self.step_index >= self.config.horizon

    def step(self) -> None:
        if self.done:
            raise RuntimeError(f"trial already ran its {self.config.horizon} steps")
        if self.step_index in self._shift_steps:
            flips = choose_flips(self.reward_table, self.rng)
            self.reward_table = flip_targets(self.reward_table, flips)
            for t in flips:
                self._emit(-1, "shift", t, self.reward_table.rewards[t])

        for robot in self.robots:
            phase = robot.phase
            if phase is Phase.SCANNING:
                robot.steps_remaining -= 1
                if robot.steps_remaining == 0:
                    self._complete_scan(robot)
            elif phase is Phase.TRAVELLING:
                self._move(robot)
            elif phase is Phase.BLOCKED:
                robot.steps_remaining -= 1
                if robot.steps_remaining == 0:
                    robot.phase = Phase.TRAVELLING
                    self._move(robot)

        if self.check_invariants:
            self._check_occupancy()
        self.step_index += 1
        self.timeseries.append(self.total_reward)

    def _check_occupancy(self) -> None:
        cells = [r.cell for r in self.robots]
        if len(set(cells)) != len(cells):
            raise OccupancyError(f"two robots share a cell at step {self.step_index}: {cells}")
        if self.occupancy != {r.cell: r.id for r in self.robots}:
            raise OccupancyError(f"occupancy map out of sync at step {self.step_index}")

    def _move(self, robot: Robot) -> None:
        budget = self.config.move_budget
        path, costs = robot.path, robot.path_costs
        i = robot.path_pos
        last = len(path) - 1
        occ = self.occupancy
        while i < last:
            cost = costs[i]
            if budget < cost:
                break
            nxt = path[i + 1]
            other = occ.get(nxt)
            if other is not None:
                robot.path_pos = i
                self._block(robot, nxt, other)
                return
            del occ[robot.cell]
            occ[nxt] = robot.id
            robot.cell = nxt
            budget -= cost
            i += 1
            robot.block_cell = -1
            robot.block_count = 0
        robot.path_pos = i
        if i == last:
            self._arrive(robot)

    def _block(self, robot: Robot, cell: int, other: int) -> None:
        self.collisions += 1
        if robot.block_cell == cell:
            robot.block_count += 1
        else:
            robot.block_cell = cell
            robot.block_count = 1
        self._emit(robot.id, "blocked", -1, other)
        robot.phase = Phase.BLOCKED
        robot.steps_remaining = self.config.block_steps
        goal = robot.path[-1]
        if robot.block_count >= self.config.replan_after and cell != goal:
            # Detour around persistently occupied cells. Avoided cells accumulate until the
            # robot reaches its goal, so it cannot oscillate between two occupied neighbours.
            # The goal cell itself can only be waited for.
            avoid = robot.avoid | {cell}
            try:
                planned = plan_indices(self.grid, robot.cell, goal, frozenset(avoid))
            except UnreachableError:
                avoid = {cell}
                try:
                    planned = plan_indices(self.grid, robot.cell, goal, frozenset(avoid))
                except UnreachableError:
                    return
            robot.avoid = avoid
            robot.path, robot.path_costs = planned
            robot.path_pos = 0
            robot.block_count = 0
            robot.block_cell = -1
            log.debug("robot %d replanned around %d cells at step %d", robot.id, len(avoid), self.step_index)

    def _arrive(self, robot: Robot) -> None:
        self._emit(robot.id, "arrive", -1, robot.route_index)
        robot.avoid = set()
        robot.pending_slots = list(range(TARGETS_PER_WAYPOINT))
        self._next_target(robot)

    def _next_target(self, robot: Robot) -> None:
        base = TARGETS_PER_WAYPOINT * robot.route_index
        store = robot.store
        while robot.pending_slots:
            target = base + robot.pending_slots.pop(0)
            belief = store.value_of(target)
            if decide_scan(belief, robot.li, self.rng):
                if belief == 0:
                    self.rescans += 1
                robot.phase = Phase.SCANNING
                robot.scan_target = target
                robot.steps_remaining = self.config.scan_steps
                self._emit(robot.id, "scan_start", target, -1)
                return
        robot.route_index = self.route.next_index(robot.route_index)
        self._set_path(robot, plan_indices(self.grid, robot.cell, self._wp_cells[robot.route_index]))

    def _complete_scan(self, robot: Robot) -> None:
        target = robot.scan_target
        value = self.reward_table.rewards[target]
        self.total_reward += value
        self.scan_count += 1
        robot.store.record(target, value, self.step_index)
        robot.scan_target = -1
        self._emit(robot.id, "scan_done", target, value)
        self._next_target(robot)

    def run(self) -> "TrialResult":
        while not self.done:
            self.step()
        return self.result()

    def result(self) -> TrialResult:
        return TrialResult(
            total_reward=self.total_reward,
            reward_timeseries=tuple(self.timeseries),
            scan_count=self.scan_count,
            rescans_of_unrewarding=self.rescans,
            collision_delays=self.collisions,
            events=tuple(self.events),
        )

    def belief_snapshots(self):
        return [r.store.snapshot() for r in self.robots]


def run_trial(config: TrialConfig, record_events: bool = True, check_invariants: bool = False) -> TrialResult:
    """Run one trial to its horizon. Output is a pure function of ``config``."""
    return Simulation(config, record_events=record_events, check_invariants=check_invariants).run()


def write_event_log(events, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        w.writerows(events)


def read_event_log(path: str | Path) -> list[Event]:
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if tuple(header) != EVENT_HEADER:
            raise ValueError(f"unexpected event log header {header}")
        return [Event(int(s), int(r), k, int(t), int(v)) for s, r, k, t, v in rows]


__all__ = [
    "Event",
    "OccupancyError",
    "Simulation",
    "TrialConfig",
    "TrialResult",
    "read_event_log",
    "run_trial",
    "write_event_log",
]
