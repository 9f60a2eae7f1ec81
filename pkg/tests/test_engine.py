from __future__ import annotations

import random

import pytest

from li_patrol import engine
from li_patrol.engine import (
    EVENT_HEADER,
    OccupancyError,
    Simulation,
    TrialConfig,
    read_event_log,
    run_trial,
    write_event_log,
)
from li_patrol.gridmap import parse_map
from li_patrol.world import init_rewards


def corridor(length: int):
    """Single-row map: start, waypoint 0, ``length`` cells of corridor, waypoint 1."""
    return parse_map("a0" + "." * (length - 1) + "1")


def kinds(events, robot=None, kind=None):
    return [e for e in events if (robot is None or e.robot_id == robot) and (kind is None or e.event_kind == kind)]


def test_corridor_takes_five_movement_steps():
    res = run_trial(TrialConfig(corridor(100), (1.0,), horizon=200))
    arrivals = kinds(res.events, 0, "arrive")
    assert arrivals[0].value == 0 and arrivals[1].value == 1
    left = max(e.step for e in kinds(res.events, 0, "scan_done") if e.step < arrivals[1].step)
    assert arrivals[1].step - left == 5


def test_scan_holds_cell_for_six_steps():
    sim = Simulation(TrialConfig(corridor(10), (0.5,), horizon=100))
    cells = []
    for _ in range(40):
        sim.step()
        cells.append(sim.robots[0].cell)
    starts = kinds(sim.events, 0, "scan_start")
    dones = kinds(sim.events, 0, "scan_done")
    first = starts[0].step
    assert dones[0].step == first + 6
    assert dones[0].target_id == starts[0].target_id
    assert len(set(cells[first:first + 7])) == 1


def test_blocked_robot_retries_after_three_steps():
    grid = parse_map("..........\n0ab......1\n..........\n")
    sim = Simulation(TrialConfig(grid, (1.0, 1.0), horizon=40))
    positions = []
    for _ in range(12):
        sim.step()
        positions.append(sim.robots[1].cell)
    blocked = [e.step for e in kinds(sim.events, 1, "blocked")]
    assert blocked[:4] == [0, 3, 6, 9]
    assert all(e.value == 0 for e in kinds(sim.events, 1, "blocked"))
    assert len(set(positions[:12])) == 1
    assert sim.collisions == 4


def hand_total(rewards, horizon):
    """Reward of one li=1 robot on the two-waypoint corridor, walked through by hand.

    It reaches waypoint 0 on step 0; every scan takes 6 steps; the 9-cell hop
    between waypoints takes one step. On a first visit all four targets are
    scanned, afterwards only those known to be rewarding.
    """
    t, wp, seen, total = 0, 0, set(), 0
    while t < horizon:
        slots = range(4) if wp not in seen else [s for s in range(4) if rewards[4 * wp + s]]
        seen.add(wp)
        for s in slots:
            t += 6
            if t < horizon:
                total += rewards[4 * wp + s]
        t += 1
        wp = 1 - wp
    return total


@pytest.mark.parametrize("env_seed", range(6))
def test_hand_simulated_tiny_map(env_seed):
    grid = parse_map("0a.......1")
    res = run_trial(TrialConfig(grid, (1.0,), env_seed=env_seed, horizon=300))
    rewards = init_rewards(8, env_seed).rewards
    assert res.total_reward == hand_total(rewards, 300)
    assert res.rescans_of_unrewarding == 0


def test_rejects_bad_configs(office_map):
    with pytest.raises(ValueError):
        TrialConfig(office_map, (0.5,), horizon=0)
    with pytest.raises(ValueError):
        TrialConfig(office_map, ())
    with pytest.raises(ValueError):
        TrialConfig(office_map, (1.2,))
    with pytest.raises(ValueError):
        Simulation(TrialConfig(office_map, (0.5,) * 7))


def test_unreachable_waypoint():
    with pytest.raises(RuntimeError):
        run_trial(TrialConfig(parse_map("0a#1"), (0.5,)))


def test_step_past_horizon():
    sim = Simulation(TrialConfig(corridor(5), (0.5,), horizon=3))
    sim.run()
    with pytest.raises(RuntimeError):
        sim.step()


def test_deterministic(office_map):
    cfg = TrialConfig(office_map, (0.5, 0.95, 0.95, 0.5), comm_enabled=True, n_shifts=3, env_seed=2, trial_seed=17)
    assert run_trial(cfg) == run_trial(cfg)
    assert run_trial(cfg).events == run_trial(cfg).events


def test_result_invariants(office_map):
    res = run_trial(TrialConfig(office_map, (0.5, 0.95, 0.5), n_shifts=1, trial_seed=3))
    ts = res.reward_timeseries
    assert len(ts) == 1300
    assert all(a <= b for a, b in zip(ts, ts[1:]))
    assert ts[-1] == res.total_reward <= res.scan_count
    assert res.total_reward == sum(e.value for e in res.events if e.event_kind == "scan_done")


def test_scans_only_at_current_waypoint(office_map):
    res = run_trial(TrialConfig(office_map, (0.5, 0.95), trial_seed=8))
    at = {}
    for e in res.events:
        if e.event_kind == "arrive":
            at[e.robot_id] = e.value
        elif e.event_kind == "scan_start":
            assert e.target_id // 4 == at[e.robot_id]


def test_li_zero_scans_everything(office_map):
    res = run_trial(TrialConfig(office_map, (0.0,), horizon=1300))
    events = [e for e in res.events if e.event_kind in ("arrive", "scan_start")]
    i = 0
    while i < len(events):
        assert events[i].event_kind == "arrive"
        following = events[i + 1:i + 5]
        if i + 5 <= len(events):
            assert [e.target_id % 4 for e in following] == [0, 1, 2, 3]
        i += 5


def test_li_one_never_rescans_unrewarding(office_map):
    res = run_trial(TrialConfig(office_map, (1.0, 1.0, 1.0), n_shifts=3, trial_seed=4))
    assert res.rescans_of_unrewarding == 0


def test_shift_events_balanced(office_map):
    res = run_trial(TrialConfig(office_map, (0.5,), n_shifts=3, trial_seed=5))
    shifts = kinds(res.events, -1, "shift")
    assert sorted({e.step for e in shifts}) == [325, 650, 975]
    for step in (325, 650, 975):
        vals = [e.value for e in shifts if e.step == step]
        assert sorted(vals) == [0] * 4 + [1] * 4


def test_comm_shares_one_store(office_map):
    sim = Simulation(TrialConfig(office_map, (0.5, 0.95, 0.95), comm_enabled=True))
    assert sim.robots[0].store is sim.robots[1].store is sim.robots[2].store
    for _ in range(300):
        sim.step()
        snaps = sim.belief_snapshots()
        assert snaps[0] == snaps[1] == snaps[2]


def test_private_stores_only_reflect_own_scans(office_map):
    sim = Simulation(TrialConfig(office_map, (0.5, 0.5, 0.5), comm_enabled=False, trial_seed=2))
    sim.run()
    for robot in sim.robots:
        own = {e.target_id: e.value for e in sim.events if e.robot_id == robot.id and e.event_kind == "scan_done"}
        known = {t: v for t, (v, _) in enumerate(robot.store.snapshot()) if v != -1}
        assert known == own


def test_occupancy_over_random_trials(office_map):
    rng = random.Random(31337)
    for _ in range(100):
        n = rng.randint(1, 6)
        cfg = TrialConfig(
            office_map,
            tuple(rng.choice([0.0, 0.5, 0.95, 1.0, rng.random()]) for _ in range(n)),
            comm_enabled=rng.random() < 0.5,
            n_shifts=rng.choice([0, 1, 3]),
            env_seed=rng.randrange(1000),
            trial_seed=rng.randrange(2**31),
        )
        run_trial(cfg, record_events=False, check_invariants=True)


def test_occupancy_check_detects_violation(office_map):
    sim = Simulation(TrialConfig(office_map, (0.5, 0.5)), check_invariants=True)
    sim.step()
    sim.robots[1].cell = sim.robots[0].cell
    with pytest.raises(OccupancyError):
        sim._check_occupancy()


def test_head_on_contention_resolves():
    # two robots start facing each other in a 2-wide corridor
    grid = parse_map("0........1\n.a......b.\n")
    res = run_trial(TrialConfig(grid, (0.5, 0.5), horizon=400), check_invariants=True)
    assert len(kinds(res.events, 0, "arrive")) > 5
    assert len(kinds(res.events, 1, "arrive")) > 5


def test_rescan_rate_matches_policy(office_map, monkeypatch):
    calls = {"zero": 0}
    real = engine.decide_scan

    def counting(belief, li, rng):
        if belief == 0:
            calls["zero"] += 1
        return real(belief, li, rng)

    monkeypatch.setattr(engine, "decide_scan", counting)
    rescans = 0
    for seed in range(50):
        res = run_trial(TrialConfig(office_map, (0.95,) * 6, comm_enabled=True, trial_seed=seed), record_events=False)
        rescans += res.rescans_of_unrewarding
    expected = 0.05 * calls["zero"]
    assert expected > 100
    assert abs(rescans / expected - 1) <= 0.2


def test_event_log_round_trip(tmp_path, office_map):
    res = run_trial(TrialConfig(office_map, (0.5, 0.95), n_shifts=1))
    path = tmp_path / "events.csv"
    write_event_log(res.events, path)
    assert path.read_text().splitlines()[0] == ",".join(EVENT_HEADER)
    assert tuple(read_event_log(path)) == res.events
