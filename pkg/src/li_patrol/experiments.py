"""Parameter sweeps over group size, LI composition, communication and shifts."""

from __future__ import annotations

import csv
import json
import logging
import re
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .engine import Simulation, TrialConfig, run_trial
from .gridmap import GridMap, default_map, load_map
from .pathfind import export_path_cache, import_path_cache

log = logging.getLogger(__name__)

CSV_HEADER = (
    "n_robots",
    "composition",
    "comm",
    "shifts",
    "repetition",
    "env_seed",
    "trial_seed",
    "total_reward",
    "scan_count",
    "rescans_unrewarding",
    "collision_delays",
)
TIMESERIES_HEADER = ("step", "cumulative_reward")
PARTIAL_CSV = "results.partial.csv"
RESUME_MANIFEST = "resume.json"

_LABEL_RE = re.compile(r"(?:(\d+)L)?(?:(\d+)H)?")


class ExperimentError(RuntimeError):
    pass


def composition_label(n_low: int, n_high: int) -> str:
    return (f"{n_low}L" if n_low else "") + (f"{n_high}H" if n_high else "")


def parse_label(label: str) -> tuple[int, int]:
    """``"1L3H"`` -> (1, 3)."""
    m = _LABEL_RE.fullmatch(label)
    if not m or not label:
        raise ValueError(f"bad composition label {label!r}")
    return int(m.group(1) or 0), int(m.group(2) or 0)


def default_compositions(n: int) -> list[str]:
    """All-low, single high, 50/50, single low, all-high (deduplicated), most-low first."""
    if n < 1:
        raise ValueError("group size must be >= 1")
    lows = [n, n - 1, n // 2 if n % 2 == 0 else None, 1, 0]
    out = []
    for n_low in lows:
        if n_low is None or n_low < 0:
            continue
        label = composition_label(n_low, n - n_low)
        if label not in out:
            out.append(label)
    return out


@dataclass
class ExperimentGrid:
    group_sizes: tuple[int, ...] = (1, 2, 4, 6)
    li_low: float = 0.5
    li_high: float = 0.95
    comm_options: tuple[bool, ...] = (True, False)
    shift_options: tuple[int, ...] = (0, 1, 3)
    repetitions: int = 10
    base_trial_seed: int = 0
    env_seed: int = 0
    horizon: int = 1300
    map_path: str | None = None
    # optional override, group size -> labels
    compositions: dict[int, list[str]] | None = None

    def __post_init__(self):
        self.group_sizes = tuple(int(n) for n in self.group_sizes)
        self.comm_options = tuple(bool(c) for c in self.comm_options)
        self.shift_options = tuple(int(s) for s in self.shift_options)
        if self.compositions is not None:
            self.compositions = {int(k): list(v) for k, v in self.compositions.items()}

    def compositions_for(self, n: int) -> list[str]:
        if self.compositions and n in self.compositions:
            labels = self.compositions[n]
            for lbl in labels:
                if sum(parse_label(lbl)) != n:
                    raise ValueError(f"composition {lbl!r} does not have {n} robots")
            return labels
        return default_compositions(n)

    def li_values(self, label: str) -> tuple[float, ...]:
        n_low, n_high = parse_label(label)
        return (self.li_low,) * n_low + (self.li_high,) * n_high

    def load_map(self) -> GridMap:
        return load_map(self.map_path) if self.map_path else default_map()

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentGrid":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrialSpec:
    """Identifiers of one trial in a sweep. ``index`` is its position in the expansion."""

    index: int
    n_robots: int
    composition: str
    comm: bool
    shifts: int
    repetition: int
    env_seed: int
    trial_seed: int
    li_values: tuple[float, ...]
    horizon: int = 1300

    @property
    def key(self) -> str:
        return f"{self.n_robots}|{self.composition}|{self.comm_label}|{self.shifts}|{self.repetition}"

    @property
    def comm_label(self) -> str:
        return "on" if self.comm else "off"

    def config(self, grid_map: GridMap) -> TrialConfig:
        return TrialConfig(
            map=grid_map,
            li_values=self.li_values,
            comm_enabled=self.comm,
            n_shifts=self.shifts,
            env_seed=self.env_seed,
            trial_seed=self.trial_seed,
            horizon=self.horizon,
        )


@dataclass(frozen=True)
class TrialRecord:
    spec: TrialSpec
    total_reward: int
    scan_count: int
    rescans_unrewarding: int
    collision_delays: int
    reward_timeseries: tuple[int, ...] = field(default=(), repr=False)

    def row(self) -> tuple:
        s = self.spec
        return (
            s.n_robots,
            s.composition,
            s.comm_label,
            s.shifts,
            s.repetition,
            s.env_seed,
            s.trial_seed,
            self.total_reward,
            self.scan_count,
            self.rescans_unrewarding,
            self.collision_delays,
        )


def trial_seed_for(base: int, key: str) -> int:
    # crc32 is stable across processes and Python versions, unlike hash().
    return (base + zlib.crc32(key.encode("utf-8"))) & 0x7FFFFFFF


def expand_grid(grid: ExperimentGrid) -> list[TrialSpec]:
    if not grid.group_sizes:
        raise ValueError("group_sizes is empty")
    if grid.repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    specs = []
    for n in grid.group_sizes:
        for label in grid.compositions_for(n):
            li = grid.li_values(label)
            for comm in grid.comm_options:
                for shifts in grid.shift_options:
                    for rep in range(grid.repetitions):
                        key = f"{n}|{label}|{'on' if comm else 'off'}|{shifts}|{rep}"
                        specs.append(
                            TrialSpec(
                                index=len(specs),
                                n_robots=n,
                                composition=label,
                                comm=comm,
                                shifts=shifts,
                                repetition=rep,
                                env_seed=grid.env_seed,
                                trial_seed=trial_seed_for(grid.base_trial_seed, key),
                                li_values=li,
                                horizon=grid.horizon,
                            )
                        )
    return specs


def run_spec(spec: TrialSpec, grid_map: GridMap) -> TrialRecord:
    res = run_trial(spec.config(grid_map), record_events=False)
    return TrialRecord(
        spec,
        res.total_reward,
        res.scan_count,
        res.rescans_of_unrewarding,
        res.collision_delays,
        res.reward_timeseries,
    )


_worker_map: GridMap | None = None


def _init_worker(grid_map: GridMap, cache: dict) -> None:
    global _worker_map
    _worker_map = grid_map
    import_path_cache(grid_map, cache)


def _run_chunk(specs: Sequence[TrialSpec]) -> list[TrialRecord]:
    return [run_spec(s, _worker_map) for s in specs]


def _warm_paths(grid_map: GridMap, specs: Sequence[TrialSpec]) -> dict:
    n_max = max(s.n_robots for s in specs)
    Simulation(TrialConfig(grid_map, (0.5,) * n_max), record_events=False)
    return export_path_cache(grid_map)


def write_csv(records: Sequence[TrialRecord], path: str | Path) -> None:
    records = sorted(records, key=lambda r: r.spec.index)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())


def timeseries_name(spec: TrialSpec) -> str:
    return f"{spec.composition}_{spec.comm_label}_{spec.shifts}_{spec.repetition}.csv"


def write_timeseries(records: Sequence[TrialRecord], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for r in records:
        if not r.reward_timeseries:
            continue  # recovered from a partial run
        with open(directory / timeseries_name(r.spec), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TIMESERIES_HEADER)
            w.writerows(enumerate(r.reward_timeseries, start=1))


def read_timeseries(path: str | Path) -> list[int]:
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if tuple(header) != TIMESERIES_HEADER:
            raise ValueError(f"unexpected timeseries header in {path}")
        return [int(v) for _, v in rows]


def _read_partial(out_dir: Path, specs_by_key: dict[str, TrialSpec]) -> list[TrialRecord]:
    out = []
    with open(out_dir / PARTIAL_CSV, newline="") as fh:
        for r in csv.DictReader(fh):
            key = f"{r['n_robots']}|{r['composition']}|{r['comm']}|{r['shifts']}|{r['repetition']}"
            spec = specs_by_key.get(key)
            if spec is None or int(r["trial_seed"]) != spec.trial_seed:
                continue
            out.append(
                TrialRecord(
                    spec,
                    int(r["total_reward"]),
                    int(r["scan_count"]),
                    int(r["rescans_unrewarding"]),
                    int(r["collision_delays"]),
                )
            )
    return out


def run_experiment(
    grid: ExperimentGrid,
    jobs: int = 1,
    out_dir: str | Path | None = None,
    resume: bool = False,
    grid_map: GridMap | None = None,
    chunk_size: int = 10,
) -> list[TrialRecord]:
    """Run every trial of ``grid``; results are ordered by expansion index.

    Output does not depend on ``jobs``. If ``out_dir`` is given and a worker
    fails, completed records are flushed to ``results.partial.csv`` together
    with ``resume.json`` and :class:`ExperimentError` is raised; calling again
    with ``resume=True`` skips the trials already recorded there. Records
    recovered from a partial file carry no timeseries.
    """
    grid_map = grid_map or grid.load_map()
    specs = expand_grid(grid)
    out_dir = Path(out_dir) if out_dir is not None else None

    done: list[TrialRecord] = []
    if resume and out_dir is not None and (out_dir / PARTIAL_CSV).exists():
        done = _read_partial(out_dir, {s.key: s for s in specs})
        finished = {r.spec.index for r in done}
        todo = [s for s in specs if s.index not in finished]
        log.info("resuming: %d of %d trials already done", len(done), len(specs))
    else:
        todo = specs

    chunks = [todo[i:i + chunk_size] for i in range(0, len(todo), chunk_size)]
    records = list(done)
    try:
        if jobs <= 1:
            for chunk in chunks:
                records.extend(run_spec(s, grid_map) for s in chunk)
        elif chunks:
            cache = _warm_paths(grid_map, specs)
            with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(grid_map, cache)) as pool:
                futures = [pool.submit(_run_chunk, c) for c in chunks]
                for fut in as_completed(futures):
                    records.extend(fut.result())
    except Exception as exc:
        if out_dir is not None:
            _flush_partial(records, specs, out_dir, exc)
        raise ExperimentError(f"experiment failed after {len(records)} of {len(specs)} trials: {exc}") from exc

    records.sort(key=lambda r: r.spec.index)
    return records


def _flush_partial(records, specs, out_dir: Path, exc: BaseException) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(records, out_dir / PARTIAL_CSV)
    finished = {r.spec.index for r in records}
    manifest = {
        "completed": len(finished),
        "total": len(specs),
        "remaining": [s.key for s in specs if s.index not in finished],
        "error": repr(exc),
    }
    (out_dir / RESUME_MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    log.error("partial results written to %s", out_dir / PARTIAL_CSV)
