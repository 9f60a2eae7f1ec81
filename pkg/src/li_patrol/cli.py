"""``li-patrol`` command line: simulate, experiment, stats, plot."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .engine import TrialConfig, run_trial, write_event_log
from .experiments import (
    CSV_HEADER,
    PARTIAL_CSV,
    RESUME_MANIFEST,
    ExperimentGrid,
    TrialSpec,
    TrialRecord,
    composition_label,
    expand_grid,
    run_experiment,
    write_csv,
    write_timeseries,
)
from .gridmap import default_map, load_map
from .plotting import plot_experiment
from .stats import read_records, tukey_report

log = logging.getLogger("li_patrol")

MANIFEST_NAME = "manifest.json"
_EXPERIMENT_ARTIFACTS = ("results.csv", "timeseries", "stats", MANIFEST_NAME, PARTIAL_CSV, RESUME_MANIFEST)


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    artifacts: list[str] = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0

    def write(self, out_dir: Path) -> Path:
        path = out_dir / MANIFEST_NAME
        self.artifacts = sorted(set(self.artifacts))
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _li_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _prepare_out(out: Path, force: bool = True) -> None:
    """Create ``out`` and confirm it is writable; refuse non-empty dirs unless ``force``."""
    if out.exists() and not out.is_dir():
        raise CliError(f"{out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        raise CliError(f"{out} is not empty; pass --force to overwrite")
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=out):
            pass
    except OSError as exc:
        raise CliError(f"output directory {out} is not writable: {exc}") from exc


def _rel(paths, root: Path) -> list[str]:
    return [str(Path(p).relative_to(root)) for p in paths]


def cmd_simulate(args) -> None:
    li = args.li if args.li is not None else [0.5] * args.robots
    if len(li) != args.robots:
        raise CliError(f"--li has {len(li)} values but --robots is {args.robots}")
    grid_map = load_map(args.map) if args.map else default_map()
    config = TrialConfig(
        map=grid_map,
        li_values=tuple(li),
        comm_enabled=args.comm,
        n_shifts=args.shifts,
        env_seed=args.env_seed,
        trial_seed=args.seed,
        horizon=args.steps,
    )
    out = Path(args.out)
    _prepare_out(out)
    t0 = time.perf_counter()
    result = run_trial(config)

    # robots below the midpoint of the default low/high LI pair count as "L"
    grid_defaults = ExperimentGrid()
    n_low = sum(1 for v in li if v < (grid_defaults.li_low + grid_defaults.li_high) / 2)
    label = composition_label(n_low, len(li) - n_low)
    spec = TrialSpec(0, len(li), label, args.comm, args.shifts, 0, args.env_seed, args.seed, tuple(li), args.steps)
    record = TrialRecord(
        spec,
        result.total_reward,
        result.scan_count,
        result.rescans_of_unrewarding,
        result.collision_delays,
        result.reward_timeseries,
    )
    write_csv([record], out / "results.csv")
    write_event_log(result.events, out / "events.csv")
    write_timeseries([record], out / "timeseries")
    manifest = RunManifest(
        "simulate",
        {
            "map": args.map or "<default>",
            "li_values": list(li),
            "comm": args.comm,
            "shifts": args.shifts,
            "steps": args.steps,
            "seed": args.seed,
            "env_seed": args.env_seed,
        },
        ["results.csv", "events.csv", f"timeseries/{label}_{spec.comm_label}_{args.shifts}_0.csv"],
        duration_s=round(time.perf_counter() - t0, 3),
    )
    manifest.write(out)
    print(f"total_reward={result.total_reward} scans={result.scan_count} collisions={result.collision_delays}")


def cmd_experiment(args) -> None:
    grid = ExperimentGrid.from_json(args.grid) if args.grid else ExperimentGrid()
    if args.repetitions is not None:
        grid.repetitions = args.repetitions
    expand_grid(grid)  # validate before touching the filesystem
    out = Path(args.out)
    _prepare_out(out, force=args.force or args.resume)
    if args.force and not args.resume:
        for name in _EXPERIMENT_ARTIFACTS:
            old = out / name
            if old.is_dir():
                shutil.rmtree(old)
            elif old.exists():
                old.unlink()

    t0 = time.perf_counter()
    records = run_experiment(grid, jobs=args.jobs, out_dir=out, resume=args.resume)
    write_csv(records, out / "results.csv")
    write_timeseries(records, out / "timeseries")
    for name in (PARTIAL_CSV, RESUME_MANIFEST):
        (out / name).unlink(missing_ok=True)
    report = tukey_report(read_records(out / "results.csv"), out / "stats")
    artifacts = ["results.csv", "timeseries/", "stats/summary.txt"]
    artifacts += _rel(sorted((out / "stats").glob("tukey_*.csv")), out)
    RunManifest(
        "experiment",
        {"grid": grid.to_dict(), "jobs": args.jobs},
        artifacts,
        duration_s=round(time.perf_counter() - t0, 3),
    ).write(out)
    print(f"{len(records)} trials written to {out / 'results.csv'}; {len(report)} Tukey cells")


def cmd_stats(args) -> None:
    if not 0 < args.alpha < 1:
        raise CliError("--alpha must be in (0, 1)")
    rows = read_records(args.input)
    missing = [c for c in (args.groupby, "total_reward", "n_robots", "comm", "shifts") if c not in rows[0]]
    if missing:
        raise CliError(f"{args.input} lacks column(s) {missing}")
    out = Path(args.out)
    _prepare_out(out)
    t0 = time.perf_counter()
    tukey_report(rows, out, args.groupby, args.alpha)
    artifacts = ["summary.txt"] + _rel(sorted(out.glob("tukey_*.csv")), out)
    RunManifest(
        "stats",
        {"input": str(args.input), "groupby": args.groupby, "alpha": args.alpha},
        artifacts,
        duration_s=round(time.perf_counter() - t0, 3),
    ).write(out)
    sys.stdout.write((out / "summary.txt").read_text())


def cmd_plot(args) -> None:
    src = Path(args.input)
    results = src / "results.csv"
    if not results.exists():
        raise CliError(f"{results} not found")
    read_records(results)  # fail on an empty file before creating anything
    out = Path(args.out)
    _prepare_out(out)
    t0 = time.perf_counter()
    written = plot_experiment(src, out)
    RunManifest(
        "plot",
        {"input": str(src)},
        _rel(written, out),
        duration_s=round(time.perf_counter() - t0, 3),
    ).write(out)
    print(f"{len(written)} figures written to {out}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="li-patrol", description="Multi-robot patrol with latent-inhibition scan policies.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a single trial")
    sim.add_argument("--map", help="ASCII map file (default: bundled office map)")
    sim.add_argument("--robots", type=int, default=1)
    sim.add_argument("--li", type=_li_list, help="comma-separated LI value per robot")
    sim.add_argument("--comm", action=argparse.BooleanOptionalAction, default=False)
    sim.add_argument("--shifts", type=int, default=0)
    sim.add_argument("--steps", type=int, default=1300)
    sim.add_argument("--seed", type=int, default=0, help="trial seed")
    sim.add_argument("--env-seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("experiment", help="run a parameter sweep")
    exp.add_argument("--grid", help="JSON file with ExperimentGrid fields (default grid if omitted)")
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--out", required=True)
    exp.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    exp.add_argument("--resume", action="store_true", help="continue from results.partial.csv left by a failed run")
    exp.add_argument("--repetitions", type=int, help="override the grid's repetition count")
    exp.set_defaults(func=cmd_experiment)

    st = sub.add_parser("stats", help="ANOVA / Tukey HSD report for an experiment CSV")
    st.add_argument("--in", dest="input", required=True)
    st.add_argument("--groupby", default="composition")
    st.add_argument("--alpha", type=float, default=0.05)
    st.add_argument("--out", required=True)
    st.set_defaults(func=cmd_stats)

    pl = sub.add_parser("plot", help="SVG figures for an experiment directory")
    pl.add_argument("--in", dest="input", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return ap


def _configure_logging() -> None:
    level = os.environ.get("LI_PATROL_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise CliError(f"LI_PATROL_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging()
        if getattr(args, "jobs", 1) < 1:
            raise CliError("--jobs must be >= 1")
        args.func(args)
    except CliError as exc:
        parser.error(str(exc))  # exits with status 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"li-patrol: error: {exc}", file=sys.stderr)
        return 1
    return 0


__all__ = ["CSV_HEADER", "RunManifest", "build_parser", "main"]
