"""Standalone SVG figures from an experiment output directory.

Two kinds of figure are produced:

* ``rewards_<cell>.svg`` -- per-composition box plots with the individual
  trials overlaid, one file per (n_robots, comm, shifts) cell;
* ``timeseries_<cell>.svg`` -- mean cumulative reward over time with a
  +/- 1 sd band, one curve per composition.

The output depends only on the input files, so reruns are byte-identical.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .experiments import parse_label, read_timeseries
from .stats import CELL_KEYS, cell_name, read_records

log = logging.getLogger(__name__)

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        if t >= lo - 1e-9 * step:
            ticks.append(float(round(t, 10)))
        t += step
    return ticks


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str):
        self.parts: list[str] = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def set_range(self, xlo, xhi, ylo, yhi):
        if yhi <= ylo:
            ylo, yhi = ylo - 1.0, yhi + 1.0
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def px(self, x: float) -> float:
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def py(self, y: float) -> float:
        return self.y0 - (y - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=12, extra=""):
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>{escape(s)}</text>')

    def axes(self, yticks, xticks=None):
        for t in yticks:
            y = self.py(t)
            self.add(f'<line x1="{self.x0}" y1="{_fmt(y)}" x2="{self.x1}" y2="{_fmt(y)}" stroke="#e0e0e0"/>')
            self.text(self.x0 - 6, y + 4, _fmt(t), anchor="end", size=11)
        for x, label in xticks or ():
            self.text(self.px(x), self.y0 + 16, label, size=11)
        self.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="black"/>')
        self.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="black"/>')
        self.text(WIDTH / 2, 22, self.title, size=14)
        self.text((self.x0 + self.x1) / 2, HEIGHT - 18, self.xlabel)
        cy = (self.y0 + self.y1) / 2
        self.text(18, cy, self.ylabel, extra=f' transform="rotate(-90 18 {_fmt(cy)})"')

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _cell_title(key) -> str:
    n, comm, shifts = key
    return f"N={n}, communication {comm}, {shifts} shift(s)"


def _sort_labels(labels) -> list[str]:
    # most low-LI robots first, matching the order used by the experiment grid
    return sorted(labels, key=lambda s: (-parse_label(s)[0], s))


def reward_boxplot(groups: dict[str, list[float]], key) -> str:
    """Box plot (quartiles, 1.5 IQR whiskers) plus a deterministic strip of every trial."""
    labels = _sort_labels(groups)
    values = np.concatenate([np.asarray(groups[g], float) for g in labels])
    c = _Canvas(_cell_title(key), "composition", "total reward")
    pad = 0.05 * max(values.max() - values.min(), 1.0)
    c.set_range(0.5, len(labels) + 0.5, values.min() - pad, values.max() + pad)
    c.axes(_nice_ticks(c.ylo, c.yhi), [(i + 1, lbl) for i, lbl in enumerate(labels)])
    half = 0.25 * (c.px(1) - c.px(0))
    for i, lbl in enumerate(labels):
        x = c.px(i + 1)
        v = np.sort(np.asarray(groups[lbl], float))
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        lo = v[v >= q1 - 1.5 * iqr].min()
        hi = v[v <= q3 + 1.5 * iqr].max()
        color = PALETTE[i % len(PALETTE)]
        c.add(f'<line x1="{_fmt(x)}" y1="{_fmt(c.py(lo))}" x2="{_fmt(x)}" y2="{_fmt(c.py(hi))}" stroke="{color}"/>')
        top, bot = c.py(q3), c.py(q1)
        c.add(
            f'<rect x="{_fmt(x - half)}" y="{_fmt(top)}" width="{_fmt(2 * half)}" height="{_fmt(max(bot - top, 0.5))}" '
            f'fill="{color}" fill-opacity="0.2" stroke="{color}"/>'
        )
        c.add(f'<line x1="{_fmt(x - half)}" y1="{_fmt(c.py(med))}" x2="{_fmt(x + half)}" y2="{_fmt(c.py(med))}" stroke="{color}" stroke-width="2"/>')
        n = len(v)
        for j, val in enumerate(v):
            jitter = (j / max(n - 1, 1) - 0.5) * half * 1.2
            c.add(f'<circle cx="{_fmt(x + jitter)}" cy="{_fmt(c.py(val))}" r="2.5" fill="{color}" fill-opacity="0.7"/>')
    return c.render()


def reward_curves(curves: dict[str, np.ndarray], key) -> str:
    """Mean +/- sd of cumulative reward; ``curves`` maps label -> (reps, steps) array."""
    labels = _sort_labels(curves)
    stats = {}
    for lbl in labels:
        a = curves[lbl]
        sd = a.std(axis=0, ddof=1) if a.shape[0] > 1 else np.zeros(a.shape[1])
        stats[lbl] = (a.mean(axis=0), sd)
    n_steps = max(a.shape[1] for a in curves.values())
    ymax = max(float((m + s).max()) for m, s in stats.values())
    c = _Canvas(_cell_title(key), "step", "cumulative reward")
    c.set_range(0, n_steps, 0, max(ymax, 1.0) * 1.05)
    xt = _nice_ticks(0, n_steps)
    c.axes(_nice_ticks(c.ylo, c.yhi), [(t, _fmt(t)) for t in xt])
    stride = max(1, n_steps // 200)
    for i, lbl in enumerate(labels):
        mean, sd = stats[lbl]
        idx = np.unique(np.r_[np.arange(0, len(mean), stride), len(mean) - 1])
        xs = [c.px(j + 1) for j in idx]
        upper = " ".join(f"{_fmt(x)},{_fmt(c.py(mean[j] + sd[j]))}" for x, j in zip(xs, idx))
        lower = " ".join(f"{_fmt(x)},{_fmt(c.py(mean[j] - sd[j]))}" for x, j in zip(reversed(xs), idx[::-1]))
        color = PALETTE[i % len(PALETTE)]
        c.add(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        line = " ".join(f"{_fmt(x)},{_fmt(c.py(mean[j]))}" for x, j in zip(xs, idx))
        c.add(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = c.y1 + 14 + 16 * i
        c.add(f'<line x1="{c.x0 + 10}" y1="{ly - 4}" x2="{c.x0 + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        c.text(c.x0 + 36, ly, lbl, anchor="start", size=11)
    return c.render()


def plot_experiment(in_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render every figure for an experiment directory; returns the files written.

    Reads ``results.csv`` and, if present, ``timeseries/``. Without
    timeseries only the box plots are written and a warning is logged.
    """
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    rows = read_records(in_dir / "results.csv")
    cells: dict[tuple, dict[str, list[dict]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        cells[tuple(r[k] for k in CELL_KEYS)][r["composition"]].append(r)

    ts_dir = in_dir / "timeseries"
    figures: dict[str, str] = {}
    missing = False
    for key in sorted(cells, key=lambda k: (int(k[0]), k[1], int(k[2]))):
        groups = cells[key]
        totals = {lbl: [float(r["total_reward"]) for r in rs] for lbl, rs in groups.items()}
        figures[f"rewards_{cell_name(key)}.svg"] = reward_boxplot(totals, key)
        if missing:
            continue
        curves = {}
        for lbl, rs in groups.items():
            paths = [ts_dir / f"{lbl}_{r['comm']}_{r['shifts']}_{r['repetition']}.csv" for r in rs]
            if not all(p.exists() for p in paths):
                missing = True
                break
            curves[lbl] = np.array([read_timeseries(p) for p in sorted(paths)], dtype=float)
        if not missing:
            figures[f"timeseries_{cell_name(key)}.svg"] = reward_curves(curves, key)

    if missing:
        log.warning("timeseries files missing under %s; writing reward box plots only", ts_dir)
        figures = {k: v for k, v in figures.items() if k.startswith("rewards_")}

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(figures):
        path = out_dir / name
        path.write_text(figures[name], encoding="utf-8")
        written.append(path)
    return written
