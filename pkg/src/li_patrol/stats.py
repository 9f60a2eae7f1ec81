"""One-way ANOVA and Tukey HSD over experiment results.

The studentized range distribution is integrated numerically: an outer
adaptive quadrature over the distribution of the pooled standard deviation
(a scaled chi variable) and an inner fixed Gauss-Legendre rule over the
range of ``k`` standard normals.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import chi

REPORT_HEADER = ("group_a", "group_b", "mean_diff", "q", "p", "significant")

_SF_TOL = 1e-4
# Gauss-Legendre nodes for the inner integral over z in [-Z, Z]; phi(z) is
# below 1e-18 outside this window.
_Z = 9.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(256)
_Z_NODES = _GL_X * _Z
_Z_WEIGHTS = _GL_W * _Z * np.exp(-0.5 * _Z_NODES**2) / math.sqrt(2.0 * math.pi)
_PHI_Z = special.ndtr(_Z_NODES)


class QuadratureError(ArithmeticError):
    pass


class DegenerateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    mean: float
    sd: float
    samples: tuple[float, ...] = field(default=(), repr=False)

    @classmethod
    def from_samples(cls, label: str, samples: Iterable[float]) -> "GroupSummary":
        x = np.asarray(list(samples), dtype=float)
        sd = float(x.std(ddof=1)) if len(x) > 1 else 0.0
        return cls(str(label), len(x), float(x.mean()) if len(x) else float("nan"), sd, tuple(x.tolist()))


@dataclass(frozen=True)
class TukeyPair:
    label_a: str
    label_b: str
    mean_diff: float
    q_statistic: float
    p_value: float
    significant_at_alpha: bool


class AnovaResult(NamedTuple):
    ms_within: float
    df_within: int
    df_between: int
    ss_within: float
    ss_between: float
    degenerate: bool


def _as_groups(groups) -> list[GroupSummary]:
    if isinstance(groups, Mapping):
        return [GroupSummary.from_samples(k, v) for k, v in groups.items()]
    out = []
    for i, g in enumerate(groups):
        out.append(g if isinstance(g, GroupSummary) else GroupSummary.from_samples(str(i), g))
    return out


def anova_oneway(groups) -> AnovaResult:
    """Within/between decomposition of a one-way layout.

    ``groups`` is a mapping label -> samples, or a sequence of sample lists
    or :class:`GroupSummary` objects.
    """
    gs = _as_groups(groups)
    if len(gs) < 2:
        raise ValueError("ANOVA needs at least 2 groups")
    if any(g.n < 2 for g in gs):
        raise ValueError("every group needs at least 2 samples")
    arrays = [np.asarray(g.samples, dtype=float) for g in gs]
    grand = np.concatenate(arrays).mean()
    ss_within = float(sum(((a - a.mean()) ** 2).sum() for a in arrays))
    ss_between = float(sum(len(a) * (a.mean() - grand) ** 2 for a in arrays))
    df_within = sum(len(a) for a in arrays) - len(arrays)
    ms_within = ss_within / df_within
    return AnovaResult(ms_within, df_within, len(arrays) - 1, ss_within, ss_between, ms_within == 0.0)


def _range_sf(w: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals > w), vectorised over ``w``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    inner = special.ndtr(_Z_NODES[None, :] + w[:, None]) - _PHI_Z[None, :]
    cdf = k * (np.clip(inner, 0.0, 1.0) ** (k - 1)) @ _Z_WEIGHTS
    return np.clip(1.0 - cdf, 0.0, 1.0)


def _log_scaled_chi_pdf(s: float, df: float) -> float:
    # density of sqrt(chi2_df / df)
    h = 0.5 * df
    return h * math.log(df) - special.gammaln(h) - (h - 1.0) * math.log(2.0) + (df - 1.0) * math.log(s) - h * s * s


def studentized_range_sf(q: float, k: int, df: float) -> float:
    """Survival function of the studentized range statistic for ``k`` groups."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if df < 1:
        raise ValueError("df must be >= 1")
    if q < 0 or math.isnan(q):
        raise ValueError("q must be >= 0")
    if q == 0:
        return 1.0
    if math.isinf(q):
        return 0.0

    scale = math.sqrt(df)
    lo = chi.ppf(1e-13, df) / scale
    hi = chi.isf(1e-13, df) / scale

    def integrand(s):
        if s <= 0:
            return 0.0
        return math.exp(_log_scaled_chi_pdf(s, df)) * float(_range_sf(q * s, k)[0])

    mode = math.sqrt(max(df - 1.0, 0.0) / df)
    points = [mode] if lo < mode < hi else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, lo, hi, points=points, limit=200, epsabs=1e-9, epsrel=1e-9)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"studentized range quadrature failed for q={q}, k={k}, df={df}: {exc}") from exc
    if err > _SF_TOL:
        raise QuadratureError(f"studentized range quadrature error {err:.2e} exceeds {_SF_TOL} (q={q}, k={k}, df={df})")
    return min(max(val, 0.0), 1.0)


def studentized_range_isf(p: float, k: int, df: float) -> float:
    """Critical value q such that ``studentized_range_sf(q, k, df) == p``."""
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    hi = 10.0
    while studentized_range_sf(hi, k, df) > p:
        hi *= 2.0
        if hi > 1e4:
            raise QuadratureError(f"could not bracket the critical value for p={p}, k={k}, df={df}")
    return optimize.brentq(lambda q: studentized_range_sf(q, k, df) - p, 0.0, hi, xtol=1e-8)


def tukey_hsd(groups, alpha: float = 0.05) -> list[TukeyPair]:
    """All-pairs Tukey-Kramer comparison.

    ``q = |mean_a - mean_b| / sqrt(MSW / 2 * (1/n_a + 1/n_b))`` with p-values
    from the studentized range with k = number of groups. When the pooled
    variance is zero every pair with different means is reported as
    significant (q = inf, p = 0) and a :class:`DegenerateWarning` is issued.
    """
    gs = _as_groups(groups)
    anova = anova_oneway(gs)
    k = len(gs)
    out = []
    degenerate_pairs = 0
    for a, b in itertools.combinations(gs, 2):
        diff = a.mean - b.mean
        if anova.ms_within == 0.0:
            if diff == 0.0:
                q, p = 0.0, 1.0
            else:
                q, p = math.inf, 0.0
                degenerate_pairs += 1
        else:
            se = math.sqrt(anova.ms_within / 2.0 * (1.0 / a.n + 1.0 / b.n))
            q = abs(diff) / se
            p = studentized_range_sf(q, k, anova.df_within)
        out.append(TukeyPair(a.label, b.label, diff, q, p, p < alpha))
    if degenerate_pairs:
        warnings.warn(
            f"zero within-group variance: {degenerate_pairs} pair(s) flagged significant without a test",
            DegenerateWarning,
            stacklevel=2,
        )
    return out


def find_pair(pairs: Sequence[TukeyPair], a: str, b: str) -> TukeyPair:
    """Look up a pair in either order; ``mean_diff`` is returned as a - b."""
    for p in pairs:
        if (p.label_a, p.label_b) == (a, b):
            return p
        if (p.label_a, p.label_b) == (b, a):
            return TukeyPair(a, b, -p.mean_diff, p.q_statistic, p.p_value, p.significant_at_alpha)
    raise KeyError(f"no pair {a!r} vs {b!r}")


# -- experiment CSV reports ---------------------------------------------------

CELL_KEYS = ("n_robots", "comm", "shifts")


def read_records(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path} contains no trial records")
    return rows


def group_cells(rows: Sequence[Mapping], groupby: str = "composition", value: str = "total_reward"):
    """Split rows into (n_robots, comm, shifts) cells, each mapping group label -> samples."""
    cells: dict[tuple, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        key = tuple(str(r[c]) for c in CELL_KEYS)
        cells[key][str(r[groupby])].append(float(r[value]))
    return {k: dict(v) for k, v in cells.items()}


def cell_name(key: tuple) -> str:
    n, comm, shifts = key
    return f"N{n}_comm-{comm}_shifts{shifts}"


def write_pairs_csv(pairs: Sequence[TukeyPair], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for p in pairs:
            w.writerow([p.label_a, p.label_b, f"{p.mean_diff:.6g}", f"{p.q_statistic:.6g}", f"{p.p_value:.6g}", int(p.significant_at_alpha)])


def summary_table(summaries: Sequence[GroupSummary], pairs: Sequence[TukeyPair] | None, title: str) -> str:
    lines = [title, "-" * len(title), f"{'group':<10}{'n':>5}{'mean':>10}{'sd':>9}"]
    for s in summaries:
        lines.append(f"{s.label:<10}{s.n:>5}{s.mean:>10.2f}{s.sd:>9.2f}")
    if pairs:
        lines.append("")
        lines.append(f"{'pair':<22}{'diff':>9}{'q':>9}{'p':>9}  sig")
        for p in pairs:
            pair = f"{p.label_a} - {p.label_b}"
            lines.append(f"{pair:<22}{p.mean_diff:>9.2f}{p.q_statistic:>9.3f}{p.p_value:>9.4f}  {'*' if p.significant_at_alpha else ''}")
    return "\n".join(lines) + "\n"


def tukey_report(rows, out_dir: str | Path, groupby: str = "composition", alpha: float = 0.05) -> dict:
    """Tukey HSD per (n_robots, comm, shifts) cell; writes one CSV per cell plus summary.txt.

    Returns a mapping cell key -> list of :class:`TukeyPair`.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = group_cells(rows, groupby)
    results = {}
    text = []
    for key in sorted(cells, key=lambda k: (int(k[0]), k[1], int(k[2]))):
        groups = cells[key]
        summaries = [GroupSummary.from_samples(lbl, v) for lbl, v in groups.items()]
        pairs = None
        if len(groups) >= 2 and all(len(v) >= 2 for v in groups.values()):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateWarning)
                pairs = tukey_hsd(groups, alpha)
            write_pairs_csv(pairs, out_dir / f"tukey_{cell_name(key)}.csv")
            results[key] = pairs
        text.append(summary_table(summaries, pairs, cell_name(key)))
    (out_dir / "summary.txt").write_text("\n".join(text))
    return results
