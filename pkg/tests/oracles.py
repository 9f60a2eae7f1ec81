"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import heapq
import math

import numpy as np


def dijkstra_cost(blocked, src, dst):
    """Shortest 8-connected cost on a boolean ``blocked[y][x]`` array, no heuristic.

    Costs are tracked as exact (orthogonal, diagonal) step counts and compared
    by their real value, then converted with the same summation order as a
    path walk so the float result is reproducible bit for bit.
    """
    h, w = len(blocked), len(blocked[0])
    sx, sy = src
    dx, dy = dst
    if blocked[sy][sx] or blocked[dy][dx]:
        raise ValueError("blocked endpoint")
    best = {(sx, sy): (0, 0)}
    heap = [(0.0, 0, 0, sx, sy)]
    while heap:
        val, n_o, n_d, x, y = heapq.heappop(heap)
        if best.get((x, y)) != (n_o, n_d):
            continue
        if (x, y) == (dx, dy):
            return n_o + n_d * math.sqrt(2.0)
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                if ox == oy == 0:
                    continue
                nx, ny = x + ox, y + oy
                if not (0 <= nx < w and 0 <= ny < h) or blocked[ny][nx]:
                    continue
                cand = (n_o + 1, n_d) if ox == 0 or oy == 0 else (n_o, n_d + 1)
                cval = cand[0] + cand[1] * math.sqrt(2.0)
                cur = best.get((nx, ny))
                if cur is None or cval < cur[0] + cur[1] * math.sqrt(2.0) - 1e-12:
                    best[(nx, ny)] = cand
                    heapq.heappush(heap, (cval, cand[0], cand[1], nx, ny))
    return None


def max_q_permutation_pvalue(groups, n_resamples=100_000, seed=0, batch=20_000):
    """Permutation p-value of the largest pairwise Tukey-Kramer q statistic.

    Group labels are shuffled over the pooled sample; the statistic is
    recomputed for every shuffle with numpy broadcasting.
    """
    rng = np.random.default_rng(seed)
    sizes = np.array([len(g) for g in groups])
    pooled = np.concatenate([np.asarray(g, float) for g in groups])
    labels = np.repeat(np.arange(len(groups)), sizes)

    def stat(lab):
        # lab: (B, N) label matrix
        k = len(groups)
        onehot = lab[..., None] == np.arange(k)
        sums = (onehot * pooled[None, :, None]).sum(axis=1)
        means = sums / sizes
        sq = (onehot * pooled[None, :, None] ** 2).sum(axis=1)
        ssw = (sq - sums**2 / sizes).sum(axis=1)
        msw = ssw / (len(pooled) - k)
        qmax = np.zeros(lab.shape[0])
        for a in range(k):
            for b in range(a + 1, k):
                se = np.sqrt(msw / 2.0 * (1.0 / sizes[a] + 1.0 / sizes[b]))
                qmax = np.maximum(qmax, np.abs(means[:, a] - means[:, b]) / se)
        return qmax

    observed = stat(labels[None, :])[0]
    hits = 0
    done = 0
    while done < n_resamples:
        b = min(batch, n_resamples - done)
        perm = np.argsort(rng.random((b, len(pooled))), axis=1)
        hits += int((stat(labels[perm]) >= observed - 1e-12).sum())
        done += b
    return (hits + 1) / (n_resamples + 1), observed
