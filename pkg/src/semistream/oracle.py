"""Cost evaluation and offline k-median solvers used as reference oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, SizeError
from .metric import Measure, Point, WeightedPointSet

BRUTE_FORCE_CAP = 14

# float64 cells per pairwise chunk
_CHUNK_CELLS = 1 << 21


@dataclass(frozen=True)
class CostReport:
    value: float
    assignment: dict | None = None  # demand id -> serving center


def _nearest(measure: Measure, demands_packed, centers_packed):
    """(min dissimilarity, argmin index) per demand; ties go to the lower index."""
    n = len(demands_packed)
    k = len(centers_packed)
    best = np.empty(n)
    arg = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(k, 1))
    for lo in range(0, n, step):
        d = measure.pairwise(demands_packed[lo : lo + step], centers_packed)
        arg[lo : lo + step] = np.argmin(d, axis=1)
        best[lo : lo + step] = d[np.arange(len(d)), arg[lo : lo + step]]
    return best, arg


def cost(demands: Sequence[Point], centers: Iterable[Point], m: Measure, *, assign=True) -> CostReport:
    """Sum over demands of the dissimilarity to the nearest center.

    Ties between equidistant centers go to the center with the smaller id.
    """
    centers = sorted(centers, key=lambda p: p.id)
    if not centers:
        raise InputError("center set is empty")
    if not demands:
        return CostReport(0.0, {} if assign else None)
    best, arg = _nearest(m, m.pack(demands), m.pack(centers))
    assignment = None
    if assign:
        assignment = {p.id: centers[j] for p, j in zip(demands, arg)}
    return CostReport(float(best.sum()), assignment)


def weighted_cost(A: WeightedPointSet, centers: Iterable[Point], m: Measure) -> float:
    """Unconstrained nearest-center cost of a weighted set."""
    centers = sorted(centers, key=lambda p: p.id)
    if not centers:
        raise InputError("center set is empty")
    best, _ = _nearest(m, m.pack(A.points), m.pack(centers))
    return float(np.dot(best, A.weight_array()))


def opt_bar_exact(A: WeightedPointSet, k: int, m: Measure, cap: int = BRUTE_FORCE_CAP):
    """Exhaustive minimum weighted cost over all k-subsets of the support of ``A``.

    Returns ``(value, centers)``; on ties the lexicographically first subset in
    point order wins.
    """
    n = len(A)
    if n > cap:
        raise SizeError(f"{n} points exceed the brute-force cap of {cap}; use local search")
    if not 1 <= k <= n:
        raise InputError(f"k must lie in [1, {n}], got {k}")
    packed = m.pack(A.points)
    D = m.pairwise(packed, packed)
    w = A.weight_array().astype(np.float64)
    combos = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    values = (D[:, combos].min(axis=2) * w[:, None]).sum(axis=0)
    best = int(np.argmin(values))
    return float(values[best]), tuple(A.points[i] for i in combos[best])


def _two_nearest(D_cols: np.ndarray):
    """Nearest/second-nearest values and nearest index along axis 1."""
    k = D_cols.shape[1]
    near = np.argmin(D_cols, axis=1)
    rows = np.arange(len(D_cols))
    d1 = D_cols[rows, near]
    if k == 1:
        d2 = np.full(len(D_cols), np.inf)
    else:
        masked = D_cols.copy()
        masked[rows, near] = np.inf
        d2 = masked.min(axis=1)
    return d1, d2, near


def local_search_kmedian(A: WeightedPointSet, k: int, m: Measure, max_rounds: int = 100):
    """Single-swap local search for weighted k-median with centers from ``A``.

    Seeded by farthest-point traversal from the point of minimum id. Each
    round applies the best improving swap; stops when none improves or after
    ``max_rounds`` rounds. Returns ``(value, centers)`` with centers in id order.
    """
    n = len(A)
    if k < 1:
        raise InputError("k must be >= 1")
    if k > n:
        raise InputError(f"k={k} exceeds the support size {n}")
    packed = m.pack(A.points)
    w = A.weight_array().astype(np.float64)

    def column(j):
        return m.to_many(packed[j], packed)

    centers = [0]
    cols = [column(0)]
    dmin = cols[0].copy()
    while len(centers) < k:
        score = dmin.copy()
        score[centers] = -1.0
        j = int(np.argmax(score))
        centers.append(j)
        cols.append(column(j))
        np.minimum(dmin, cols[-1], out=dmin)

    C = np.stack(cols, axis=1)  # (n, k)
    d1, d2, near = _two_nearest(C)
    value = float(np.dot(w, d1))
    step = max(1, _CHUNK_CELLS // max(n, 1))

    for _ in range(max_rounds):
        if value == 0.0 or k == n:
            break
        is_center = np.zeros(n, dtype=bool)
        is_center[centers] = True
        cand = np.flatnonzero(~is_center)
        onehot = np.zeros((k, n))
        onehot[near, np.arange(n)] = w
        best_val, best_swap = value, None
        for lo in range(0, len(cand), step):
            cc = cand[lo : lo + step]
            Dc = m.pairwise(packed, packed[cc])  # (n, c)
            m1 = np.minimum(Dc, d1[:, None])
            base = w @ m1
            delta = onehot @ (np.minimum(Dc, d2[:, None]) - m1)  # (k, c)
            totals = base[None, :] + delta
            flat = int(np.argmin(totals))
            j, c = divmod(flat, len(cc))
            if totals[j, c] < best_val:
                best_val, best_swap = float(totals[j, c]), (j, int(cc[c]))
        if best_swap is None or not best_val < value - 1e-12 * value:
            break
        j, c = best_swap
        centers[j] = c
        C[:, j] = column(c)
        d1, d2, near = _two_nearest(C)
        value = float(np.dot(w, d1))

    order = sorted(range(k), key=lambda i: centers[i])
    return value, tuple(A.points[centers[i]] for i in order)


def weighted_median_1d(values, weights=None) -> float:
    """Optimal 1-median cost on the line (closed form via the weighted median)."""
    x = np.asarray(values, dtype=np.float64).ravel()
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    cw = np.cumsum(w)
    med = x[np.searchsorted(cw, cw[-1] / 2.0)]
    return float(np.dot(w, np.abs(x - med)))


def separation_ratio(clusters: Sequence[np.ndarray]) -> float:
    """Minimum inter-cluster gap over maximum cluster diameter (Euclidean)."""
    diam = 0.0
    for c in clusters:
        c = np.atleast_2d(c)
        if len(c) > 1:
            diam = max(diam, float(np.max(np.linalg.norm(c[:, None] - c[None], axis=2))))
    gap = math.inf
    for a, b in itertools.combinations(clusters, 2):
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        gap = min(gap, float(np.min(np.linalg.norm(a[:, None] - b[None], axis=2))))
    return gap / diam if diam > 0 else math.inf
