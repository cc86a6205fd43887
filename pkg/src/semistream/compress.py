"""Weight-merging compression over the nearest-neighbor graph.

Every point points at its nearest other point (ties go to the greatest id),
which yields a forest of "bi-trees": pairs of trees whose roots point at each
other. A proper 2-coloring exists, so moving the weight of every point of one
color onto its neighbor deletes that color class. Before coloring, the ``k``
points with the largest ``w(a) * D(a, pi(a))`` are set aside; merging the
larger remaining class leaves at most ``floor((n + k) / 2)`` points at a cost
no larger than the best k-median restricted to the input points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InvariantViolation
from .metric import Measure, WeightedPointSet


@dataclass(frozen=True)
class NearestNeighborMap:
    pi: dict  # point id -> id of its nearest other point
    over: WeightedPointSet
    positions: np.ndarray = field(repr=False, compare=False)  # pi as positions in ``over``
    dist: np.ndarray = field(repr=False, compare=False)  # D(a, pi(a))


@dataclass(frozen=True)
class BiTreeColoring:
    color: dict  # point id -> 0 or 1


def nn_from_matrix(D: np.ndarray, ids: np.ndarray):
    """Nearest-neighbor positions and distances from a full dissimilarity matrix.

    The diagonal is ignored. Among equidistant candidates the greatest id wins.
    """
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    best = D.min(axis=1)
    ties = D == best[:, None]
    # greatest id among the minimisers
    score = np.where(ties, ids[None, :], np.iinfo(np.int64).min)
    pos = np.argmax(score, axis=1)
    return pos.astype(np.int64), best


def nearest_neighbor_map(A: WeightedPointSet, m: Measure) -> NearestNeighborMap:
    if len(A) < 2:
        raise InputError("nearest-neighbor map needs at least 2 points")
    packed = m.pack(A.points)
    D = m.pairwise(packed, packed)
    ids = A.ids
    pos, dist = nn_from_matrix(D, ids)
    pi = {int(ids[i]): int(ids[j]) for i, j in enumerate(pos)}
    return NearestNeighborMap(pi, A, pos, dist)


def two_color(pi: np.ndarray, ids: np.ndarray | None = None) -> np.ndarray:
    """Proper 2-coloring of the functional graph ``a -> pi[a]``.

    Walk from an uncolored vertex to its 2-cycle roots, color the roots
    0 (smaller id) and 1, then color down the child lists. Linear time.
    Raises InvariantViolation if a cycle longer than 2 is found.
    """
    n = len(pi)
    pi = np.asarray(pi, dtype=np.int64)
    if ids is None:
        ids = np.arange(n)
    if np.any(pi == np.arange(n)):
        raise InvariantViolation("nearest-neighbor map has a fixed point")
    order = np.argsort(pi, kind="stable")
    starts = np.searchsorted(pi[order], np.arange(n + 1))
    children = [order[starts[a] : starts[a + 1]].tolist() for a in range(n)]
    pil = pi.tolist()
    color = [-1] * n
    for v in range(n):
        if color[v] != -1:
            continue
        a, steps = v, 0
        while pil[pil[a]] != a:
            a = pil[a]
            steps += 1
            if steps > n:
                raise InvariantViolation(f"cycle of length > 2 reachable from position {v}")
        b = pil[a]
        if ids[a] > ids[b]:
            a, b = b, a
        color[a], color[b] = 0, 1
        stack = [a, b]
        while stack:
            x = stack.pop()
            cx = color[x]
            for c in children[x]:
                if color[c] == -1:
                    color[c] = 1 - cx
                    stack.append(c)
    return np.asarray(color, dtype=np.int8)


def cycle_lengths(pi) -> list:
    """Lengths of all cycles of the functional graph ``a -> pi[a]``."""
    pi = list(pi)
    n = len(pi)
    state = [0] * n  # 0 unvisited, 1 on current path, 2 done
    out = []
    for v in range(n):
        path = []
        a = v
        while state[a] == 0:
            state[a] = 1
            path.append(a)
            a = pi[a]
        if state[a] == 1:
            out.append(len(path) - path.index(a))
        for x in path:
            state[x] = 2
    return out


def bitree_two_color(pi: NearestNeighborMap) -> BiTreeColoring:
    ids = pi.over.ids
    colors = two_color(pi.positions, ids)
    return BiTreeColoring({int(i): int(c) for i, c in zip(ids, colors)})


def top_k_positions(values: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k largest values; ties go to the larger id.

    Selection by partition, no full sort.
    """
    n = len(values)
    mask = np.zeros(n, dtype=bool)
    if k <= 0:
        return mask
    if k >= n:
        mask[:] = True
        return mask
    kth = np.partition(values, n - k)[n - k]
    mask |= values > kth
    need = k - int(mask.sum())
    if need > 0:
        eq = np.flatnonzero(values == kth)
        if need < len(eq):
            eq = eq[np.argpartition(-ids[eq], need - 1)[:need]]
        mask[eq] = True
    return mask


def compress_arrays(weights: np.ndarray, pi: np.ndarray, dpi: np.ndarray, ids: np.ndarray, k: int, colors=None):
    """Core of the compression step on position-indexed arrays.

    Returns ``(keep mask, new weights, lambda, merged positions)``.
    """
    n = len(weights)
    w = np.asarray(weights, dtype=np.int64)
    if k >= n:
        return np.ones(n, dtype=bool), w.copy(), 0.0, np.zeros(0, dtype=np.int64)
    if colors is None:
        colors = two_color(pi, ids)
    removed = top_k_positions(w * dpi, ids, k)
    class0 = ~removed & (colors == 0)
    class1 = ~removed & (colors == 1)
    loser = class0 if class0.sum() > class1.sum() else class1
    merged = np.flatnonzero(loser)
    new_w = w.copy()
    np.add.at(new_w, pi[merged], w[merged])
    lam = float(np.sum(w[merged] * dpi[merged]))
    return ~loser, new_w, lam, merged


def compress_b(A: WeightedPointSet, k: int, pi: NearestNeighborMap, m: Measure):
    """Compress ``A`` to at most ``floor((n + k) / 2)`` points.

    Returns ``(Z, lam)`` where ``lam`` is the total weighted movement cost.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    n = len(A)
    if k >= n:
        return A, 0.0
    if pi.over is not A and pi.over != A:
        raise InputError("nearest-neighbor map does not index this set")
    keep, new_w, lam, _ = compress_arrays(A.weight_array(), pi.positions, pi.dist, A.ids, k)
    idx = np.flatnonzero(keep)
    Z = WeightedPointSet(tuple(A.points[i] for i in idx), tuple(int(new_w[i]) for i in idx))
    return Z, lam
