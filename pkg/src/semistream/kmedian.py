"""Streaming k-median with a doubling lower-bound estimate.

The stream is summarised by a weighted set ``psi`` of at most ``29 m`` points.
Each epoch compresses ``psi`` (``compress_arrays`` with ``k = m``), raises the
estimate ``L <- max(10 L, lambda / 3)``, and then runs online facility location
with facility cost ``L / m`` until either ``psi`` fills up or the epoch's
merge cost reaches ``14 L``. The nearest-neighbor map needed by compression is
maintained incrementally, three insertions per arriving point, so per-point
work stays ``O(m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._rng import derive_seed, make_rng
from .compress import compress_arrays
from .errors import InputError, InvariantViolation, ParameterError
from .metric import Measure, Point, PointBlock, WeightedPointSet
from .oracle import cost, local_search_kmedian
from .order import random_shuffle

SPACE_FACTOR = 29
EPOCH_COST_FACTOR = 14
INSERTIONS_PER_POINT = 3


def default_m(k: int, t: int = 1) -> int:
    """``k * (4 + ceil(log2 t))``, the space parameter that tolerates a t-bounded adversary."""
    if k < 1 or t < 1:
        raise ParameterError("k and t must be >= 1")
    return k * (4 + (t - 1).bit_length())


def amplification_count(delta: float) -> int:
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(math.log2(1.0 / delta)))


@dataclass(frozen=True)
class ClusterRunReport:
    psi_final: WeightedPointSet
    L_final: float
    max_support: int
    epochs: int
    history: tuple  # (lambda, L) after each compression
    m_param: int
    points_seen: int
    degenerate: bool  # stream shorter than 29 m: never compressed
    max_evaluations_per_point: int
    ledger_cost: float  # merge costs plus every lambda; bounds COST(P, psi) for metrics
    seed: int = 0


class ClusterState:
    """Mutable state of one run. Feed points with :meth:`process`."""

    def __init__(self, measure: Measure, m_param: int, *, track_assignment: bool = False, pi_mode: str = "incremental"):
        if int(m_param) != m_param or m_param < 1:
            raise ParameterError(f"m must be a positive integer, got {m_param!r}")
        if pi_mode not in ("incremental", "batch"):
            raise ParameterError(f"unknown pi_mode {pi_mode!r}")
        self.measure = measure
        self.m_param = int(m_param)
        self.capacity = SPACE_FACTOR * self.m_param
        self.pi_mode = pi_mode
        self.L = 0.0
        self.cost_epoch = 0.0
        self.ledger_cost = 0.0
        self.points_seen = 0
        self.epochs = 0
        self.max_support = 0
        self.history: list = []
        self.evaluations = 0
        self.max_point_evals = 0

        cap = self.capacity
        self.block = PointBlock(measure.base, cap)
        self.weights = np.zeros(cap, dtype=np.int64)
        self.ids = np.zeros(cap, dtype=np.int64)
        self.pi = np.full(cap, -1, dtype=np.int64)
        self.dpi = np.full(cap, np.inf)
        self.indexed = 0  # positions [0, indexed) are covered by pi

        self.track_assignment = track_assignment
        self.members: list = []  # per position: list of seen points it represents
        self.member_cost: list = []  # matching dissimilarities to the representative
        self.assign_cost = 0.0

    # -- views -------------------------------------------------------------

    def __len__(self):
        return len(self.block)

    @property
    def psi(self) -> WeightedPointSet:
        n = len(self.block)
        return WeightedPointSet(tuple(self.block.points), tuple(int(w) for w in self.weights[:n]))

    @property
    def pi_covers_psi(self) -> bool:
        return self.indexed == len(self.block)

    def representatives(self) -> dict:
        """Seen point id -> id of the psi point it is currently assigned to."""
        if not self.track_assignment:
            raise InputError("state was created without track_assignment")
        out = {}
        for pos, group in enumerate(self.members):
            rid = self.block.points[pos].id
            for q in group:
                out[q.id] = rid
        return out

    # -- algorithm ---------------------------------------------------------

    def needs_compression(self) -> bool:
        if len(self.block) >= self.capacity:
            return True
        return self.L > 0 and self.cost_epoch >= EPOCH_COST_FACTOR * self.L

    def process(self, p: Point, u: float) -> None:
        evals = 0
        if self.needs_compression():
            evals += self._compress()
        self.points_seen += 1
        row = self.measure.pack_one(p.payload)
        n = len(self.block)
        if n == 0:
            self._open(p, row, 0.0)
        else:
            d = self.measure.to_many(row, self.block.data)
            evals += n
            j = int(np.argmin(d))
            dy = float(d[j])
            if u * self.L < self.m_param * dy:
                self._open(p, row, dy)
            else:
                self.weights[j] += 1
                self.cost_epoch += dy
                self.ledger_cost += dy
                if self.track_assignment:
                    self.members[j].append(p)
                    self.member_cost[j].append(dy)
                    self.assign_cost += dy
        if self.pi_mode == "incremental":
            for _ in range(INSERTIONS_PER_POINT):
                if self.indexed == len(self.block):
                    break
                evals += self._index_next()
        self.evaluations += evals
        if evals > self.max_point_evals:
            self.max_point_evals = evals

    def _open(self, p: Point, row, _dy: float) -> None:
        n = self.block.append(p, row)
        if n >= self.capacity:
            raise InvariantViolation(f"psi exceeded {self.capacity} points")
        self.weights[n] = 1
        self.ids[n] = p.id
        if n + 1 > self.max_support:
            self.max_support = n + 1
        if self.track_assignment:
            self.members.append([p])
            self.member_cost.append([0.0])

    def _index_next(self) -> int:
        """Insert the next psi position into the nearest-neighbor map."""
        x = self.indexed
        self.indexed += 1
        if x == 0:
            return 0
        d = self.measure.to_many(self.block.data[x], self.block.data[:x])
        ids = self.ids
        best = d.min()
        ties = np.flatnonzero(d == best)
        self.pi[x] = ties[np.argmax(ids[ties])]
        self.dpi[x] = best
        cur = self.pi[:x]
        better = (d < self.dpi[:x]) | ((d == self.dpi[:x]) & (ids[x] > ids[np.maximum(cur, 0)]))
        self.pi[:x][better] = x
        self.dpi[:x][better] = d[better]
        return x

    def _rebuild_pi(self) -> int:
        n = len(self.block)
        self.pi[:n] = -1
        self.dpi[:n] = np.inf
        data = self.block.data
        for x in range(n):
            d = self.measure.to_many(data[x], data)
            d[x] = np.inf
            best = d.min()
            ties = np.flatnonzero(d == best)
            self.pi[x] = ties[np.argmax(self.ids[ties])]
            self.dpi[x] = best
        self.indexed = n
        return n * n

    def _compress(self) -> int:
        evals = 0
        n = len(self.block)
        if self.pi_mode == "batch":
            evals += self._rebuild_pi()
        elif not self.pi_covers_psi:
            raise InvariantViolation(f"nearest-neighbor map covers {self.indexed} of {n} points at compression")
        keep, new_w, lam, merged = compress_arrays(
            self.weights[:n], self.pi[:n], self.dpi[:n], self.ids[:n], self.m_param
        )
        if self.track_assignment and len(merged):
            self._move_members(merged)
        idx = np.flatnonzero(keep)
        survivors = [self.block.points[i] for i in idx]
        if len(survivors) > (n + self.m_param) // 2 and n > self.m_param:
            raise InvariantViolation(f"compression left {len(survivors)} of {n} points")
        self.weights[: len(idx)] = new_w[idx]
        self.ids[: len(idx)] = self.ids[idx]
        self.block.rebuild(survivors)
        if self.track_assignment:
            self.members = [self.members[i] for i in idx]
            self.member_cost = [self.member_cost[i] for i in idx]
        self.pi[:] = -1
        self.dpi[:] = np.inf
        self.indexed = 0

        self.L = max(10.0 * self.L, lam / 3.0)
        self.ledger_cost += lam
        self.cost_epoch = 0.0
        self.epochs += 1
        self.history.append((lam, self.L))
        return evals

    def _move_members(self, merged) -> None:
        data = self.block.data
        for a in merged.tolist():
            target = int(self.pi[a])
            group = self.members[a]
            packed = self.measure.pack(group)
            new = self.measure.to_many(data[target], packed)
            self.assign_cost += float(new.sum()) - float(sum(self.member_cost[a]))
            self.members[target].extend(group)
            self.member_cost[target].extend(new.tolist())
            self.members[a] = []
            self.member_cost[a] = []

    def report(self, seed: int = 0) -> ClusterRunReport:
        return ClusterRunReport(
            psi_final=self.psi,
            L_final=self.L,
            max_support=self.max_support,
            epochs=self.epochs,
            history=tuple(self.history),
            m_param=self.m_param,
            points_seen=self.points_seen,
            degenerate=self.points_seen < self.capacity,
            max_evaluations_per_point=self.max_point_evals,
            ledger_cost=self.ledger_cost,
            seed=seed,
        )


def _uniforms(seed: int, chunk: int = 4096):
    rng = make_rng(seed)
    while True:
        yield from rng.random(chunk).tolist()


def cluster_stream(
    stream: Sequence[Point],
    m_param: int,
    measure: Measure,
    seed: int,
    *,
    on_checkpoint: Callable[[ClusterState], None] | None = None,
    track_assignment: bool = False,
    pi_mode: str = "incremental",
) -> ClusterRunReport:
    """Run the streaming algorithm over ``stream`` and report the final summary.

    ``on_checkpoint`` is called with the live state after every point.
    """
    state = ClusterState(measure, m_param, track_assignment=track_assignment, pi_mode=pi_mode)
    draws = _uniforms(seed)
    count = 0
    for p, u in zip(stream, draws):
        state.process(p, u)
        count += 1
        if on_checkpoint is not None:
            on_checkpoint(state)
    if count == 0:
        raise InputError("stream is empty")
    return state.report(seed)


def instance_seeds(seed: int, count: int) -> list:
    return [seed] + [derive_seed(seed, i) for i in range(1, count)]


def run_instances(stream, m_param, measure, delta, seed) -> list:
    """Independent runs over the same stream order, one per amplification instance."""
    return [cluster_stream(stream, m_param, measure, s) for s in instance_seeds(seed, amplification_count(delta))]


def cluster_amplified(stream, m_param: int, measure: Measure, delta: float, seed: int) -> ClusterRunReport:
    """Best-of-``ceil(log2(1/delta))`` runs, picking the smallest final ``L``."""
    if len(stream) == 0:
        raise InputError("stream is empty")
    reports = run_instances(stream, m_param, measure, delta, seed)
    best = min(range(len(reports)), key=lambda i: (reports[i].L_final, i))
    return reports[best]


def extract_centers(psi: WeightedPointSet, k: int, measure: Measure) -> tuple:
    """k centers for the weighted summary via local search; the whole support if k is too big."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k >= len(psi):
        return tuple(psi.points)
    return local_search_kmedian(psi, k, measure)[1]


class Clustering(NamedTuple):
    centers: tuple
    cost: float
    reports: tuple


def cluster_ram(points: Sequence[Point], k: int, measure: Measure, delta: float, seed: int) -> Clustering:
    """Offline k-median: shuffle, stream with ``m = 4k``, keep the cheapest instance."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if len(points) < k:
        raise InputError(f"need at least k={k} points, got {len(points)}")
    perm = random_shuffle(len(points), seed)
    stream = [points[i] for i in perm]
    reports = run_instances(stream, 4 * k, measure, delta, seed)
    best = None
    for r in reports:
        centers = extract_centers(r.psi_final, k, measure)
        value = cost(points, centers, measure, assign=False).value
        if best is None or value < best[1]:
            best = (centers, value)
    return Clustering(best[0], best[1], tuple(reports))
