"""Meyerson's randomized online facility location.

Each arriving point ``p`` opens a facility with probability
``min(1, delta(p) / f)``, where ``delta`` is the dissimilarity to the nearest
open facility; otherwise it connects and pays ``delta(p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._rng import make_rng
from .errors import InputError, ParameterError
from .metric import Measure, Point, PointBlock


class Decision(NamedTuple):
    point_id: int
    delta: float  # math.inf when no facility existed yet
    opened: bool


@dataclass
class OflState:
    f: float
    measure: Measure
    facilities: list = field(default_factory=list)
    total_facility_cost: float = 0.0
    total_connection_cost: float = 0.0
    decisions: list = field(default_factory=list)
    preexisting: tuple = ()

    def __post_init__(self):
        if not self.f > 0 or not math.isfinite(self.f):
            raise ParameterError(f"facility cost must be a positive finite real, got {self.f!r}")
        self._block = PointBlock(self.measure.base)
        # finite spaces repeat locations; cache delta per location
        self._memo = {} if self.measure.discrete else None
        for p in self.preexisting:
            self._block.append(p)

    @classmethod
    def with_facilities(cls, f: float, measure: Measure, facilities: Sequence[Point]) -> "OflState":
        """State with free, already-open facilities (they are not charged ``f``)."""
        return cls(f, measure, preexisting=tuple(facilities))

    @property
    def total(self) -> float:
        return self.total_facility_cost + self.total_connection_cost

    def nearest_distance(self, p: Point) -> float:
        block = self._block
        n = len(block)
        if n == 0:
            return math.inf
        memo = self._memo
        if memo is not None:
            hit = memo.get(p.payload)
            if hit is not None and hit[0] == n:
                return hit[1]
            start, best = (hit if hit is not None else (0, math.inf))
        else:
            start, best = 0, math.inf
        row = block.base.pack_one(p.payload)
        d = self.measure.to_many(row, block.data[start:])
        best = min(best, float(d.min()))
        if memo is not None:
            memo[p.payload] = (n, best)
        return best


def ofl_step(state: OflState, p: Point, u: float) -> OflState:
    """Process one arrival with the uniform draw ``u`` in [0, 1)."""
    delta = state.nearest_distance(p)
    opened = u < min(1.0, delta / state.f)
    if opened:
        state.facilities.append(p)
        state._block.append(p)
        state.total_facility_cost += state.f
    else:
        state.total_connection_cost += delta
    state.decisions.append(Decision(p.id, delta, opened))
    return state


def ofl_run(stream: Sequence[Point], f: float, m: Measure, seed: int) -> OflState:
    if len(stream) == 0:
        raise InputError("stream is empty")
    state = OflState(f, m)
    draws = make_rng(seed).random(len(stream))
    for p, u in zip(stream, draws.tolist()):
        ofl_step(state, p, u)
    return state


def ofl_summary(state: OflState) -> dict:
    return {
        "facilities": [p.id for p in state.facilities],
        "facility_cost": state.total_facility_cost,
        "connection_cost": state.total_connection_cost,
        "total": state.total,
    }


def ofl_run_labels(labels, dist: np.ndarray, f: float, u: np.ndarray):
    """Same decisions as :func:`ofl_run` for streams over a few distinct locations.

    ``labels[i]`` is the location of the ``i``-th arrival and ``dist`` the
    location-by-location dissimilarity matrix. A facility at a location makes
    every later arrival there free, so at most ``len(dist)`` facilities open,
    and each open is found with one vectorised scan over the remaining arrivals.
    Returns ``(opened arrival indices, facility cost, connection cost)``.
    """
    if not f > 0 or not math.isfinite(f):
        raise ParameterError(f"facility cost must be a positive finite real, got {f!r}")
    labels = np.asarray(labels, dtype=np.int64)
    u = np.asarray(u, dtype=np.float64)
    if len(labels) == 0:
        raise InputError("stream is empty")
    if len(u) != len(labels):
        raise InputError("need one uniform draw per arrival")
    delta = np.full(len(dist), math.inf)
    opened = []
    connection = 0.0
    cur = 0
    n = len(labels)
    while cur < n:
        thr = np.minimum(1.0, delta / f)[labels[cur:]]
        hits = np.flatnonzero(u[cur:] < thr)
        stop = cur + int(hits[0]) if len(hits) else n
        connection += float(delta[labels[cur:stop]].sum())
        if stop == n:
            break
        opened.append(stop)
        np.minimum(delta, dist[labels[stop]], out=delta)
        cur = stop + 1
    return opened, f * len(opened), connection
