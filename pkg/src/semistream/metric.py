"""Points, base metrics, M-estimator dissimilarities and weighted point sets.

A dissimilarity is ``rho(d(a, b))`` where ``d`` is a base metric and ``rho`` one
of the robust loss functions below. Each rho declares the constant ``beta`` of
the weak triangle inequality ``rho(c) <= beta * (rho(a) + rho(b))`` whenever
``c <= a + b``.

All distance arithmetic goes through the vectorised ``to_many`` / ``pairwise``
paths so that a scalar evaluation and a batched evaluation of the same pair
produce bit-identical doubles; tie-breaking elsewhere relies on exact equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InputError, ParameterError


class Point(NamedTuple):
    """A stream element. ``id`` is the global order used to break ties."""

    id: int
    payload: Any


# --------------------------------------------------------------------------
# base metrics


class Euclidean:
    """Euclidean distance on coordinate tuples."""

    name = "euclidean"
    discrete = False

    def __init__(self, dim: int):
        if dim < 1:
            raise InputError("dimension must be >= 1")
        self.dim = dim

    def __repr__(self):
        return f"Euclidean(dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, Euclidean) and other.dim == self.dim

    def __hash__(self):
        return hash(("euclidean", self.dim))

    def check(self, payload):
        if isinstance(payload, (int, np.integer)) or not isinstance(payload, (tuple, list, np.ndarray)):
            raise InputError(f"expected a coordinate vector, got {type(payload).__name__}")
        if len(payload) != self.dim:
            raise InputError(f"expected {self.dim} coordinates, got {len(payload)}")

    def pack_one(self, payload) -> np.ndarray:
        return np.asarray(payload, dtype=np.float64)

    def pack(self, payloads: Sequence) -> np.ndarray:
        out = np.asarray(payloads, dtype=np.float64)
        return out.reshape(len(payloads), self.dim)

    def empty(self, capacity: int) -> np.ndarray:
        return np.zeros((capacity, self.dim), dtype=np.float64)

    def to_many(self, row: np.ndarray, block: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return np.abs(block[:, 0] - row[0])
        diff = block - row
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return np.abs(a[:, 0][:, None] - b[:, 0][None, :])
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


class MatrixMetric:
    """Explicit finite metric; payloads are row indices into ``matrix``."""

    name = "matrix"
    discrete = True

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InputError("distance matrix must be square")
        self.matrix = matrix
        self.matrix.setflags(write=False)

    def __repr__(self):
        return f"MatrixMetric(n={len(self.matrix)})"

    def check(self, payload):
        if not isinstance(payload, (int, np.integer)):
            raise InputError(f"expected a node index, got {type(payload).__name__}")
        if not 0 <= payload < len(self.matrix):
            raise InputError(f"node index {payload} out of range")

    def pack_one(self, payload) -> np.ndarray:
        return np.asarray(payload, dtype=np.int64)

    def pack(self, payloads: Sequence) -> np.ndarray:
        return np.asarray(payloads, dtype=np.int64).reshape(len(payloads))

    def empty(self, capacity: int) -> np.ndarray:
        return np.zeros(capacity, dtype=np.int64)

    def to_many(self, row, block):
        return self.matrix[int(row), block]

    def pairwise(self, a, b):
        return self.matrix[np.ix_(a, b)]


class TreeMetric:
    """Shortest-path metric of a complete tree with geometrically shrinking edges.

    A node is the tuple of 1-based child indices on the path from the root
    (the root is ``()``). The edge from a depth-``i`` node to each child has
    length ``scale * (ratio**-i - ratio**-(i + 1))``, so the root-to-node
    distance at depth ``i`` is ``scale * (1 - ratio**-i)``.
    """

    name = "tree"
    discrete = True

    def __init__(self, depth: int, ratio: float, scale: float, branching: int | None = None):
        if depth < 0:
            raise ParameterError("tree depth must be >= 0")
        if ratio <= 1:
            raise ParameterError("edge ratio must be > 1")
        self.depth = depth
        self.ratio = ratio
        self.scale = scale
        self.branching = branching
        self._radius = np.array([scale * (1.0 - ratio ** -i) for i in range(depth + 1)])

    def __repr__(self):
        return f"TreeMetric(depth={self.depth}, ratio={self.ratio}, scale={self.scale})"

    def check(self, payload):
        if not isinstance(payload, tuple) or any(not isinstance(c, (int, np.integer)) for c in payload):
            raise InputError("expected a tree node (tuple of child indices)")
        if len(payload) > self.depth or any(c < 1 for c in payload):
            raise InputError(f"invalid tree node {payload!r}")
        if self.branching is not None and any(c > self.branching for c in payload):
            raise InputError(f"child index out of range in {payload!r}")

    def edge_length(self, depth: int) -> float:
        """Length of an edge from a node at ``depth`` to one of its children."""
        return self.scale * self.ratio ** -depth - self.scale * self.ratio ** -(depth + 1)

    def pack_one(self, payload) -> np.ndarray:
        row = np.zeros(max(self.depth, 1), dtype=np.int64)
        row[: len(payload)] = payload
        return row

    def pack(self, payloads: Sequence) -> np.ndarray:
        out = np.zeros((len(payloads), max(self.depth, 1)), dtype=np.int64)
        for i, p in enumerate(payloads):
            out[i, : len(p)] = p
        return out

    def empty(self, capacity: int) -> np.ndarray:
        return np.zeros((capacity, max(self.depth, 1)), dtype=np.int64)

    def _dist(self, a, b):
        # a, b broadcastable (..., depth) arrays
        same = (a == b) & (a > 0)
        lca = np.cumprod(same, axis=-1).sum(axis=-1)
        da = (a > 0).sum(axis=-1)
        db = (b > 0).sum(axis=-1)
        r = self._radius
        return (r[da] - r[lca]) + (r[db] - r[lca])

    def to_many(self, row, block):
        return self._dist(block, row[None, :])

    def pairwise(self, a, b):
        return self._dist(a[:, None, :], b[None, :, :])


# --------------------------------------------------------------------------
# rho functions (Huber and Tukey at unit scale)


def _linear(x):
    return x


def _gaussian(x):
    return x * x


def _huber(x):
    return np.where(x < 1.0, x * x, 2.0 * x - 1.0)


def _cauchy(x):
    return np.log1p(x * x)


def _tukey(x):
    return np.where(x < 1.0, 1.0 - (1.0 - x * x) ** 3, 1.0)


_RHO = {
    "linear": (_linear, 1.0),
    "gaussian": (_gaussian, 2.0),
    "huber": (_huber, 2.0),
    "cauchy": (_cauchy, 2.0),
    "tukey": (_tukey, 2.0),
}

ESTIMATORS = tuple(_RHO)
LP_RANGE = (1.0, 8.0)


@dataclass(frozen=True)
class Measure:
    """Dissimilarity ``rho(base(a, b))`` with its weak-triangle constant."""

    base: Any
    rho: str = "linear"
    power: float = 1.0
    _fn: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rho == "lp":
            p = float(self.power)
            if not LP_RANGE[0] <= p <= LP_RANGE[1]:
                raise ParameterError(f"lp power must lie in [1, 8], got {p}")
            fn = _linear if p == 1.0 else (lambda x, p=p: np.power(x, p))
        elif self.rho in _RHO:
            fn = _RHO[self.rho][0]
        else:
            raise ParameterError(f"unknown rho {self.rho!r}")
        object.__setattr__(self, "_fn", fn)

    @property
    def name(self) -> str:
        if self.rho == "lp":
            return f"lp:{self.power:g}"
        return self.rho

    @property
    def beta(self) -> float:
        return beta_of(self)

    @property
    def discrete(self) -> bool:
        return self.base.discrete

    def apply_rho(self, x):
        return self._fn(x)

    def pack_one(self, payload):
        return self.base.pack_one(payload)

    def pack(self, points: Sequence[Point]):
        return self.base.pack([p.payload for p in points])

    def to_many(self, row, block) -> np.ndarray:
        """Dissimilarities from one packed row to every row of a packed block."""
        return self._fn(self.base.to_many(row, block))

    def pairwise(self, a, b) -> np.ndarray:
        return self._fn(self.base.pairwise(a, b))

    def __call__(self, a: Point, b: Point) -> float:
        return dissimilarity(a, b, self)


def beta_of(m: Measure) -> float:
    if m.rho == "lp":
        return 2.0 ** (float(m.power) - 1.0)
    return _RHO[m.rho][1]


def parse_measure(name: str, base) -> Measure:
    """Build a measure from ``linear``, ``gaussian``, ..., or ``lp:<p>``."""
    name = name.strip().lower()
    if name.startswith("lp:"):
        try:
            p = float(name[3:])
        except ValueError:
            raise ParameterError(f"bad lp power in {name!r}") from None
        return Measure(base, "lp", p)
    if name not in _RHO:
        raise ParameterError(f"unknown measure {name!r}; expected one of {', '.join(ESTIMATORS)} or lp:<p>")
    return Measure(base, name)


def dissimilarity(a: Point, b: Point, m: Measure) -> float:
    m.base.check(a.payload)
    m.base.check(b.payload)
    row = m.base.pack_one(a.payload)
    block = m.base.pack([b.payload])
    return float(m.to_many(row, block)[0])


# --------------------------------------------------------------------------
# packed storage


class PointBlock:
    """Growable packed array of points for one-to-many evaluation."""

    def __init__(self, base, capacity: int = 16):
        self.base = base
        self.points: list[Point] = []
        self._data = base.empty(max(capacity, 1))

    def __len__(self):
        return len(self.points)

    @property
    def data(self):
        return self._data[: len(self.points)]

    def append(self, point: Point, row=None) -> int:
        n = len(self.points)
        if n == len(self._data):
            grown = self.base.empty(2 * n)
            grown[:n] = self._data
            self._data = grown
        self._data[n] = self.base.pack_one(point.payload) if row is None else row
        self.points.append(point)
        return n

    def rebuild(self, points: Iterable[Point]):
        pts = list(points)
        self.points = []
        self._data = self.base.empty(max(len(pts), len(self._data), 1))
        for p in pts:
            self.append(p)


# --------------------------------------------------------------------------
# weighted sets and datasets


@dataclass(frozen=True)
class WeightedPointSet:
    """Distinct points with positive integer weights, kept sorted by id."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        ws = tuple(self.weights)
        if len(pts) != len(ws):
            raise InputError("points and weights differ in length")
        for w in ws:
            if int(w) != w or w < 1:
                raise InputError(f"weights must be positive integers, got {w!r}")
        order = sorted(range(len(pts)), key=lambda i: pts[i].id)
        pts = tuple(pts[i] for i in order)
        ws = tuple(int(ws[i]) for i in order)
        for a, b in zip(pts, pts[1:]):
            if a.id == b.id:
                raise InputError(f"duplicate point id {a.id}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def from_mapping(cls, entries: Mapping[Point, int]) -> "WeightedPointSet":
        return cls(tuple(entries), tuple(entries.values()))

    @classmethod
    def unit(cls, points: Iterable[Point]) -> "WeightedPointSet":
        pts = tuple(points)
        return cls(pts, (1,) * len(pts))

    @property
    def entries(self) -> dict:
        return dict(zip(self.points, self.weights))

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    @property
    def ids(self) -> np.ndarray:
        return np.fromiter((p.id for p in self.points), dtype=np.int64, count=len(self.points))

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.int64)

    def weight_of(self, point: Point) -> int:
        for p, w in zip(self.points, self.weights):
            if p.id == point.id:
                return w
        raise KeyError(point.id)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.weights))


@dataclass(frozen=True)
class Dataset:
    """Points sharing one base metric; ids follow row order."""

    points: tuple
    base: Any

    def __len__(self):
        return len(self.points)

    def measure(self, name: str = "linear") -> Measure:
        return parse_measure(name, self.base)


def euclidean_dataset(coords) -> Dataset:
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError("expected a non-empty 2-D coordinate array")
    points = tuple(Point(i, tuple(float(v) for v in row)) for i, row in enumerate(arr))
    return Dataset(points, Euclidean(arr.shape[1]))

