"""Hard instances for online facility location under a t-bounded adversary.

A complete ``z``-ary tree of depth ``h = m - 1`` with ``m = ceil(log2 t / log2
log2 t)`` has edges that shrink by a factor ``m`` per level, scaled so that a
depth-``i`` node sits at distance ``D (1 - m^-i)`` from the root, ``D = f / h``.
A hidden root-to-leaf path ``x_1, ..., x_h`` carries ``m^i`` demands at
``x_i``; all other demands sit at the root. The adversary holds back the
non-root demands and releases them shallowest first, so the algorithm has to
pay for facilities at every level while a two-facility solution (root and
``x_h``) costs less than ``3 f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._rng import derive_seed, make_rng
from .errors import InvariantViolation, ParameterError
from .metric import Measure, Point, TreeMetric
from .ofl import ofl_run_labels
from .order import min_bound


def tree_shape(t: int) -> tuple:
    """``(m, h)`` for hand size ``t >= 4``."""
    if int(t) != t or t < 4:
        raise ParameterError(f"the hard family needs an integer t >= 4, got {t!r}")
    lg = math.log2(t)
    m = math.ceil(lg / math.log2(lg))
    return m, m - 1


@dataclass(frozen=True)
class TreeInstance:
    t: int
    m: int
    h: int
    D: float
    z: int
    f: float
    hidden: tuple  # child index at each depth along the hidden path
    n: int
    points: tuple  # root demands first, then m^i copies of x_i for i = 1..h
    measure: Measure

    def node(self, depth: int) -> tuple:
        """``x_depth`` on the hidden path (``x_0`` is the root)."""
        return self.hidden[:depth]

    @property
    def non_root(self) -> int:
        return sum(self.m**i for i in range(1, self.h + 1))

    @property
    def depths(self) -> np.ndarray:
        """Depth of every demand, in ``points`` order."""
        counts = [self.n - self.non_root] + [self.m**i for i in range(1, self.h + 1)]
        return np.repeat(np.arange(self.h + 1), counts)

    def location_matrix(self) -> np.ndarray:
        """Dissimilarities between ``x_0, ..., x_h``."""
        base = self.measure.base
        nodes = base.pack([self.node(i) for i in range(self.h + 1)])
        return self.measure.pairwise(nodes, nodes)


def build_tree_instance(t: int, z: int = 64, n: int | None = None, f: float = 1.0, seed: int = 0) -> TreeInstance:
    """Draw the hidden path uniformly and materialise the demand multiset.

    ``n`` defaults to ``t``.
    """
    m, h = tree_shape(t)
    if z < 2:
        raise ParameterError("branching factor z must be >= 2")
    if not f > 0 or not math.isfinite(f):
        raise ParameterError(f"facility cost must be a positive finite real, got {f!r}")
    n = t if n is None else n
    if n < t:
        raise ParameterError(f"need n >= t, got n={n} and t={t}")
    non_root = sum(m**i for i in range(1, h + 1))
    if not non_root < t:
        raise InvariantViolation(f"{non_root} non-root demands do not fit under t={t}")
    D = f / h
    hidden = tuple(int(c) for c in make_rng(seed).integers(1, z + 1, size=h))
    pts = [Point(i, ()) for i in range(n - non_root)]
    for depth in range(1, h + 1):
        node = hidden[:depth]
        pts.extend(Point(len(pts) + j, node) for j in range(m**depth))
    metric = TreeMetric(h, float(m), D, branching=z)
    return TreeInstance(t, m, h, D, z, f, hidden, n, tuple(pts), Measure(metric))


def opt_certificate(inst: TreeInstance) -> float:
    """Cost of opening facilities at the root and at ``x_h`` and serving every demand."""
    deepest = inst.node(inst.h)
    base = inst.measure.base
    facilities = base.pack([(), deepest])
    connection = 0.0
    for depth in range(1, inst.h + 1):
        row = base.pack_one(inst.node(depth))
        d = float(inst.measure.to_many(row, facilities).min())
        connection += inst.m**depth * d
    value = 2 * inst.f + connection
    if not value < 3 * inst.f:
        raise InvariantViolation(f"certificate {value} is not below 3f = {3 * inst.f}")
    return value


def depth_order_emission(depths: np.ndarray, perm: Sequence[int], t: int) -> np.ndarray:
    """Arrival order produced by the shallowest-first adversary on a shuffled deck.

    With fewer than ``t`` non-root cards the hand never fills, so the output is
    the shuffled deck stably sorted by depth. Returns positions into the
    shuffled deck and checks the hand bound.
    """
    shuffled = depths[np.asarray(perm, dtype=np.int64)]
    order = np.argsort(shuffled, kind="stable")
    sigma = np.empty(len(order), dtype=np.int64)
    sigma[order] = np.arange(len(order))
    if min_bound(sigma) > t:
        raise InvariantViolation(f"depth-order adversary needs a hand larger than t={t}")
    return order


class LowerBoundRow(NamedTuple):
    t: int
    m: int
    h: int
    n: int
    opt: float
    mean_ratio: float
    stderr: float
    control_mean: float
    control_stderr: float


def _mean_se(values) -> tuple:
    a = np.asarray(values, dtype=np.float64)
    se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    return float(a.mean()), se


def trial_ratios(t: int, trial: int, *, z: int, n: int | None, f: float, ofl_f: float | None, seed: int) -> tuple:
    """``(adversarial ratio, random-order ratio)`` for one trial; both see the same draws."""
    inst = build_tree_instance(t, z, n, f, derive_seed(seed, t, trial, 0))
    opt = opt_certificate(inst)
    rng = make_rng(derive_seed(seed, t, trial, 1))
    perm = rng.permutation(inst.n)
    u = rng.random(inst.n)
    depths = inst.depths
    dist = inst.location_matrix()
    fac = inst.f if ofl_f is None else ofl_f

    shuffled = depths[perm]
    adversarial = shuffled[depth_order_emission(depths, perm, t)]
    _, fc, cc = ofl_run_labels(adversarial, dist, fac, u)
    _, fc0, cc0 = ofl_run_labels(shuffled, dist, fac, u)
    return (fc + cc) / opt, (fc0 + cc0) / opt


def run_lowerbound_experiment(
    t_values: Sequence[int],
    z: int = 64,
    n: int | None = None,
    f: float = 1.0,
    ofl_f: float | None = None,
    trials: int = 500,
    seed: int = 0,
) -> list:
    """Mean OFL cost over the certificate, per ``t``, with a random-order control.

    Each trial draws a fresh hidden path and shuffle; the control runs the
    same shuffled deck without the adversary.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rows = []
    for t in t_values:
        m, h = tree_shape(t)
        pairs = [trial_ratios(t, i, z=z, n=n, f=f, ofl_f=ofl_f, seed=seed) for i in range(trials)]
        adv, ctl = zip(*pairs)
        mean, se = _mean_se(adv)
        cmean, cse = _mean_se(ctl)
        opt = opt_certificate(build_tree_instance(t, z, n, f, derive_seed(seed, t, 0, 0)))
        rows.append(LowerBoundRow(int(t), m, h, t if n is None else n, opt, mean, se, cmean, cse))
    return rows
