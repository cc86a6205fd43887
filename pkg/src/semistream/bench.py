"""Reproducible sweeps: OFL ratio against t, and streaming clustering quality."""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ._rng import derive_seed, make_rng
from .errors import SemistreamError
from .kmedian import cluster_stream, default_m, extract_centers
from .lowerbound import run_lowerbound_experiment
from .metric import WeightedPointSet, euclidean_dataset
from .oracle import cost, local_search_kmedian
from .order import make_strategy, semirandom_stream


def gaussian_mixture(k: int, n: int, separation: float = 10.0, sigma: float = 1.0, dim: int = 1, seed: int = 0):
    """``n`` points from ``k`` equal-weight spherical Gaussians on a line of means.

    Returns ``(dataset, means)``; the means are ``separation * sigma`` apart
    along the first axis.
    """
    rng = make_rng(seed)
    means = np.zeros((k, dim))
    means[:, 0] = separation * sigma * np.arange(k)
    labels = rng.integers(0, k, size=n)
    coords = means[labels] + sigma * rng.standard_normal((n, dim))
    return euclidean_dataset(coords), means


@functools.lru_cache(maxsize=64)
def mixture_with_oracle(k: int, n: int, seed: int, separation: float = 10.0):
    """Cached mixture plus its offline local-search cost and centers."""
    data, means = gaussian_mixture(k, n, separation, seed=seed)
    measure = data.measure("linear")
    value, centers = local_search_kmedian(WeightedPointSet.unit(data.points), k, measure)
    return data, means, value, centers


def bench_ratio_vs_t(t_values: Sequence[int], z: int = 64, n: int | None = None, f: float = 1.0, trials: int = 500, seed: int = 0) -> list:
    """One row per t: adversarial mean ratio with a random-order control column."""
    return [r._asdict() for r in run_lowerbound_experiment(t_values, z=z, n=n, f=f, trials=trials, seed=seed)]


@dataclass(frozen=True)
class ClusterTrial:
    trial: int
    t: int
    adversary: str
    k: int
    n: int
    m: int
    seed: int
    status: str = "ok"
    cost: float = float("nan")
    opt: float = float("nan")
    ratio: float = float("nan")
    max_support: int = 0
    space_bound: int = 0
    epochs: int = 0
    max_evals_per_point: int = 0
    hand_high_water: int = 0


def _one_cluster_trial(job) -> ClusterTrial:
    trial, t, adversary, k, n, m, seed, with_oracle = job
    base = ClusterTrial(trial, t, adversary, k, n, m, seed)
    data_seed = derive_seed(seed, trial)
    run_seed = derive_seed(seed, trial, t, hash_name(adversary))
    try:
        if with_oracle:
            data, _, opt, _ = mixture_with_oracle(k, n, data_seed)
        else:
            data, _ = gaussian_mixture(k, n, seed=data_seed)
            opt = float("nan")
        measure = data.measure("linear")
        points = list(data.points)
        strategy = make_strategy(adversary, points, t, run_seed)
        stream, _, trace = semirandom_stream(points, strategy, t, run_seed)
        report = cluster_stream(stream, m, measure, run_seed)
        centers = extract_centers(report.psi_final, k, measure)
        value = cost(points, centers, measure, assign=False).value
        ratio = value / opt if with_oracle and opt > 0 else float("nan")
        return ClusterTrial(
            trial, t, adversary, k, n, m, seed, "ok", value, opt, ratio,
            report.max_support, 29 * m, report.epochs, report.max_evaluations_per_point, trace.hand_high_water,
        )
    except SemistreamError as exc:
        return ClusterTrial(**{**asdict(base), "status": f"error:{type(exc).__name__}"})


def hash_name(name: str) -> int:
    """Small stable integer for a strategy name (Python's ``hash`` is salted)."""
    return sum((i + 1) * ord(c) for i, c in enumerate(name))


def bench_cluster_quality(
    k: int = 4,
    n: int = 5000,
    t_values: Sequence[int] = (1,),
    adversaries: Sequence[str] = ("passthrough",),
    trials: int = 10,
    seed: int = 0,
    m: int | None = None,
    with_oracle: bool = True,
    jobs: int = 1,
) -> list:
    """Every (trial, t, adversary) combination, in that nesting order.

    The dataset depends only on the trial, so oracle costs are shared across
    the t and adversary sweep. Failed trials stay in the table with an error
    status.
    """
    grid = []
    for trial in range(trials):
        for t in t_values:
            mm = default_m(k, t) if m is None else m
            for adv in adversaries:
                grid.append((trial, int(t), adv, k, n, mm, seed, with_oracle))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one_cluster_trial, grid))
    return [_one_cluster_trial(job) for job in grid]


def summarize_ratios(rows: Sequence[ClusterTrial]) -> dict:
    r = np.array([row.ratio for row in rows if row.status == "ok"], dtype=np.float64)
    r = r[np.isfinite(r)]
    if len(r) == 0:
        return {"count": 0}
    return {"count": int(len(r)), "median": float(np.median(r)), "p95": float(np.percentile(r, 95)), "max": float(r.max())}
