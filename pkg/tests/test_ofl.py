import math

import numpy as np
import pytest

from semistream._rng import make_rng
from semistream.errors import InputError, ParameterError
from semistream.metric import Euclidean, MatrixMetric, Measure, Point, euclidean_dataset
from semistream.ofl import OflState, ofl_run, ofl_run_labels, ofl_step
from semistream.oracle import weighted_median_1d

LIN = Measure(Euclidean(1))


def p(i, x):
    return Point(i, (float(x),))


def test_first_point_always_opens():
    s = ofl_step(OflState(1.0, LIN), p(0, 3), 0.999999)
    assert s.decisions[0].opened and math.isinf(s.decisions[0].delta)
    assert s.total_connection_cost == 0.0


@pytest.mark.parametrize("u, opened", [(0.4, True), (0.6, False)])
def test_threshold(u, opened):
    s = OflState(2.0, LIN)
    ofl_step(s, p(0, 0), 0.0)
    ofl_step(s, p(1, 1), u)  # delta = f / 2
    assert s.decisions[1].opened is opened
    assert s.total_connection_cost == (0.0 if opened else 1.0)


def test_far_points_always_open():
    s = OflState(1.0, LIN)
    for i, u in enumerate([0.5, 0.999, 0.9999]):
        ofl_step(s, p(i, 5 * i), u)
    assert len(s.facilities) == 3 and s.total == 3.0


def test_duplicates_open_once():
    s = ofl_run([p(i, 4) for i in range(50)], 3.0, LIN, seed=2)
    assert len(s.facilities) == 1 and s.total_facility_cost == 3.0 and s.total_connection_cost == 0.0


def test_parameter_and_input_errors():
    with pytest.raises(ParameterError):
        OflState(0.0, LIN)
    with pytest.raises(ParameterError):
        OflState(math.inf, LIN)
    with pytest.raises(InputError):
        ofl_run([], 1.0, LIN, 0)


def test_state_invariants_and_determinism():
    data = euclidean_dataset(np.random.default_rng(1).normal(size=(300, 2)))
    m = data.measure("linear")
    a = ofl_run(list(data.points), 0.7, m, seed=5)
    b = ofl_run(list(data.points), 0.7, m, seed=5)
    assert a.decisions == b.decisions
    assert a.total_facility_cost == pytest.approx(0.7 * len(a.facilities))
    assert a.total_connection_cost == pytest.approx(sum(d.delta for d in a.decisions if not d.opened))
    opened = [d.opened for d in a.decisions]
    assert sum(opened) == len(a.facilities)


def test_preexisting_facilities_are_free():
    s = OflState.with_facilities(1.0, LIN, [p(100, 0)])
    ofl_step(s, p(0, 0.25), 0.5)
    assert not s.decisions[0].opened and s.total == 0.25


def test_discrete_memo_matches_plain_scan():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(6, 2))
    M = np.linalg.norm(X[:, None] - X[None], axis=2)
    matrix = Measure(MatrixMetric(M))
    labels = rng.integers(0, 6, size=400)
    a = ofl_run([Point(i, int(l)) for i, l in enumerate(labels)], 0.8, matrix, seed=3)
    b = ofl_run([Point(i, tuple(X[l])) for i, l in enumerate(labels)], 0.8, Measure(Euclidean(2)), seed=3)
    assert [d.opened for d in a.decisions] == [d.opened for d in b.decisions]
    assert a.total == pytest.approx(b.total, rel=1e-12)


def test_label_fast_path_agrees_with_step_loop():
    rng = np.random.default_rng(4)
    M = np.abs(rng.normal(size=(5, 5)))
    M = M + M.T
    np.fill_diagonal(M, 0)
    matrix = Measure(MatrixMetric(M))
    for seed in range(20):
        labels = rng.integers(0, 5, size=200)
        f = float(rng.uniform(0.2, 3))
        slow = ofl_run([Point(i, int(l)) for i, l in enumerate(labels)], f, matrix, seed)
        opened, fc, cc = ofl_run_labels(labels, M, f, make_rng(seed).random(len(labels)))
        assert opened == [i for i, d in enumerate(slow.decisions) if d.opened]
        assert fc == pytest.approx(slow.total_facility_cost)
        assert cc == pytest.approx(slow.total_connection_cost, rel=1e-12)


def test_single_cluster_cost_is_constant_factor():
    f = 100.0
    rng = make_rng(7)
    totals, bounds = [], []
    for seed in range(200):
        x = rng.standard_normal(1000)
        stream = [p(i, v) for i, v in enumerate(x)]
        totals.append(ofl_run(stream, f, LIN, seed).total)
        bounds.append(f + weighted_median_1d(x))
    assert np.mean(totals) < 5 * np.mean(bounds)
