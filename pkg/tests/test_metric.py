import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semistream.errors import InputError, ParameterError
from semistream.metric import (
    ESTIMATORS,
    Euclidean,
    MatrixMetric,
    Measure,
    Point,
    TreeMetric,
    WeightedPointSet,
    beta_of,
    dissimilarity,
    euclidean_dataset,
    parse_measure,
)

E1 = Euclidean(1)


def pt(i, *coords):
    return Point(i, tuple(float(c) for c in coords))


@pytest.mark.parametrize(
    "name, a, b, expected",
    [
        ("linear", 0, 3, 3.0),
        ("gaussian", 0, 3, 9.0),
        ("huber", 0, 2, 3.0),
        ("huber", 0, 0.5, 0.25),
        ("linear", 4, 4, 0.0),
        ("lp:3", 0, 2, 8.0),
    ],
)
def test_scalar_dissimilarities(name, a, b, expected):
    assert dissimilarity(pt(0, a), pt(1, b), parse_measure(name, E1)) == pytest.approx(expected)


def test_cauchy_and_tukey_saturate_sensibly():
    cauchy = parse_measure("cauchy", E1)
    tukey = parse_measure("tukey", E1)
    assert cauchy.apply_rho(np.array([0.0]))[0] == 0.0
    big = tukey.apply_rho(np.array([10.0, 100.0]))
    assert big[0] == big[1]  # flat beyond the unit scale


def test_beta_table():
    assert [beta_of(Measure(E1, r)) for r in ("linear", "gaussian", "huber", "cauchy", "tukey")] == [1, 2, 2, 2, 2]
    assert beta_of(parse_measure("lp:1", E1)) == 1
    assert beta_of(parse_measure("lp:3", E1)) == 4


def test_bad_measure_names():
    with pytest.raises(ParameterError):
        parse_measure("manhattan", E1)
    with pytest.raises(ParameterError):
        parse_measure("lp:9", E1)
    with pytest.raises(ParameterError):
        parse_measure("lp:x", E1)


def test_mismatched_payloads_rejected():
    m = Measure(E1)
    with pytest.raises(InputError):
        dissimilarity(pt(0, 1.0), Point(1, 3), m)
    with pytest.raises(InputError):
        dissimilarity(pt(0, 1.0), pt(1, 1.0, 2.0), m)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
    st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
    st.sampled_from(ESTIMATORS + ("lp:2.5",)),
)
def test_symmetry_and_identity(a, b, name):
    m = parse_measure(name, Euclidean(3))
    p, q = pt(0, *a), pt(1, *b)
    assert dissimilarity(p, q, m) == dissimilarity(q, p, m)
    assert dissimilarity(p, p, m) == 0.0


def test_weighted_point_set_validation():
    a, b = pt(1, 0), pt(0, 5)
    A = WeightedPointSet((a, b), (2, 3))
    assert [p.id for p in A.points] == [0, 1]
    assert A.total_weight == 5 and A.weight_of(a) == 2
    with pytest.raises(InputError):
        WeightedPointSet((a, b), (0, 1))
    with pytest.raises(InputError):
        WeightedPointSet((a, pt(1, 3)), (1, 1))
    with pytest.raises(InputError):
        WeightedPointSet((a,), (1.5,))


def test_matrix_metric():
    M = np.array([[0, 2, 5], [2, 0, 4], [5, 4, 0]], dtype=float)
    m = Measure(MatrixMetric(M), "gaussian")
    assert dissimilarity(Point(0, 0), Point(1, 2), m) == 25.0
    with pytest.raises(InputError):
        dissimilarity(Point(0, 0), Point(1, 7), m)


def _tree_graph(z, depth, ratio, scale):
    g = nx.Graph()
    frontier = [()]
    for d in range(depth):
        nxt = []
        for node in frontier:
            for c in range(1, z + 1):
                child = node + (c,)
                g.add_edge(node, child, weight=scale * (ratio**-d - ratio ** -(d + 1)))
                nxt.append(child)
        frontier = nxt
    return g


@pytest.mark.parametrize("z, depth, ratio", [(2, 1, 2.0), (3, 2, 3.0), (2, 3, 4.0)])
def test_tree_metric_matches_shortest_paths(z, depth, ratio):
    g = _tree_graph(z, depth, ratio, 1.7)
    tm = TreeMetric(depth, ratio, 1.7, branching=z)
    nodes = sorted(g.nodes)
    packed = tm.pack(nodes)
    D = tm.pairwise(packed, packed)
    sp = dict(nx.all_pairs_dijkstra_path_length(g))
    for i, a in enumerate(nodes):
        for j, b in enumerate(nodes):
            assert D[i, j] == pytest.approx(sp[a][b], rel=1e-12, abs=1e-15)


def test_tree_metric_rejects_bad_nodes():
    tm = TreeMetric(2, 2.0, 1.0, branching=3)
    for bad in [(0,), (1, 2, 3), (4,), (1.0,)]:
        with pytest.raises(InputError):
            tm.check(bad)


def test_euclidean_dataset_ids_follow_rows():
    data = euclidean_dataset([[0.0], [1.0], [10.0]])
    assert [p.id for p in data.points] == [0, 1, 2]
    assert data.points[2].payload == (10.0,)


def test_weak_triangle_on_points():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 2))
    data = euclidean_dataset(X)
    for name in ESTIMATORS:
        m = data.measure(name)
        P = m.pack(data.points)
        D = m.pairwise(P, P)
        for a, b, c in itertools.permutations(range(12), 3):
            assert D[a, c] <= m.beta * (D[a, b] + D[b, c]) * (1 + 1e-12) + 1e-15
