import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from scalinglab._validation import ValidationError
from scalinglab.linebreak import uniform_labelled_tree
from scalinglab.path_codes import (
    DiscreteExcursion,
    RealExcursion,
    contour_of,
    dfq_by_stack,
    dfq_contour_ratio,
    dfq_of,
    distance_matrix_from_excursion,
    excursion_distance,
    format_path,
    four_point_violations,
    pairwise_excursion_distances,
    parse_path,
    rescale_excursion,
    tree_from_contour,
    tree_from_dfq,
)
from scalinglab.tree_core import RootedOrderedTree, tree_distance

from conftest import labelled_trees


def all_dfq_paths(n):
    """Brute force: every integer path q_0=1 .. q_n=0, positive before the end,
    increments >= -1."""
    out = []

    def rec(prefix):
        if len(prefix) == n + 1:
            if prefix[-1] == 0:
                out.append(tuple(prefix))
            return
        last = prefix[-1]
        if last == 0:
            return
        for nxt in range(last - 1, n + 1):
            rec(prefix + [nxt])

    rec([1])
    return out


def all_dyck_paths(m):
    out = []
    for steps in itertools.product((1, -1), repeat=2 * m):
        h = np.concatenate([[0], np.cumsum(steps)])
        if h[-1] == 0 and h.min() >= 0:
            out.append(tuple(h.tolist()))
    return out


def catalan(k):
    return math.comb(2 * k, k) // (k + 1)


def test_contour_examples():
    assert contour_of(RootedOrderedTree([-1])).q.tolist() == [0]
    assert contour_of(RootedOrderedTree([-1, 0])).q.tolist() == [0, 1, 0]
    assert contour_of(RootedOrderedTree([-1, 0, 0])).q.tolist() == [0, 1, 0, 1, 0]


def test_dfq_examples():
    assert dfq_of(RootedOrderedTree([-1, 0, 1, 2])).q.tolist() == [1, 1, 1, 1, 0]
    k = 5
    assert dfq_of(RootedOrderedTree([-1] + [0] * k)).q.tolist() == [1, k, 4, 3, 2, 1, 0]
    # root with two children, the first of which has one child
    assert dfq_of(RootedOrderedTree([-1, 0, 0, 1])).q.tolist() == [1, 2, 2, 1, 0]


@pytest.mark.parametrize("n", range(1, 7))
def test_every_dfq_path_is_a_tree(n):
    paths = all_dfq_paths(n)
    assert len(paths) == catalan(n - 1)
    for q in paths:
        t = tree_from_dfq(q)
        assert dfq_of(t).q.tolist() == list(q)


@pytest.mark.parametrize("m", range(0, 8))
def test_every_dyck_path_is_a_contour(m):
    paths = all_dyck_paths(m) if m else [(0,)]
    assert len(paths) == catalan(m)
    for e in paths:
        assert contour_of(tree_from_contour(e)).q.tolist() == list(e)


def test_dfq_examples_reverse():
    assert tree_from_dfq([1, 0]).n == 1
    t = tree_from_dfq([1, 1, 1, 1, 0])
    assert t.parent.tolist() == [-1, 0, 1, 2]


@pytest.mark.parametrize("bad", [[1, 2, 0, 1, 0], [1, 3, 1, 1, 0], [2, 1, 0], [1, 1]])
def test_malformed_dfq_rejected(bad):
    with pytest.raises(ValidationError):
        tree_from_dfq(bad)


@pytest.mark.parametrize("bad", [[0, 1, 2], [0, 2, 0], [0, -1, 0], [1, 0]])
def test_malformed_contour_rejected(bad):
    with pytest.raises(ValidationError):
        tree_from_contour(bad)


@given(labelled_trees())
@settings(max_examples=80, deadline=None)
def test_round_trips_and_stack_semantics(t):
    canon = t.relabel_dfs()
    assert tree_from_dfq(dfq_of(t)) == canon
    assert tree_from_contour(contour_of(t)) == canon
    assert dfq_by_stack(t).tolist() == dfq_of(t).q.tolist()
    assert contour_of(t).length == 2 * t.n - 2


def test_round_trip_large_random_tree():
    t = uniform_labelled_tree(100_000, np.random.default_rng(4))
    canon = t.relabel_dfs()
    assert tree_from_dfq(dfq_of(t)) == canon
    assert tree_from_contour(contour_of(t)) == canon


def first_visit_times(e):
    """Contour step at which each vertex (in depth-first numbering) is first reached."""
    times = [0]
    for i in range(1, len(e)):
        if e[i] > e[i - 1]:
            times.append(i)
    return times


@pytest.mark.parametrize("n", range(1, 7))
def test_excursion_distance_equals_graph_distance(n):
    for q in all_dfq_paths(n):
        t = tree_from_dfq(q)
        e = contour_of(t).q
        if n == 1:
            continue
        ex = RealExcursion.from_discrete(e)
        times = first_visit_times(e)
        for u in range(n):
            for v in range(n):
                assert excursion_distance(ex, times[u], times[v]) == tree_distance(t, u, v)


def test_excursion_distance_basics():
    e = RealExcursion.from_discrete([0, 1, 2, 3, 2, 1, 0])
    assert excursion_distance(e, 2.5, 2.5) == 0
    assert excursion_distance(e, 0, 3) == 3
    assert excursion_distance(e, 1.5, 4.5) == pytest.approx(1.5 + 1.5 - 2 * 1.5)
    with pytest.raises(ValidationError):
        excursion_distance(e, -0.1, 1)


def brownian_like_excursion(rng, m=2000):
    from scalinglab.samplers import srw_excursion

    path = srw_excursion(m, rng).q
    return RealExcursion.from_discrete(path, 1 / path.size, 1 / math.sqrt(path.size))


def test_distance_matrix_properties(rng):
    e = brownian_like_excursion(rng)
    D1 = distance_matrix_from_excursion(e, 1, rng)
    assert D1.tolist() == [[0.0]]
    D = distance_matrix_from_excursion(e, 12, rng)
    assert np.allclose(D, D.T) and np.all(np.diag(D) == 0) and (D >= 0).all()
    k = D.shape[0]
    for a, b, c in itertools.permutations(range(k), 3):
        assert D[a, c] <= D[a, b] + D[b, c] + 1e-12
    assert four_point_violations(D) == 0


def test_pairwise_matches_single_queries(rng):
    e = brownian_like_excursion(rng, 300)
    times = rng.uniform(0, e.zeta, size=9)
    D = pairwise_excursion_distances(e, times)
    for i in range(9):
        for j in range(9):
            assert D[i, j] == pytest.approx(excursion_distance(e, times[i], times[j]), abs=1e-12)


def test_distance_matrix_on_tree_contour_is_integral(rng):
    t = uniform_labelled_tree(40, rng)
    e = RealExcursion.from_discrete(contour_of(t))
    times = rng.integers(0, 2 * t.n - 1, size=10).astype(float)
    D = pairwise_excursion_distances(e, times)
    tree_dists = {tree_distance(t, u, v) for u in range(t.n) for v in range(t.n)}
    assert set(np.unique(D).astype(int).tolist()) <= tree_dists
    assert np.allclose(D, np.round(D))


def test_four_point_detects_cycle_metric():
    # 4-cycle graph metric is not a tree metric
    D = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    assert four_point_violations(D) == 1


def test_rescale_excursion_is_exact():
    e = RealExcursion.from_discrete([0, 1, 2, 1, 0], 0.25, 0.5)
    assert rescale_excursion(e, 1.0).values.tolist() == e.values.tolist()
    e4 = rescale_excursion(e, 4.0)
    times = np.array([0.1, 0.3, 0.55, 0.9])
    D = pairwise_excursion_distances(e, times)
    D4 = pairwise_excursion_distances(e4, 4 * times)
    assert np.allclose(D4, 2 * D)
    back = rescale_excursion(e4, 0.25)
    assert np.allclose(back.grid, e.grid) and np.allclose(back.values, e.values)
    with pytest.raises(ValidationError):
        rescale_excursion(e, 0)


def test_real_excursion_csv_round_trip():
    e = RealExcursion.from_discrete([0, 2, 1, 0], 0.5, 0.3)
    text = e.to_csv()
    assert text.splitlines()[0] == "t,value"
    back = RealExcursion.read_csv(io.StringIO(text))
    assert np.array_equal(back.grid, e.grid) and np.array_equal(back.values, e.values)


def test_real_excursion_validation():
    with pytest.raises(ValidationError):
        RealExcursion([0, 1, 2], [0, 1, 1])
    with pytest.raises(ValidationError):
        RealExcursion([0, 1, 2], [0, -1, 0])


def test_path_text_format():
    q = dfq_of(RootedOrderedTree([-1, 0, 0]))
    assert format_path(q) == "1 2 1 0"
    assert parse_path("1 2 1 0", "dfq") == q
    with pytest.raises(ValidationError):
        parse_path("1 x 0", "dfq")


def test_ratio_on_path_is_degenerate():
    r = dfq_contour_ratio(RootedOrderedTree([-1, 0, 1, 2, 3]))
    # q_i counts the stack after exploring v_i, so only q_n reaches 0
    assert r.degenerate and r.q.tolist() == [1, 1, 1, 1, 0]
    assert r.depth.tolist() == [0, 1, 2, 3, 4]


def test_ratio_factor_for_binary_trees():
    from scalinglab.samplers import PRESETS, bienayme_conditioned

    t = bienayme_conditioned(PRESETS["binary"], 20_001, np.random.default_rng(2))
    r = dfq_contour_ratio(t)
    # c in {0, 2} with (n-1)/2 internal vertices: sum c(c-1) = n-1
    assert r.predicted_factor == pytest.approx(0.5)
    assert r.slope() == pytest.approx(0.5, rel=0.15)


@pytest.mark.slow
def test_ratio_slope_for_uniform_trees():
    rng = np.random.default_rng(3)
    slopes, factors = [], []
    for _ in range(20):
        r = dfq_contour_ratio(uniform_labelled_tree(100_000, rng))
        assert not r.degenerate
        slopes.append(r.slope())
        factors.append(r.predicted_factor)
    assert np.mean(slopes) == pytest.approx(np.mean(factors), rel=0.05)
