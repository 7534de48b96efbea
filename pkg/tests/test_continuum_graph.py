import io
import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from scalinglab._validation import ValidationError
from scalinglab.continuum_graph import (
    PointRef,
    SegmentGraph,
    continuum_graph_construct,
    distance_matrix_csv,
    glue_surplus_points,
    rescale_excursion,
    sample_point,
    segment_distance,
    tilted_excursion,
    tilted_excursions,
)
from scalinglab.graph_core import MultiGraph, area, kernel_law
from scalinglab.path_codes import RealExcursion, excursion_distance, four_point_violations
from scalinglab.samplers import area_biased_trees
from scalinglab.stats import core_size_density

from conftest import UNIT_ALPHA

# moments of the area under a standard Brownian excursion
AREA_MOMENTS = [1.0, math.sqrt(math.pi / 8), 5 / 12, 15 * math.sqrt(2 * math.pi) / 128]


def test_kernel_frequencies_two_surplus(rng):
    draws = 5000
    kinds = Counter()
    for _ in range(draws):
        K = continuum_graph_construct(2, rng=rng).kernel
        kinds["triple" if K.mult(1, 2) == 3 else "dumbbell"] += 1
    assert stats.binomtest(kinds["triple"], draws, 0.4).pvalue > UNIT_ALPHA


def test_kernel_frequencies_three_surplus(rng):
    law = {K: float(p) for K, p in kernel_law(3)}
    counts = Counter(continuum_graph_construct(3, rng=rng).kernel for _ in range(20_000))
    keys = list(law)
    obs = np.array([counts[k] for k in keys], dtype=float)
    exp = np.array([law[k] for k in keys]) * obs.sum()
    assert set(counts) <= set(keys)
    assert stats.chisquare(obs, exp).pvalue > UNIT_ALPHA


@pytest.mark.parametrize("s", [2, 3])
def test_core_length_law(s, rng):
    xs = []
    for _ in range(3000):
        g = continuum_graph_construct(s, rng=rng)
        assert g.core_lengths.size == 3 * s - 3
        assert g.core_lengths.sum() == pytest.approx(g.core_length, rel=1e-12)
        assert g.graph.betti_number() == s
        xs.append(g.core_length)
    assert stats.kstest(xs, core_size_density(s).cdf).pvalue > UNIT_ALPHA


def test_core_lengths_exchangeable(rng):
    rows = np.array([continuum_graph_construct(3, rng=rng).core_lengths for _ in range(4000)])
    for j in range(1, rows.shape[1]):
        assert stats.ks_2samp(rows[:, 0], rows[:, j]).pvalue > UNIT_ALPHA


def test_line_breaking_growth(rng):
    g = continuum_graph_construct(2, k=6, rng=rng)
    assert g.graph.betti_number() == 2 and g.graph.components() == 1
    assert (np.diff(g.arrivals) > 0).all() and g.arrivals[0] > g.core_length
    assert g.graph.total_length() == pytest.approx(g.arrivals[-1])
    assert sorted(g.graph.labels) == list(range(1, 7))
    with pytest.raises(ValidationError):
        continuum_graph_construct(1)


def test_untilted_excursion_is_plain(rng):
    e = tilted_excursion(0, gridsize=400, rng=rng)
    assert e.s == 0 and e.excursion.zeta == 1.0
    assert e.excursion.values[0] == 0 and e.excursion.values[-1] == 0
    assert np.all(np.abs(np.diff(e.dyck)) == 1)


def test_tilting_raises_area(rng):
    means = [np.mean([t.excursion.area() for t in tilted_excursions(s, 500, 600, rng, pool_factor=32)]) for s in (0, 1, 2)]
    assert means[0] < means[1] < means[2]


@pytest.mark.parametrize("s", [1, 2])
def test_tilted_pool_matches_area_moments(s, rng):
    # ratio of tilted to plain mean area, which cancels the lattice bias
    d = tilted_excursions(s, 2000, 400, rng, pool_factor=64)[0].diagnostics
    target = AREA_MOMENTS[s + 1] / AREA_MOMENTS[s] / AREA_MOMENTS[1]
    assert d["weighted_mean_area"] / d["pool_mean_area"] == pytest.approx(target, rel=0.01)


@pytest.mark.slow
@pytest.mark.parametrize("s", [1, 2])
def test_area_biased_dfq_area_matches_tilted_excursion(s):
    n = 100_000
    trees, diag = area_biased_trees(n, s, 200, np.random.default_rng(5), pool_factor=64)
    mean = np.mean([area(t) for t in trees]) / n**1.5
    assert mean == pytest.approx(AREA_MOMENTS[s + 1] / AREA_MOMENTS[s], rel=0.05)


def test_glue_betti_numbers(rng):
    for s in range(4):
        e = tilted_excursion(s, gridsize=2000, rng=rng, pool_factor=8)
        G = glue_surplus_points(e, s, rng)
        assert len(G.identifications) == s
        assert G.graph.betti_number() == s
        assert G.graph.components() == 1


def test_glue_without_points_is_a_tree(rng):
    e = tilted_excursion(0, gridsize=4000, rng=rng)
    G = glue_surplus_points(e, 0, rng)
    for _ in range(5):
        D = G.distance_matrix(8, rng)
        assert four_point_violations(D) == 0
    # tree distances agree with the coding function 2e at contour times
    L = e.dyck.size - 1
    i, j = 137, 3011
    d = G.graph.node_distances([G.vertex_at[i]])[0, G.vertex_at[j]]
    assert d == pytest.approx(2 * excursion_distance(e.excursion, i / L, j / L), abs=1e-9)


def test_glued_metric_axioms(rng):
    e = tilted_excursion(2, gridsize=2000, rng=rng, pool_factor=8)
    D = glue_surplus_points(e, 2, rng).distance_matrix(12, rng)
    assert np.allclose(D, D.T) and (D >= 0).all()
    assert (D[:, :, None] <= D[:, None, :] + D.T[None, :, :].transpose(0, 2, 1) + 1e-12).all()


def small_graph():
    # loop at 0, a double edge 0-1, a pendant 1-2, a bridge 2-3
    return SegmentGraph([0, 0, 0, 1, 2], [0, 1, 1, 2, 3], [1.0, 0.5, 2.0, 0.75, 1.25], ("branch",) * 4)


def dense_oracle(g: SegmentGraph, h: float):
    """Subdivide every segment into steps of ``h`` and return node ids for
    each (segment, step) plus the all-pairs distance matrix."""
    rows, cols, w = [], [], []
    ids = {}
    nxt = g.n_nodes
    for s in range(g.n_segments):
        m = int(round(g.seg_len[s] / h))
        chain = [int(g.seg_u[s])]
        for k in range(1, m):
            chain.append(nxt)
            nxt += 1
        chain.append(int(g.seg_v[s]))
        for k, node in enumerate(chain):
            ids[(s, k)] = node
        for a, b in zip(chain[:-1], chain[1:]):
            rows.append(a)
            cols.append(b)
            w.append(h)
    A = coo_matrix((w + w, (rows + cols, cols + rows)), shape=(nxt, nxt)).tocsr()
    return ids, dijkstra(A, directed=False)


def test_segment_distance_against_dense_grid(rng):
    g = small_graph()
    h = 0.25
    ids, D = dense_oracle(g, h)
    keys = list(ids)
    pick = [keys[i] for i in rng.choice(len(keys), size=25)]
    pts = [PointRef(s, k * h) for s, k in pick]
    M = g.distance_matrix(pts)
    for a in range(len(pts)):
        for b in range(len(pts)):
            assert M[a, b] == pytest.approx(D[ids[pick[a]], ids[pick[b]]], abs=1e-12)


def test_segment_distance_basics():
    g = small_graph()
    p = PointRef(2, 0.3)
    assert segment_distance(g, p, p) == 0
    assert segment_distance(g, PointRef(4, 0.2), PointRef(4, 1.0)) == pytest.approx(0.8)
    # around the loop the short way
    assert segment_distance(g, PointRef(0, 0.1), PointRef(0, 0.9)) == pytest.approx(0.2)
    with pytest.raises(ValidationError):
        segment_distance(g, PointRef(9, 0.0), p)
    with pytest.raises(ValidationError):
        SegmentGraph([0], [1], [0.0], ("branch",) * 2)


def test_sample_point_follows_length(rng):
    g = small_graph()
    counts = Counter(sample_point(g, rng).segment for _ in range(20_000))
    obs = [counts[s] for s in range(g.n_segments)]
    assert stats.chisquare(obs, g.seg_len / g.total_length() * 20_000).pvalue > UNIT_ALPHA


def test_text_and_csv_round_trip(rng):
    g = continuum_graph_construct(3, k=4, rng=rng).graph
    back = SegmentGraph.from_text(io.StringIO(g.to_text()))
    assert np.array_equal(back.seg_len, g.seg_len) and back.kinds == g.kinds and back.labels == g.labels
    pts = [sample_point(g, rng) for _ in range(5)]
    text = distance_matrix_csv(g, pts)
    lines = text.strip().splitlines()
    assert lines[0] == "point,segment,offset,d_0,d_1,d_2,d_3,d_4"
    assert len(lines) == 6
    M = np.array([[float(x) for x in line.split(",")[3:]] for line in lines[1:]])
    assert np.array_equal(M, g.distance_matrix(pts))


def test_rescale_excursion():
    e = RealExcursion(np.linspace(0, 1, 5), [0.0, 1.0, 0.5, 2.0, 0.0])
    same = rescale_excursion(e, 1.0)
    assert np.array_equal(same.grid, e.grid) and np.array_equal(same.values, e.values)
    e4 = rescale_excursion(e, 4.0)
    assert excursion_distance(e4, 1.0, 3.0) == pytest.approx(2 * excursion_distance(e, 0.25, 0.75))
    back = rescale_excursion(rescale_excursion(e, 3.0), 1 / 3)
    assert np.allclose(back.grid, e.grid) and np.allclose(back.values, e.values)
    with pytest.raises(ValidationError):
        rescale_excursion(e, 0.0)
