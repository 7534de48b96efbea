import io
import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from scalinglab._validation import ValidationError
from scalinglab.graph_core import (
    ConnectedGraph,
    MarkedDfq,
    MultiGraph,
    area,
    core,
    core_from_kernel,
    count_Gn1,
    depth_first_tree,
    enumerate_connected_graphs,
    enumerate_cubic_multigraphs,
    enumerate_Gns,
    gaussian_moment,
    graph_to_marked_dfq,
    graphs_with_core_count,
    kappa,
    kernel,
    kernel_law,
    kernel_weight,
    mark_slots,
    marked_dfq_to_graph,
    read_multigraph,
    surplus,
    wright_asymptotic,
)
from scalinglab.path_codes import DiscreteExcursion, dfq_of
from scalinglab.linebreak import decode

# connected labelled graphs on [n], n = 1..6
CONNECTED_COUNTS = [1, 1, 4, 38, 728, 26704]
UNICYCLIC_COUNTS = {3: 1, 4: 15, 5: 222, 6: 3660}


def cycle(k, offset=0):
    return [(offset + i, offset + i % k + 1) for i in range(1, k + 1)]


@st.composite
def connected_graphs(draw, max_n=14, max_extra=6):
    n = draw(st.integers(2, max_n))
    edges = set()
    for v in range(2, n + 1):
        edges.add((draw(st.integers(1, v - 1)), v))
    pairs = [p for p in itertools.combinations(range(1, n + 1), 2) if p not in edges]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=max_extra, unique=True)) if pairs else []
    perm = draw(st.permutations(range(1, n + 1)))
    return ConnectedGraph(n, [(perm[u - 1], perm[v - 1]) for u, v in edges | set(extra)])


def test_surplus_small_cases():
    assert surplus(ConnectedGraph(4, [(1, 2), (2, 3), (2, 4)])) == 0
    assert surplus(ConnectedGraph(3, cycle(3))) == 1
    with pytest.raises(ValidationError):
        surplus(MultiGraph([1, 2, 3], [(1, 2)]))
    with pytest.raises(ValidationError):
        ConnectedGraph(3, [(1, 2), (1, 2), (2, 3)])


def test_core_peels_trees_and_pendants():
    assert core(ConnectedGraph(4, [(1, 2), (2, 3), (3, 4)])).is_empty()
    c5 = ConnectedGraph(5, cycle(5))
    assert core(c5) == c5
    g = ConnectedGraph(7, cycle(4) + [(4, 5), (5, 6), (6, 7)])
    assert core(g) == MultiGraph(range(1, 5), cycle(4))


def test_kernel_examples():
    k = kernel(ConnectedGraph(6, cycle(6)))
    assert k.is_empty() and k.cycle_length == 6
    # theta: 1 and 2 joined by three paths of lengths 1, 2 and 3
    theta = ConnectedGraph(5, [(1, 2), (1, 3), (3, 2), (1, 4), (4, 5), (5, 2)])
    k = kernel(theta)
    assert k == MultiGraph([1, 2], {(1, 2): 3})
    assert sorted(k.path_lengths()) == [1, 2, 3]
    # two triangles joined by a path 3-7-4
    dumbbell = ConnectedGraph(7, cycle(3) + [(4, 5), (5, 6), (6, 4), (3, 7), (7, 4)])
    k = kernel(dumbbell)
    assert k == MultiGraph([3, 4], {(3, 3): 1, (4, 4): 1, (3, 4): 1})
    assert kernel_weight(k) == Fraction(1, 4)
    # two cycles sharing a path
    shared = ConnectedGraph(6, [(1, 2), (2, 3), (3, 4), (4, 1), (2, 5), (5, 6), (6, 4)])
    assert kernel(shared) == MultiGraph([2, 4], {(2, 4): 3})


@given(connected_graphs())
@settings(max_examples=150, deadline=None)
def test_core_and_kernel_preserve_surplus(g):
    s = surplus(g)
    c = core(g)
    assert c.is_empty() == (s == 0)
    if s >= 1:
        assert surplus(c) == s
        assert min(c.degrees().values()) >= 2
    k = kernel(g)
    if s >= 2:
        assert surplus(k) == s
        assert min(k.degrees().values()) >= 3
        assert core_from_kernel(k) == c
    else:
        assert k.is_empty()


def test_depth_first_tree_examples():
    t_edges = [(1, 3), (3, 2), (3, 4)]
    t, extra = depth_first_tree(ConnectedGraph(4, t_edges))
    assert extra == [] and {frozenset(e) for e in t.edge_set()} == {frozenset(e) for e in t_edges}
    t, extra = depth_first_tree(ConnectedGraph(3, cycle(3)))
    # exploring 1 pushes 2 and 3; exploring 2 finds 3 still on the stack
    assert {frozenset(e) for e in t.edge_set()} == {frozenset((1, 2)), frozenset((1, 3))}
    assert extra == [(2, 3)]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_marked_dfq_round_trip_exhaustive(n):
    seen = set()
    graphs = enumerate_connected_graphs(n)
    assert len(graphs) == CONNECTED_COUNTS[n - 1]
    for g in graphs:
        m = graph_to_marked_dfq(g)
        assert len(m.marks) == surplus(g)
        assert marked_dfq_to_graph(m) == g
        t, _ = depth_first_tree(g)
        assert m.q == dfq_of(t)
        seen.add(m)
    assert len(seen) == len(graphs)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_area_counts_graphs_over_each_tree(n):
    # sum over labelled trees (rooted at 1) of 2^{a(T)}
    total = 0
    trees = enumerate_Gns(n, 0)
    assert len(trees) == n ** (n - 2) if n > 1 else 1
    per_tree = Counter()
    for g in enumerate_connected_graphs(n):
        per_tree[depth_first_tree(g)[0]] += 1
    for g in trees:
        t, _ = depth_first_tree(g)
        a = area(t)
        assert a == len(mark_slots(dfq_of(t)))
        assert per_tree[t] == 2**a
        total += 2**a
    assert total == CONNECTED_COUNTS[n - 1]


def test_area_examples():
    path = ConnectedGraph(5, [(i, i + 1) for i in range(1, 5)])
    assert area(depth_first_tree(path)[0]) == 0
    for n in (3, 6, 9):
        star = ConnectedGraph(n, [(1, i) for i in range(2, n + 1)])
        assert area(depth_first_tree(star)[0]) == (n - 1) * (n - 2) // 2


def test_marks_outside_slots_rejected():
    q = DiscreteExcursion(np.array([1, 2, 1, 0]), "dfq")
    with pytest.raises(ValidationError):
        MarkedDfq(q, (1, 2, 3), {(1, 2)})
    with pytest.raises(ValidationError):
        MarkedDfq(q, (1, 2, 3), {(0, 1)})
    ok = MarkedDfq(q, (1, 2, 3), {(1, 1)})
    assert surplus(marked_dfq_to_graph(ok)) == 1


def test_enumeration_counts():
    assert len(enumerate_Gns(3, 0)) == 3
    assert len(enumerate_Gns(4, 0)) == 16
    assert len(enumerate_Gns(4, 1)) == 15
    for n, c in UNICYCLIC_COUNTS.items():
        assert count_Gn1(n) == c
    assert len(enumerate_Gns(6, 1)) == 3660
    with pytest.raises(ValidationError):
        enumerate_Gns(9, 0)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_graphs_with_core_count_against_enumeration(n):
    for k in range(3, n + 1):
        target = MultiGraph(range(1, k + 1), cycle(k))
        hits = sum(core(g) == target for g in enumerate_Gns(n, 1))
        assert hits == graphs_with_core_count(n, k)
    assert graphs_with_core_count(n, n) == 1


def test_graphs_with_core_count_values():
    assert graphs_with_core_count(4, 3) == 3
    assert graphs_with_core_count(5, 3) == 15


def test_kernel_weights_and_law():
    assert kernel_weight(MultiGraph([1, 2], {(1, 2): 3})) == Fraction(1, 6)
    assert kernel_weight(MultiGraph([1, 2], {(1, 1): 1, (2, 2): 1, (1, 2): 1})) == Fraction(1, 4)
    with pytest.raises(ValidationError):
        kernel_weight(MultiGraph([1, 2], {(1, 2): 2}))
    law = dict((K.canonical(), p) for K, p in kernel_law(2))
    assert sorted(law.values()) == [Fraction(2, 5), Fraction(3, 5)]
    assert sum(p for _, p in kernel_law(3)) == 1


def test_cubic_multigraph_enumeration_by_brute_force():
    # every multiset of 3 edges on [2] and of 6 edges on [4] with all degrees 3
    for k in (2, 4):
        pairs = [(u, v) for u in range(1, k + 1) for v in range(u, k + 1)]
        brute = set()
        for combo in itertools.combinations_with_replacement(pairs, 3 * k // 2):
            deg = Counter()
            for u, v in combo:
                deg[u] += 1
                deg[v] += 1
            if all(deg[v] == 3 for v in range(1, k + 1)):
                brute.add(MultiGraph(range(1, k + 1), Counter(combo)))
        assert set(enumerate_cubic_multigraphs(k)) == brute


# Wright's constants for connected graphs with n + k edges
WRIGHT_SIGMA = {1: Fraction(5, 24), 2: Fraction(5, 16), 3: Fraction(1105, 1152)}


def test_kappa_values():
    assert kappa(1) == Fraction(1, 2)
    assert kappa(2) == Fraction(5, 48)
    assert kappa(3) == Fraction(1, 384)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_kappa_against_wright_constants(s):
    k = s - 1
    rho = math.sqrt(math.pi) * 2 ** ((1 - 3 * k) / 2) * float(WRIGHT_SIGMA[k]) / math.gamma(3 * k / 2)
    assert float(kappa(s)) * gaussian_moment(3 * s - 3) == pytest.approx(rho, rel=1e-12)


def test_kernel_law_ignores_disconnected_cubic_graphs():
    law = kernel_law(3)
    assert all(K.is_connected() for K, _ in law)
    assert len(law) < len(enumerate_cubic_multigraphs(4))


def test_unicyclic_ratio_approaches_one():
    ns = [4, 5, 6, 7, 8, 20, 100, 2000]
    ratios = [math.exp(math.log(count_Gn1(n)) - wright_asymptotic(n, 1, log=True)) for n in ns]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 0.05
    assert count_Gn1(5) == len(enumerate_Gns(5, 1))


def test_gaussian_moment_matches_quadrature():
    for k in range(0, 10):
        num, _ = integrate.quad(lambda x: x**k * math.exp(-x * x / 2), 0, np.inf)
        assert gaussian_moment(k) == pytest.approx(num, rel=1e-9)


def test_multigraph_io_round_trip():
    g = MultiGraph([1, 2, 3, 9], {(1, 1): 1, (1, 2): 2, (2, 3): 1})
    text = io.StringIO()
    from scalinglab.graph_core import write_multigraph

    write_multigraph(g, text)
    assert read_multigraph(io.StringIO(text.getvalue())) == g
    assert "1 1 1" in text.getvalue()
    with pytest.raises(ValidationError):
        read_multigraph(io.StringIO("1 2 3 4\n"))


def test_loop_counts_twice_in_degree():
    g = MultiGraph([1], {(1, 1): 1})
    assert g.degree(1) == 2
