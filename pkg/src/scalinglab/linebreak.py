"""Line-breaking coding of labelled rooted trees and sequential tree growth.

The coding word of a rooted tree on ``[n]`` is a word in ``[n]^(n-1)``.
Paths are added in order of the smallest absent label; the word lists each
path without its final vertex. Decoding reads the word left to right and
closes the current path whenever the next symbol is already placed or is the
current target label.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numba
import numpy as np

from ._validation import ValidationError, check_int, check_random_state
from .segments import SegmentGraph, SegmentGraphBuilder
from .tree_core import LabelledRootedTree, check_child_sequence

__all__ = [
    "CodingWord",
    "encode",
    "decode",
    "prufer_largest_leaf",
    "uniform_labelled_tree",
    "sample_with_child_sequence",
    "subtree_sizes",
    "root_distance_pmf",
    "root_distance_table",
    "subtree_growth_law",
    "LineBreakSchedule",
    "poisson_rate_t_arrivals",
    "MetricTreeApprox",
    "crt_linebreak",
    "LeafTree",
    "remy_step",
    "enumerate_binary_shapes",
    "marchal_choice_weights",
    "marchal_apply",
    "marchal_step",
    "marchal_rescaled_distance",
    "marchal_distance_series",
    "double_factorial",
]


@numba.njit(cache=True)
def _encode_kernel(parent, root):
    n = parent.shape[0]
    word = np.empty(max(n - 1, 0), dtype=np.int64)
    in_s = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n, dtype=np.int64)
    in_s[root] = True
    pos = 0
    y = 0
    while True:
        while y < n and in_s[y]:
            y += 1
        if y == n:
            break
        length = 0
        v = y
        while not in_s[v]:
            buf[length] = v
            length += 1
            v = parent[v]
        word[pos] = v
        pos += 1
        for j in range(length - 1, 0, -1):
            word[pos] = buf[j]
            pos += 1
        for j in range(length):
            in_s[buf[j]] = True
    return word


@numba.njit(cache=True)
def _decode_kernel(word, n, stop_after):
    """Returns (parent, path start positions). Stops early once ``stop_after``
    paths have been closed and the next one has started (``stop_after`` < 0
    decodes everything)."""
    parent = np.full(n, -1, dtype=np.int64)
    starts = np.empty(n, dtype=np.int64)
    if n == 1:
        return parent, starts[:0]
    in_s = np.zeros(n, dtype=np.bool_)
    root = word[0]
    in_s[root] = True
    y = 0
    while in_s[y]:
        y += 1
    prev = root
    starts[0] = 0
    npaths = 1
    for k in range(1, n - 1):
        v = word[k]
        if in_s[v] or v == y:
            parent[y] = prev
            in_s[y] = True
            while y < n and in_s[y]:
                y += 1
            prev = v
            starts[npaths] = k
            npaths += 1
            if stop_after >= 0 and npaths > stop_after:
                return parent, starts[:npaths]
        else:
            parent[v] = prev
            in_s[v] = True
            prev = v
    parent[y] = prev
    return parent, starts[:npaths]


class CodingWord(tuple):
    """Word ``v_1 ... v_{n-1}`` with symbols in ``1..n`` (1-based)."""

    def __new__(cls, symbols: Iterable[int], n: int | None = None):
        w = tuple(int(x) for x in symbols)
        n = len(w) + 1 if n is None else n
        if len(w) != n - 1:
            raise ValidationError(f"a coding word for n={n} has length {n - 1}, got {len(w)}")
        if any(not 1 <= x <= n for x in w):
            raise ValidationError(f"symbols must lie in 1..{n}")
        return super().__new__(cls, w)

    @property
    def n(self) -> int:
        return len(self) + 1

    def __str__(self):
        return " ".join(map(str, self))

    @classmethod
    def parse(cls, text: str) -> "CodingWord":
        return cls(int(x) for x in text.split())


def encode(t: LabelledRootedTree) -> CodingWord:
    """Coding word of a labelled rooted tree."""
    word = _encode_kernel(np.ascontiguousarray(t.parent), t.root)
    return CodingWord((word + 1).tolist(), t.n)


def _as_zero_based(w) -> tuple[np.ndarray, int]:
    if isinstance(w, str):
        w = CodingWord.parse(w)
    arr = np.asarray(w, dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError("coding word must be one-dimensional")
    n = arr.size + 1
    if arr.size and (arr.min() < 1 or arr.max() > n):
        raise ValidationError(f"symbols must lie in 1..{n}")
    return arr - 1, n


def decode(w) -> LabelledRootedTree:
    """Inverse of :func:`encode`; every word in ``[n]^(n-1)`` decodes."""
    arr, n = _as_zero_based(w)
    parent, _ = _decode_kernel(arr, n, -1)
    return LabelledRootedTree(parent)


def subtree_sizes(w, k: int) -> np.ndarray:
    """Sizes ``|S_1|, ..., |S_k|`` of the nested subtrees built while decoding.

    Entries beyond the number of paths in the word equal ``n``.
    """
    arr, n = _as_zero_based(w)
    check_int(k, "k", minimum=1)
    if n == 1:
        return np.ones(k, dtype=np.int64)
    _, starts = _decode_kernel(arr, n, k)
    sizes = np.full(k, n, dtype=np.int64)
    m = min(k, starts.size - 1)
    sizes[:m] = starts[1 : m + 1] + 1
    return sizes


def prufer_largest_leaf(t: LabelledRootedTree) -> list[int]:
    """Rooted Prüfer code: repeatedly delete the largest-labelled non-root leaf
    and record its neighbour, ``n - 1`` times."""
    n = t.n
    adj: list[set[int]] = [set() for _ in range(n + 1)]
    for u, v in t.edge_set():
        adj[u].add(v)
        adj[v].add(u)
    root = t.root_label
    heap = [-v for v in range(1, n + 1) if v != root and len(adj[v]) == 1]
    heapq.heapify(heap)
    code = []
    for _ in range(n - 1):
        leaf = -heapq.heappop(heap)
        (nb,) = adj[leaf]
        code.append(nb)
        adj[nb].discard(leaf)
        adj[leaf].clear()
        if nb != root and len(adj[nb]) == 1:
            heapq.heappush(heap, -nb)
    return code


def uniform_labelled_tree(n: int, rng=None) -> LabelledRootedTree:
    """Uniform rooted tree on ``[n]``, by decoding a uniform word."""
    check_int(n, "n", minimum=1)
    rng = check_random_state(rng)
    return decode(rng.integers(1, n + 1, size=n - 1))


def sample_with_child_sequence(c, rng=None) -> LabelledRootedTree:
    """Uniform labelled rooted tree in which label ``i`` has ``c[i-1]`` children."""
    c = check_child_sequence(c)
    rng = check_random_state(rng)
    letters = np.repeat(np.arange(1, c.size + 1), c)
    return decode(rng.permutation(letters))


def root_distance_pmf(n: int, d: int, exact: bool = False):
    """``P(dist(root, 1) = d)`` for a uniform rooted tree on ``[n]``."""
    check_int(n, "n", minimum=1)
    check_int(d, "d", minimum=0)
    one = Fraction(1) if exact else 1.0
    p = one * (d + 1) / n
    for j in range(1, d + 1):
        p *= 1 - one * j / n
    return p


def root_distance_table(n: int) -> np.ndarray:
    """Vector of :func:`root_distance_pmf` over ``d = 0..n-1``."""
    check_int(n, "n", minimum=1)
    d = np.arange(n)
    surv = np.concatenate([[1.0], np.cumprod(1 - np.arange(1, n) / n)])
    return (d + 1) / n * surv


def subtree_growth_law(n: int, size: int, d: int, absent: bool = True, exact: bool = False):
    """Conditional law of the distance from ``i+1`` to ``S_i`` given ``|S_i| = size``.

    ``absent`` says whether ``i+1`` lies outside ``S_i``; if not the
    probability is zero.
    """
    check_int(n, "n", minimum=1)
    check_int(size, "size", minimum=1, maximum=n)
    check_int(d, "d", minimum=1)
    if not absent:
        return Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    p = one * (size + d) / n
    for j in range(1, d):
        p *= 1 - one * (size + j) / n
    return max(p, 0 * one)


@dataclass(frozen=True)
class LineBreakSchedule:
    """Increasing arrival times ``s_1 < s_2 < ...`` started from ``offset``."""

    s: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("schedule needs at least one arrival")
        if not (s[0] > self.offset and np.all(np.diff(s) > 0)):
            raise ValidationError("arrival times must be strictly increasing")
        s.flags.writeable = False
        object.__setattr__(self, "s", s)

    def increments(self) -> np.ndarray:
        return np.diff(np.concatenate([[self.offset], self.s]))


def poisson_rate_t_arrivals(k: int, offset: float = 0.0, rng=None, size: int | None = None):
    """First ``k`` arrivals after ``offset`` of a Poisson process with rate ``t``.

    Generated by inversion: ``s_i^2 = s_{i-1}^2 + 2 E_i`` with ``E_i`` standard
    exponential. With ``size`` given, returns a ``(size, k)`` array instead of
    a single :class:`LineBreakSchedule`.
    """
    check_int(k, "k", minimum=1)
    if offset < 0:
        raise ValidationError("offset must be nonnegative")
    rng = check_random_state(rng)
    shape = (k,) if size is None else (size, k)
    e = rng.standard_exponential(shape)
    s = np.sqrt(offset * offset + 2.0 * np.cumsum(e, axis=-1))
    if size is None:
        return LineBreakSchedule(s, float(offset))
    return s


def _clusters(adj: list[list[int]], root: int, leaf_label: dict[int, int]) -> frozenset:
    """Leaf-label sets below every non-root vertex of a tree rooted at ``root``."""
    order, parent = [root], {root: -1}
    for v in order:
        for w in adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    below: dict[int, frozenset] = {}
    for v in reversed(order):
        own = frozenset([leaf_label[v]]) if v in leaf_label and v != root else frozenset()
        kids = [below[w] for w in adj[v] if parent.get(w) == v]
        below[v] = own.union(*kids) if kids else own
    return frozenset(below[v] for v in order[1:])


@dataclass(frozen=True)
class MetricTreeApprox:
    """Finite line-breaking tree: a segment tree with labelled leaves."""

    graph: SegmentGraph
    schedule: LineBreakSchedule

    @property
    def leaf_nodes(self) -> dict:
        return {lab: node for lab, node in self.graph.labels.items()}

    def leaf_distances(self) -> np.ndarray:
        labels = sorted(self.leaf_nodes)
        nodes = [self.leaf_nodes[lab] for lab in labels]
        return self.graph.node_distances(nodes)[:, nodes]

    def shape_key(self) -> frozenset:
        g = self.graph
        adj: list[list[int]] = [[] for _ in range(g.n_nodes)]
        for u, v in zip(g.seg_u.tolist(), g.seg_v.tolist()):
            adj[u].append(v)
            adj[v].append(u)
        leaf_label = {node: lab for lab, node in self.leaf_nodes.items()}
        return _clusters(adj, self.leaf_nodes[0], leaf_label)


def crt_linebreak(k: int, rng=None) -> MetricTreeApprox:
    """Tree with root leaf 0 and leaves ``1..k`` grown by line-breaking.

    Segment ``i`` has length ``s_i - s_{i-1}`` and is glued at a point drawn
    from the normalised length measure of the current tree.
    """
    check_int(k, "k", minimum=1)
    rng = check_random_state(rng)
    sched = poisson_rate_t_arrivals(k, 0.0, rng)
    inc = sched.increments()
    b = SegmentGraphBuilder()
    b.add_node("leaf", label=0)
    b.add_node("leaf", label=1)
    b.add_segment(0, 1, inc[0])
    for i in range(1, k):
        seg, off = b.locate(rng)
        w = b.split(seg, off)
        leaf = b.add_node("leaf", label=i + 1)
        b.add_segment(w, leaf, inc[i])
    return MetricTreeApprox(b.freeze(), sched)


class LeafTree:
    """Rooted tree grown from a root leaf 0 and a leaf 1 (node 0 is the root).

    Every edge is identified with its lower endpoint, so edges are the nodes
    ``1..N-1``. Leaves carry labels; internal nodes have none.
    """

    __slots__ = ("parent", "children", "label", "n_leaves")

    def __init__(self, parent, children, label, n_leaves):
        self.parent = parent
        self.children = children
        self.label = label
        self.n_leaves = n_leaves

    @classmethod
    def initial(cls) -> "LeafTree":
        return cls([-1, 0], [[1], []], {0: 0, 1: 1}, 1)

    def copy(self) -> "LeafTree":
        return LeafTree(list(self.parent), [list(c) for c in self.children], dict(self.label), self.n_leaves)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def n_edges(self) -> int:
        return len(self.parent) - 1

    def _new_node(self) -> int:
        self.parent.append(-1)
        self.children.append([])
        return len(self.parent) - 1

    def _attach_leaf(self, v: int) -> None:
        leaf = self._new_node()
        self.parent[leaf] = v
        self.children[v].append(leaf)
        self.n_leaves += 1
        self.label[leaf] = self.n_leaves

    def _subdivide(self, v: int) -> int:
        p = self.parent[v]
        w = self._new_node()
        kids = self.children[p]
        kids[kids.index(v)] = w
        self.parent[w] = p
        self.parent[v] = w
        self.children[w].append(v)
        return w

    def depth_of_label(self, lab: int) -> int:
        node = next(v for v, x in self.label.items() if x == lab)
        d = 0
        while self.parent[node] >= 0:
            node = self.parent[node]
            d += 1
        return d

    def shape_key(self) -> frozenset:
        adj = [list(c) + ([p] if p >= 0 else []) for c, p in zip(self.children, self.parent)]
        return _clusters(adj, 0, self.label)


def _remy_insert(t: LeafTree, edge: int) -> LeafTree:
    t = t.copy()
    w = t._subdivide(edge)
    t._attach_leaf(w)
    return t


def remy_step(t: LeafTree, rng=None) -> LeafTree:
    """Subdivide a uniform edge and hang the next leaf from the new vertex."""
    rng = check_random_state(rng)
    return _remy_insert(t, int(rng.integers(1, t.n_nodes)))


def enumerate_binary_shapes(steps: int) -> list[LeafTree]:
    """All trees reachable from the initial tree by ``steps`` insertions
    (one per distinct shape; there are ``(2 steps - 1)!!`` of them)."""
    level = [LeafTree.initial()]
    for _ in range(steps):
        level = [_remy_insert(t, e) for t in level for e in range(1, t.n_nodes)]
    return level


def double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise ValidationError("alpha must lie in (1, 2]")
    return alpha


def marchal_choice_weights(t: LeafTree, alpha: float) -> list[tuple[tuple[str, int], float]]:
    """Every admissible move with its unnormalised weight."""
    alpha = _check_alpha(alpha)
    moves = [(("edge", v), alpha - 1.0) for v in range(1, t.n_nodes)]
    for v in range(t.n_nodes):
        c = len(t.children[v])
        if c >= 2 and c - alpha > 0:
            moves.append((("vertex", v), c - alpha))
    return moves


def marchal_apply(t: LeafTree, move: tuple[str, int]) -> LeafTree:
    kind, v = move
    t = t.copy()
    if kind == "edge":
        t._attach_leaf(t._subdivide(v))
    elif kind == "vertex":
        t._attach_leaf(v)
    else:
        raise ValidationError(f"unknown move {move!r}")
    return t


def marchal_step(t: LeafTree, alpha: float, rng=None) -> LeafTree:
    """One step of the weighted growth rule: edges weigh ``alpha - 1``,
    vertices with ``c >= 2`` children weigh ``c - alpha``."""
    rng = check_random_state(rng)
    moves = marchal_choice_weights(t, alpha)
    w = np.array([m[1] for m in moves])
    k = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
    return marchal_apply(t, moves[min(k, len(moves) - 1)][0])


def marchal_rescaled_distance(trees: Sequence[LeafTree], alpha: float) -> np.ndarray:
    """``i^{-(alpha-1)/alpha}`` times the distance between leaves 0 and 1."""
    alpha = _check_alpha(alpha)
    out = []
    for t in trees:
        i = t.n_leaves
        out.append(i ** (-(alpha - 1) / alpha) * t.depth_of_label(1))
    return np.asarray(out, dtype=float)


def marchal_distance_series(alpha: float, checkpoints: Sequence[int], rng=None) -> np.ndarray:
    """Rescaled leaf-0/leaf-1 distance at each checkpoint of one long run.

    Equivalent to :func:`marchal_step` iterated, but updates the tree in
    place and draws weighted vertices by rejection, so a step costs O(1).
    """
    alpha = _check_alpha(alpha)
    rng = check_random_state(rng)
    checkpoints = sorted(int(c) for c in checkpoints)
    parent = [-1, 0]
    nkids = [1, 0]
    leaf1 = 1
    heavy_sum = 0  # sum of c over vertices with c >= 2
    heavy_count = 0
    out = []
    i = 1
    for target in checkpoints:
        while i < target:
            n_nodes = len(parent)
            w_edges = (alpha - 1.0) * (n_nodes - 1)
            w_vertices = heavy_sum - alpha * heavy_count
            if rng.random() * (w_edges + w_vertices) < w_edges:
                v = int(rng.integers(1, n_nodes))
                w = n_nodes
                parent.append(parent[v])
                nkids.append(2)
                parent[v] = w
                heavy_sum += 2
                heavy_count += 1
                attach = w
            else:
                # a uniform non-root node's parent is a vertex chosen with
                # probability proportional to c; thin to c - alpha
                while True:
                    x = int(rng.integers(1, n_nodes))
                    p = parent[x]
                    c = nkids[p]
                    if c >= 2 and rng.random() * c < c - alpha:
                        break
                attach = p
                nkids[p] += 1
                heavy_sum += 1
            parent.append(attach)
            nkids.append(0)
            i += 1
        d, node = 0, leaf1
        while parent[node] >= 0:
            node = parent[node]
            d += 1
        out.append(target ** (-(alpha - 1) / alpha) * d)
    return np.asarray(out)
