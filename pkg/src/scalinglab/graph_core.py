"""Multigraphs, surplus, cores and kernels, and the depth-first code of a
connected graph as a DFQ path with marks."""

from __future__ import annotations

import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, TextIO

import numpy as np

from ._validation import ValidationError, check_int
from .path_codes import DiscreteExcursion, dfq_of, tree_from_dfq
from .tree_core import LabelledRootedTree, RootedOrderedTree

__all__ = [
    "MultiGraph",
    "ConnectedGraph",
    "Kernel",
    "surplus",
    "core",
    "kernel",
    "core_from_kernel",
    "depth_first_tree",
    "MarkedDfq",
    "mark_slots",
    "graph_to_marked_dfq",
    "marked_dfq_to_graph",
    "area",
    "enumerate_Gns",
    "enumerate_connected_graphs",
    "count_Gn1",
    "graphs_with_core_count",
    "kernel_weight",
    "enumerate_cubic_multigraphs",
    "kernel_law",
    "kappa",
    "gaussian_moment",
    "wright_asymptotic",
    "read_multigraph",
    "write_multigraph",
]

ENUMERATION_LIMIT = 8


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class MultiGraph:
    """Multigraph on a finite set of integer labels; loops allowed.

    ``edges`` maps unordered pairs ``(u, v)`` with ``u <= v`` to their
    multiplicity. A loop contributes 2 to the degree of its vertex.
    """

    __slots__ = ("vertices", "edges", "_adj")

    def __init__(self, vertices: Iterable[int], edges: Mapping[tuple[int, int], int] | Iterable = ()):
        self.vertices = frozenset(int(v) for v in vertices)
        items = edges.items() if isinstance(edges, Mapping) else Counter(_key(*e) for e in edges).items()
        clean: dict[tuple[int, int], int] = {}
        for (u, v), m in items:
            u, v = _key(int(u), int(v))
            if m < 1:
                raise ValidationError("multiplicities must be >= 1")
            if u not in self.vertices or v not in self.vertices:
                raise ValidationError(f"edge {(u, v)} uses a vertex outside the vertex set")
            clean[(u, v)] = clean.get((u, v), 0) + int(m)
        self.edges = dict(sorted(clean.items()))
        self._adj = None

    @property
    def n(self) -> int:
        return len(self.vertices)

    def n_edges(self) -> int:
        return sum(self.edges.values())

    def mult(self, u: int, v: int) -> int:
        return self.edges.get(_key(u, v), 0)

    def adjacency(self) -> dict[int, dict[int, int]]:
        if self._adj is None:
            adj: dict[int, dict[int, int]] = {v: {} for v in self.vertices}
            for (u, v), m in self.edges.items():
                adj[u][v] = adj[u].get(v, 0) + m
                if u != v:
                    adj[v][u] = adj[v].get(u, 0) + m
            self._adj = adj
        return self._adj

    def degree(self, v: int) -> int:
        return sum(m * (2 if u == v else 1) for u, m in self.adjacency()[v].items())

    def degrees(self) -> dict[int, int]:
        return {v: self.degree(v) for v in self.vertices}

    def is_empty(self) -> bool:
        return not self.vertices

    def is_simple(self) -> bool:
        return all(u != v and m == 1 for (u, v), m in self.edges.items())

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        adj = self.adjacency()
        start = next(iter(self.vertices))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def surplus(self) -> int:
        return surplus(self)

    def canonical(self) -> tuple:
        return (tuple(sorted(self.vertices)), tuple(self.edges.items()))

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, edges={self.n_edges()})"


class ConnectedGraph(MultiGraph):
    """Simple connected graph on labels ``1..n``."""

    __slots__ = ()

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        check_int(n, "n", minimum=1)
        super().__init__(range(1, n + 1), edges)
        if not self.is_simple():
            raise ValidationError("graph must be simple (no loops or multiple edges)")
        if not self.is_connected():
            raise ValidationError("graph must be connected")

    def edge_list(self) -> list[tuple[int, int]]:
        return list(self.edges)


def surplus(g: MultiGraph) -> int:
    """``1 + |E| - |V|`` of a connected multigraph."""
    if g.is_empty():
        raise ValidationError("surplus is undefined for the empty graph")
    if not g.is_connected():
        raise ValidationError("surplus requires a connected graph")
    return 1 + g.n_edges() - g.n


def core(g: MultiGraph) -> MultiGraph:
    """Largest subgraph of minimum degree 2, by repeatedly deleting vertices
    of degree at most 1."""
    deg = g.degrees()
    adj = g.adjacency()
    alive = set(g.vertices)
    queue = [v for v, d in deg.items() if d <= 1]
    while queue:
        v = queue.pop()
        if v not in alive:
            continue
        alive.discard(v)
        for w, m in adj[v].items():
            if w in alive:
                deg[w] -= m
                if deg[w] <= 1:
                    queue.append(w)
    return MultiGraph(alive, {e: m for e, m in g.edges.items() if e[0] in alive and e[1] in alive})


class Kernel(MultiGraph):
    """Kernel multigraph plus the contracted paths of the core.

    ``paths[i]`` is the vertex sequence (endpoints included) of the core path
    replaced by one kernel edge. For a core that is a single cycle the kernel
    is empty and ``cycle_length`` holds the cycle length.
    """

    __slots__ = ("paths", "cycle_length")

    def __init__(self, vertices, edges, paths=(), cycle_length: int | None = None):
        super().__init__(vertices, edges)
        self.paths = tuple(tuple(p) for p in paths)
        self.cycle_length = cycle_length

    def path_lengths(self) -> list[int]:
        return [len(p) - 1 for p in self.paths]


def kernel(g: MultiGraph) -> Kernel:
    """Contract every maximal path of degree-2 core vertices into one edge."""
    c = core(g)
    if c.is_empty():
        return Kernel((), {})
    s = surplus(c)
    if s == 1:
        return Kernel((), {}, cycle_length=c.n)
    # expand multiplicities into individual edge instances
    inc: dict[int, list[tuple[int, int]]] = {v: [] for v in c.vertices}
    ends = []
    for (u, v), m in c.edges.items():
        for _ in range(m):
            eid = len(ends)
            ends.append((u, v))
            inc[u].append((v, eid))
            inc[v].append((u, eid))
    deg = c.degrees()
    branch = {v for v, d in deg.items() if d >= 3}
    used = [False] * len(ends)
    kedges: list[tuple[int, int]] = []
    paths = []
    for u in sorted(branch):
        for w, eid in inc[u]:
            if used[eid]:
                continue
            used[eid] = True
            path = [u, w]
            while w not in branch:
                nxt = next((x, e) for x, e in inc[w] if not used[e])
                used[nxt[1]] = True
                w = nxt[0]
                path.append(w)
            kedges.append((u, w))
            paths.append(path)
    return Kernel(branch, kedges, paths)


def core_from_kernel(k: Kernel) -> MultiGraph:
    """Rebuild the core by re-inserting the contracted paths."""
    edges = Counter()
    verts = set(k.vertices)
    for p in k.paths:
        verts.update(p)
        for a, b in zip(p[:-1], p[1:]):
            edges[_key(a, b)] += 1
    return MultiGraph(verts, edges)


def depth_first_tree(g: ConnectedGraph) -> tuple[LabelledRootedTree, list[tuple[int, int]]]:
    """Spanning tree of the stack exploration rooted at label 1.

    Unexplored neighbours not already on the stack become children and are
    pushed so that the smallest label is on top. Returns the tree and the
    surplus edges as ``(explored, on_stack)`` label pairs in discovery order.
    """
    n = g.n
    adj = g.adjacency()
    parent = np.full(n, -1, dtype=np.int64)
    state = np.zeros(n + 1, dtype=np.int8)  # 0 new, 1 on stack, 2 explored
    stack = [1]
    state[1] = 1
    extra = []
    while stack:
        v = stack.pop()
        state[v] = 2
        kids = []
        for w in sorted(adj[v]):
            if state[w] == 0:
                kids.append(w)
            elif state[w] == 1:
                extra.append((v, w))
        for w in reversed(kids):
            parent[w - 1] = v - 1
            state[w] = 1
            stack.append(w)
    return LabelledRootedTree(parent), extra


@dataclass(frozen=True, eq=False)
class MarkedDfq:
    """DFQ path of the depth-first tree, the vertex labels in depth-first
    order, and surplus marks ``(i, j)``.

    A mark ``(i, j)`` joins the vertex explored at step ``i`` (the vertex on
    top of a stack of size ``q_i``) with the stack entry at position ``j``
    counted from the bottom; legal marks satisfy ``1 <= j < q_i``.
    """

    q: DiscreteExcursion
    labels: tuple
    marks: frozenset

    def __post_init__(self):
        if self.q.flavor != "dfq":
            raise ValidationError("expected a DFQ-flavoured path")
        n = self.q.length
        labels = tuple(int(x) for x in self.labels)
        if sorted(labels) != list(range(1, n + 1)):
            raise ValidationError("labels must be a permutation of 1..n")
        marks = frozenset((int(i), int(j)) for i, j in self.marks)
        qq = self.q.q
        for i, j in marks:
            if not (0 <= i <= n and 1 <= j < qq[i]):
                raise ValidationError(f"mark {(i, j)} lies outside the legal slots")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "marks", marks)

    @property
    def n(self) -> int:
        return self.q.length

    def __eq__(self, other):
        if not isinstance(other, MarkedDfq):
            return NotImplemented
        return self.q == other.q and self.labels == other.labels and self.marks == other.marks

    def __hash__(self):
        return hash((self.q, self.labels, self.marks))


def mark_slots(q) -> list[tuple[int, int]]:
    """All legal mark positions ``(i, j)`` with ``1 <= j < q_i``."""
    qq = q.q if isinstance(q, DiscreteExcursion) else np.asarray(q)
    return [(i, j) for i in range(qq.size) for j in range(1, int(qq[i]))]


def area(x) -> int:
    """``sum_{i=1}^{n-1} (q_i - 1)`` of a tree's DFQ path."""
    if isinstance(x, RootedOrderedTree):
        x = dfq_of(x)
    qq = x.q if isinstance(x, DiscreteExcursion) else np.asarray(x)
    if qq.size <= 2:
        return 0
    return int((qq[1:-1] - 1).sum())


def _stack_snapshots(t: RootedOrderedTree):
    """Yield the stack (bottom first) before each exploration step."""
    stack = [t.root]
    while stack:
        yield stack
        v = stack.pop()
        stack.extend(reversed(t.children(v).tolist()))


def graph_to_marked_dfq(g: ConnectedGraph) -> MarkedDfq:
    t, extra = depth_first_tree(g)
    order = t.dfs_order()
    labels = tuple((order + 1).tolist())
    targets = {}
    for v, w in extra:
        targets.setdefault(v - 1, set()).add(w - 1)
    marks = set()
    for i, stack in enumerate(_stack_snapshots(t)):
        v = stack[-1]
        for w in targets.get(v, ()):
            marks.add((i, stack.index(w) + 1))
    return MarkedDfq(dfq_of(t), labels, frozenset(marks))


def marked_dfq_to_graph(m: MarkedDfq) -> ConnectedGraph:
    """Inverse of :func:`graph_to_marked_dfq`.

    Raises if the labels are not compatible with increasing-label exploration
    from vertex 1.
    """
    shape = tree_from_dfq(m.q)
    lab = np.asarray(m.labels, dtype=np.int64)
    if lab[0] != 1:
        raise ValidationError("the first explored vertex must carry label 1")
    for v in range(shape.n):
        kids = lab[shape.children(v)]
        if (np.diff(kids) <= 0).any():
            raise ValidationError("children must appear in increasing label order")
    edges = [(int(lab[p]), int(lab[c])) for p, c in shape.edges()]
    by_step = {}
    for i, j in m.marks:
        by_step.setdefault(i, []).append(j)
    for i, stack in enumerate(_stack_snapshots(shape)):
        for j in by_step.get(i, ()):
            edges.append((int(lab[stack[-1]]), int(lab[stack[j - 1]])))
    return ConnectedGraph(shape.n, edges)


def _connected(n: int, edges) -> bool:
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = n
    for u, v in edges:
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            comps -= 1
    return comps == 1


def enumerate_Gns(n: int, s: int) -> list[ConnectedGraph]:
    """Every connected simple graph on ``[n]`` with surplus ``s``."""
    check_int(n, "n", minimum=1, maximum=ENUMERATION_LIMIT)
    check_int(s, "s", minimum=0)
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    m = n - 1 + s
    if m > len(pairs):
        return []
    return [ConnectedGraph(n, es) for es in itertools.combinations(pairs, m) if _connected(n, es)]


def enumerate_connected_graphs(n: int) -> list[ConnectedGraph]:
    check_int(n, "n", minimum=1, maximum=ENUMERATION_LIMIT)
    out = []
    for s in range(0, n * (n - 1) // 2 - n + 2):
        out.extend(enumerate_Gns(n, s))
    return out


def graphs_with_core_count(n: int, k: int) -> int:
    """Number of graphs on ``[n]`` whose core is a fixed graph on ``k`` given
    vertices: the forests rooted at those vertices, ``k n^(n-k-1)``."""
    check_int(n, "n", minimum=1)
    check_int(k, "k", minimum=1, maximum=n)
    val = Fraction(k) * Fraction(n) ** (n - k - 1)
    if val.denominator != 1:
        raise ValidationError("count is not an integer")
    return int(val)


def count_Gn1(n: int) -> int:
    """Exact number of connected unicyclic graphs on ``[n]``."""
    total = 0
    for k in range(3, n + 1):
        cycles = math.comb(n, k) * math.factorial(k - 1) // 2
        total += cycles * graphs_with_core_count(n, k)
    return total


def kernel_weight(K: MultiGraph) -> Fraction:
    """``prod over distinct edges of 2^{-[loop]} / mult!``."""
    if K.is_empty():
        return Fraction(1)
    bad = [v for v, d in K.degrees().items() if d < 3]
    if bad:
        raise ValidationError(f"kernel vertices must have degree >= 3; violated at {bad}")
    w = Fraction(1)
    for (u, v), m in K.edges.items():
        w /= math.factorial(m) * (2 if u == v else 1)
    return w


def enumerate_cubic_multigraphs(k: int) -> list[MultiGraph]:
    """All 3-regular multigraphs (loops allowed) on labels ``1..k``."""
    check_int(k, "k", minimum=0)
    if k % 2:
        return []
    pairs = [(u, v) for u in range(1, k + 1) for v in range(u, k + 1)]
    need = [3] * (k + 1)
    out = []
    chosen: list[tuple[tuple[int, int], int]] = []

    def rec(start: int):
        # smallest vertex still missing degree must be served by pairs >= start
        v0 = next((v for v in range(1, k + 1) if need[v] > 0), None)
        if v0 is None:
            out.append(MultiGraph(range(1, k + 1), dict(chosen)))
            return
        for idx in range(start, len(pairs)):
            u, v = pairs[idx]
            if u > v0:
                break
            if u != v0:
                continue
            cost_u = 2 if u == v else 1
            max_m = need[u] // 2 if u == v else min(need[u], need[v])
            for m in range(max_m, 0, -1):
                need[u] -= cost_u * m
                if u != v:
                    need[v] -= m
                chosen.append(((u, v), m))
                rec(idx + 1)
                chosen.pop()
                need[u] += cost_u * m
                if u != v:
                    need[v] += m

    rec(0)
    return out


def _weighted_kernels(s: int):
    ks = [K for K in enumerate_cubic_multigraphs(2 * (s - 1)) if K.is_connected()]
    return [(K, kernel_weight(K)) for K in ks]


def kernel_law(s: int) -> list[tuple[MultiGraph, Fraction]]:
    """Normalised limiting kernel law over connected labelled cubic
    multigraphs on ``[2(s-1)]``."""
    check_int(s, "s", minimum=2)
    kw = _weighted_kernels(s)
    total = sum(w for _, w in kw)
    return [(K, w / total) for K, w in kw]


def kappa(s: int) -> Fraction:
    """Leading constant of the connected-graph count with surplus ``s``.

    For ``s >= 2`` it is the kernel-weight sum over connected cubic
    multigraphs on ``[2(s-1)]`` divided by ``(2s-2)!(3s-4)!``. For ``s = 1``
    the value 1/2 matches the exact unicyclic count ``sqrt(pi/8) n^(n-1/2)``.
    """
    check_int(s, "s", minimum=1)
    if s == 1:
        return Fraction(1, 2)
    total = sum(w for _, w in _weighted_kernels(s))
    return total / (math.factorial(2 * s - 2) * math.factorial(3 * s - 4))


def gaussian_moment(k: int) -> float:
    """``int_0^inf x^k e^{-x^2/2} dx = 2^{(k-1)/2} Gamma((k+1)/2)``."""
    return 2.0 ** ((k - 1) / 2) * math.gamma((k + 1) / 2)


def wright_asymptotic(n: int, s: int, log: bool = False) -> float:
    """Leading-order approximation of ``|G_n^s|`` (its natural log if ``log``)."""
    check_int(n, "n", minimum=1)
    logv = math.log(float(kappa(s))) + (n - 2 + 1.5 * s) * math.log(n) + math.log(gaussian_moment(3 * s - 3))
    return logv if log else math.exp(logv)


def write_multigraph(g: MultiGraph, stream: TextIO | None = None) -> str:
    """``u v m`` rows; isolated vertices get a ``# vertices`` header."""
    buf = io.StringIO()
    buf.write("# vertices " + " ".join(map(str, sorted(g.vertices))) + "\n")
    for (u, v), m in g.edges.items():
        buf.write(f"{u} {v} {m}\n")
    if isinstance(g, Kernel) and g.paths:
        for p in g.paths:
            buf.write("# path " + " ".join(map(str, p)) + "\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_multigraph(stream: TextIO) -> MultiGraph:
    verts: set[int] = set()
    edges: Counter = Counter()
    for line in stream:
        line = line.strip()
        if not line:
            continue
        if line.startswith("# vertices"):
            verts.update(int(x) for x in line.split()[2:])
            continue
        if line.startswith("#"):
            continue
        parts = [int(x) for x in line.split()]
        if len(parts) not in (2, 3):
            raise ValidationError(f"malformed multigraph row {line!r}")
        u, v = parts[0], parts[1]
        m = parts[2] if len(parts) == 3 else 1
        verts.update((u, v))
        edges[_key(u, v)] += m
    return MultiGraph(verts, edges)
