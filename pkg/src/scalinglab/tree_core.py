"""Rooted ordered trees, labelled trees and their elementary statistics.

Vertices are indexed ``0..n-1`` internally. Labelled trees use the
convention that the vertex with index ``i`` carries label ``i + 1`` and that
the children of every vertex are listed by increasing label.
"""

from __future__ import annotations

import io
from typing import Iterable, TextIO

import numba
import numpy as np

from ._validation import ValidationError, check_int

__all__ = [
    "RootedOrderedTree",
    "LabelledRootedTree",
    "check_child_sequence",
    "child_counts",
    "dfs_order",
    "forget_order",
    "tree_distance",
    "read_parent_array",
    "write_parent_array",
    "read_edge_list",
    "write_edge_list",
]


@numba.njit(cache=True)
def _dfs_kernel(offsets, children, root):
    n = offsets.shape[0] - 1
    order = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[0] = root
    k = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        order[k] = v
        k += 1
        # push in reverse so that the first child is popped first
        for j in range(offsets[v + 1] - 1, offsets[v] - 1, -1):
            top += 1
            stack[top] = children[j]
    return order[:k]


@numba.njit(cache=True)
def _depth_kernel(order, parent):
    depth = np.zeros(order.shape[0], dtype=np.int64)
    for k in range(1, order.shape[0]):
        v = order[k]
        depth[v] = depth[parent[v]] + 1
    return depth


class RootedOrderedTree:
    """A finite rooted tree with an ordering of the children of every vertex.

    Parameters
    ----------
    parent : array_like of int
        ``parent[v]`` is the parent index of ``v``; the root has ``-1``.
    order_key : array_like, optional
        Children of each vertex are sorted by this key (stable). Defaults to
        the vertex index.
    """

    __slots__ = ("parent", "root", "offsets", "child_array", "_order", "_depth")

    def __init__(self, parent, order_key=None, *, _csr=None, _order=None):
        parent = np.asarray(parent, dtype=np.int64)
        if parent.ndim != 1 or parent.size == 0:
            raise ValidationError("parent array must be a non-empty 1-d array")
        n = parent.size
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise ValidationError(f"expected exactly one root, found {roots.size}")
        if parent.max() >= n:
            raise ValidationError("parent index out of range")
        self.root = int(roots[0])
        if _csr is None:
            nonroot = np.flatnonzero(parent >= 0)
            key = np.arange(n) if order_key is None else np.asarray(order_key)
            idx = nonroot[np.lexsort((key[nonroot], parent[nonroot]))]
            counts = np.bincount(parent[nonroot], minlength=n)
            offsets = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=offsets[1:])
            child_array = idx.astype(np.int64)
        else:
            offsets, child_array = _csr
        self.parent = parent
        self.offsets = offsets
        self.child_array = child_array
        self._depth = None
        if _order is None:
            _order = _dfs_kernel(offsets, child_array, self.root)
            if _order.size != n:
                raise ValidationError("parent array contains a cycle")
        self._order = _order
        for a in (self.parent, self.offsets, self.child_array, self._order):
            a.flags.writeable = False

    @property
    def n(self) -> int:
        return self.parent.size

    def children(self, v: int) -> np.ndarray:
        return self.child_array[self.offsets[v] : self.offsets[v + 1]]

    def child_counts(self) -> np.ndarray:
        """Number of children of each vertex, indexed by vertex."""
        return np.diff(self.offsets)

    def dfs_order(self) -> np.ndarray:
        """Vertices in the order they are first visited by the contour walk."""
        return self._order

    def depths(self) -> np.ndarray:
        if self._depth is None:
            d = _depth_kernel(self._order, self.parent)
            d.flags.writeable = False
            self._depth = d
        return self._depth

    def edges(self) -> np.ndarray:
        """Array of ``(parent, child)`` pairs in child-index order."""
        nonroot = np.flatnonzero(self.parent >= 0)
        return np.column_stack([self.parent[nonroot], nonroot])

    def relabel_dfs(self) -> "RootedOrderedTree":
        """Copy whose vertex indices coincide with depth-first positions."""
        order = self._order
        pos = np.empty(self.n, dtype=np.int64)
        pos[order] = np.arange(self.n)
        new_parent = np.full(self.n, -1, dtype=np.int64)
        nonroot = order[1:]
        new_parent[pos[nonroot]] = pos[self.parent[nonroot]]
        return RootedOrderedTree(new_parent)

    def __eq__(self, other):
        if not isinstance(other, RootedOrderedTree):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.child_array, other.child_array)
        )

    def __hash__(self):
        return hash((self.parent.tobytes(), self.child_array.tobytes()))

    def shape_key(self) -> tuple:
        """Index-free key: two ordered trees are isomorphic iff keys agree."""
        return tuple(self.child_counts()[self._order].tolist())

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, root={self.root})"


class LabelledRootedTree(RootedOrderedTree):
    """Rooted tree on labels ``1..n``; children ordered by increasing label."""

    __slots__ = ()

    def __init__(self, parent):
        super().__init__(parent)

    @property
    def labels(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    @property
    def root_label(self) -> int:
        return self.root + 1

    def edge_set(self) -> set[tuple[int, int]]:
        """Edges as ``(parent_label, child_label)`` pairs."""
        return {(int(p) + 1, int(c) + 1) for p, c in self.edges()}

    @classmethod
    def from_edges(cls, n: int, root_label: int, edges: Iterable[tuple[int, int]]):
        """Build from undirected edges with 1-based labels."""
        edges = list(edges)
        if len(edges) != n - 1:
            raise ValidationError(f"a tree on {n} vertices needs {n - 1} edges")
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u - 1].append(v - 1)
            adj[v - 1].append(u - 1)
        parent = np.full(n, -2, dtype=np.int64)
        root = root_label - 1
        parent[root] = -1
        stack = [root]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if parent[w] == -2:
                    parent[w] = u
                    stack.append(w)
        if (parent == -2).any():
            raise ValidationError("edge list is not connected")
        return cls(parent)


def check_child_sequence(c) -> np.ndarray:
    """Validate a child sequence ``(c_1, ..., c_n)``; entries must sum to n-1."""
    c = np.asarray(c, dtype=np.int64)
    if c.ndim != 1 or c.size == 0:
        raise ValidationError("child sequence must be a non-empty 1-d array")
    if (c < 0).any():
        raise ValidationError("child counts must be nonnegative")
    if int(c.sum()) != c.size - 1:
        raise ValidationError(f"child counts sum to {int(c.sum())}, expected {c.size - 1}")
    return c


def child_counts(t: RootedOrderedTree) -> np.ndarray:
    """Child sequence of a labelled tree: entry ``i-1`` counts children of label ``i``."""
    return t.child_counts().copy()


def dfs_order(t: RootedOrderedTree) -> np.ndarray:
    return t.dfs_order()


def forget_order(t: RootedOrderedTree, labels) -> LabelledRootedTree:
    """Attach labels (a permutation of ``1..n``) and drop the sibling order.

    ``labels[v]`` is the label given to vertex ``v`` of ``t``. The result uses
    the increasing-label convention for children.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = t.n
    if labels.shape != (n,) or not np.array_equal(np.sort(labels), np.arange(1, n + 1)):
        raise ValidationError("labels must be a permutation of 1..n")
    new_parent = np.full(n, -1, dtype=np.int64)
    nonroot = np.flatnonzero(t.parent >= 0)
    new_parent[labels[nonroot] - 1] = labels[t.parent[nonroot]] - 1
    return LabelledRootedTree(new_parent)


def tree_distance(t: RootedOrderedTree, u: int, v: int) -> int:
    """Graph distance between vertices ``u`` and ``v`` (internal indices)."""
    d = t.depths()
    du, dv = int(d[u]), int(d[v])
    steps = 0
    while du > dv:
        u = t.parent[u]
        du -= 1
        steps += 1
    while dv > du:
        v = t.parent[v]
        dv -= 1
        steps += 1
    while u != v:
        u = t.parent[u]
        v = t.parent[v]
        steps += 2
    return steps


def _data_lines(stream: TextIO):
    for line in stream:
        line = line.strip()
        if line and not line.startswith("#"):
            yield line


def write_parent_array(t: LabelledRootedTree, stream: TextIO | None = None) -> str:
    """Parent-array text format: ``n root_label`` then ``label parent_label`` rows."""
    buf = io.StringIO()
    buf.write(f"{t.n} {t.root + 1}\n")
    par = np.where(t.parent < 0, np.arange(t.n), t.parent) + 1
    for label, p in zip(range(1, t.n + 1), par.tolist()):
        buf.write(f"{label} {p}\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_parent_array(stream: TextIO) -> LabelledRootedTree:
    lines = _data_lines(stream)
    try:
        n, root = (int(x) for x in next(lines).split())
    except (StopIteration, ValueError) as exc:
        raise ValidationError("malformed parent-array header") from exc
    check_int(n, "n", minimum=1)
    parent = np.full(n, -2, dtype=np.int64)
    for line in lines:
        label, p = (int(x) for x in line.split())
        if not (1 <= label <= n and 1 <= p <= n):
            raise ValidationError(f"label out of range in row {line!r}")
        parent[label - 1] = -1 if label == p else p - 1
    if (parent == -2).any():
        raise ValidationError("parent array is missing rows")
    if parent[root - 1] != -1:
        raise ValidationError("declared root does not repeat its own label")
    return LabelledRootedTree(parent)


def write_edge_list(t: LabelledRootedTree, stream: TextIO | None = None) -> str:
    rows = sorted(t.edge_set())
    text = "".join(f"{u} {v}\n" for u, v in rows)
    if stream is not None:
        stream.write(text)
    return text


def read_edge_list(stream: TextIO, n: int | None = None, root_label: int = 1) -> LabelledRootedTree:
    edges = []
    for line in _data_lines(stream):
        u, v = (int(x) for x in line.split())
        edges.append((u, v))
    if n is None:
        n = max((max(e) for e in edges), default=1)
    if len(edges) != n - 1:
        raise ValidationError(f"a tree on {n} vertices needs {n - 1} edges, got {len(edges)}")
    return LabelledRootedTree.from_edges(n, root_label, edges)
