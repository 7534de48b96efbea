"""Metric graphs made of line segments with exact point-to-point distances."""

from __future__ import annotations

import io
from typing import NamedTuple, TextIO

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from ._validation import ValidationError, check_random_state

__all__ = ["PointRef", "SegmentGraph", "SegmentGraphBuilder", "segment_distance", "sample_point", "distance_matrix_csv"]


class PointRef(NamedTuple):
    """A point at distance ``offset`` from the first endpoint of ``segment``."""

    segment: int
    offset: float


class SegmentGraphBuilder:
    """Mutable builder; call :meth:`freeze` to obtain a :class:`SegmentGraph`."""

    def __init__(self):
        self.kind: list[str] = []
        self.seg_u: list[int] = []
        self.seg_v: list[int] = []
        self.seg_len: list[float] = []
        self.labels: dict = {}
        self._alias: list[int] = []

    def add_node(self, kind: str = "branch", label=None) -> int:
        self.kind.append(kind)
        self._alias.append(len(self._alias))
        if label is not None:
            self.labels[label] = len(self.kind) - 1
        return len(self.kind) - 1

    def find(self, node: int) -> int:
        while self._alias[node] != node:
            self._alias[node] = self._alias[self._alias[node]]
            node = self._alias[node]
        return node

    def add_segment(self, u: int, v: int, length: float) -> int:
        if not length > 0:
            raise ValidationError("segment lengths must be positive")
        self.seg_u.append(self.find(u))
        self.seg_v.append(self.find(v))
        self.seg_len.append(float(length))
        return len(self.seg_len) - 1

    def split(self, segment: int, offset: float, kind: str = "branch") -> int:
        """Insert a node at ``offset`` along ``segment``; returns the node id.

        Offsets at an endpoint return that endpoint instead of creating a
        zero-length segment.
        """
        L = self.seg_len[segment]
        if offset <= 0.0:
            return self.find(self.seg_u[segment])
        if offset >= L:
            return self.find(self.seg_v[segment])
        w = self.add_node(kind)
        v = self.seg_v[segment]
        self.seg_v[segment] = w
        self.seg_len[segment] = offset
        self.seg_u.append(w)
        self.seg_v.append(v)
        self.seg_len.append(L - offset)
        return w

    def merge(self, a: int, b: int) -> int:
        """Identify nodes ``a`` and ``b`` (a zero-length connection)."""
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._alias[rb] = ra
            if self.kind[ra] != "glue":
                self.kind[ra] = "glue"
        return ra

    def total_length(self) -> float:
        return float(sum(self.seg_len))

    def locate(self, rng: np.random.Generator) -> PointRef:
        """Point drawn from the normalised length measure."""
        lengths = np.asarray(self.seg_len)
        u = rng.random() * lengths.sum()
        cum = np.cumsum(lengths)
        seg = min(int(np.searchsorted(cum, u, side="right")), len(cum) - 1)
        start = cum[seg] - lengths[seg]
        return PointRef(seg, min(max(u - start, 0.0), lengths[seg]))

    def node_map(self) -> np.ndarray:
        """Index of every builder node in the frozen graph."""
        roots = sorted({self.find(i) for i in range(len(self.kind))})
        remap = {r: k for k, r in enumerate(roots)}
        return np.array([remap[self.find(i)] for i in range(len(self.kind))], dtype=np.int64)

    def freeze(self) -> "SegmentGraph":
        roots = sorted({self.find(i) for i in range(len(self.kind))})
        remap = {r: k for k, r in enumerate(roots)}
        su = np.array([remap[self.find(u)] for u in self.seg_u], dtype=np.int64)
        sv = np.array([remap[self.find(v)] for v in self.seg_v], dtype=np.int64)
        kinds = tuple(self.kind[r] for r in roots)
        labels = {lab: remap[self.find(node)] for lab, node in self.labels.items()}
        return SegmentGraph(su, sv, np.array(self.seg_len, dtype=float), kinds, labels)


class SegmentGraph:
    """Immutable connected metric graph of positive-length segments.

    Loops and parallel segments are allowed. Distances are shortest-path
    lengths through the segments, including partial segments at both ends.
    """

    def __init__(self, seg_u, seg_v, seg_len, kinds, labels=None):
        self.seg_u = np.asarray(seg_u, dtype=np.int64)
        self.seg_v = np.asarray(seg_v, dtype=np.int64)
        self.seg_len = np.asarray(seg_len, dtype=float)
        self.kinds = tuple(kinds)
        self.labels = dict(labels or {})
        if (self.seg_len <= 0).any():
            raise ValidationError("segment lengths must be positive")
        for a in (self.seg_u, self.seg_v, self.seg_len):
            a.flags.writeable = False
        self._adj = None

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)

    @property
    def n_segments(self) -> int:
        return self.seg_len.size

    def total_length(self) -> float:
        return float(self.seg_len.sum())

    def adjacency(self):
        """Sparse node adjacency keeping the shortest of any parallel segments."""
        if self._adj is None:
            keep = self.seg_u != self.seg_v
            u, v, w = self.seg_u[keep], self.seg_v[keep], self.seg_len[keep]
            a, b = np.minimum(u, v), np.maximum(u, v)
            order = np.lexsort((w, b, a))
            a, b, w = a[order], b[order], w[order]
            first = np.ones(a.size, dtype=bool)
            first[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
            a, b, w = a[first], b[first], w[first]
            n = self.n_nodes
            self._adj = coo_matrix(
                (np.concatenate([w, w]), (np.concatenate([a, b]), np.concatenate([b, a]))), shape=(n, n)
            ).tocsr()
        return self._adj

    def node_distances(self, sources) -> np.ndarray:
        return dijkstra(self.adjacency(), directed=False, indices=np.asarray(sources, dtype=np.int64))

    def components(self) -> int:
        if self.n_nodes == 0:
            return 0
        return int(connected_components(self.adjacency(), directed=False)[0])

    def betti_number(self) -> int:
        """First Betti number: segments minus nodes plus components."""
        return self.n_segments - self.n_nodes + self.components()

    def node_point(self, node: int) -> PointRef:
        hits = np.flatnonzero(self.seg_u == node)
        if hits.size:
            return PointRef(int(hits[0]), 0.0)
        hits = np.flatnonzero(self.seg_v == node)
        if hits.size:
            return PointRef(int(hits[0]), float(self.seg_len[hits[0]]))
        raise ValidationError(f"node {node} is isolated")

    def distance_matrix(self, points) -> np.ndarray:
        """Pairwise distances between a list of :class:`PointRef`."""
        pts = [PointRef(int(s), float(o)) for s, o in points]
        for s, o in pts:
            if not (0 <= s < self.n_segments) or not (0.0 <= o <= self.seg_len[s]):
                raise ValidationError(f"invalid point reference {(s, o)}")
        ends = np.array([[self.seg_u[s], self.seg_v[s]] for s, _ in pts], dtype=np.int64).reshape(-1, 2)
        k = len(pts)
        if k == 0:
            return np.zeros((0, 0))
        nodes, inv = np.unique(ends.ravel(), return_inverse=True)
        Dn = self.node_distances(nodes)[:, nodes]
        inv = inv.reshape(-1, 2)
        off = np.array([[o, self.seg_len[s] - o] for s, o in pts])
        # distance from point i to each of its two endpoints, combined pairwise
        best = np.full((k, k), np.inf)
        for ea in (0, 1):
            for eb in (0, 1):
                cand = off[:, ea][:, None] + Dn[np.ix_(inv[:, ea], inv[:, eb])] + off[:, eb][None, :]
                np.minimum(best, cand, out=best)
        segs = np.array([s for s, _ in pts])
        offs = np.array([o for _, o in pts])
        same = segs[:, None] == segs[None, :]
        direct = np.abs(offs[:, None] - offs[None, :])
        best = np.where(same, np.minimum(best, direct), best)
        np.fill_diagonal(best, 0.0)
        return best

    def to_text(self, stream: TextIO | None = None) -> str:
        """Weighted edge list ``u v length`` plus node kinds and labels."""
        buf = io.StringIO()
        buf.write(f"# nodes {self.n_nodes} segments {self.n_segments}\n")
        for i, k in enumerate(self.kinds):
            buf.write(f"node {i} {k}\n")
        for lab, node in sorted(self.labels.items(), key=lambda kv: str(kv[0])):
            buf.write(f"label {lab} {node}\n")
        for u, v, w in zip(self.seg_u.tolist(), self.seg_v.tolist(), self.seg_len.tolist()):
            buf.write(f"{u} {v} {w!r}\n")
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    @classmethod
    def from_text(cls, stream: TextIO) -> "SegmentGraph":
        kinds: dict[int, str] = {}
        labels = {}
        su, sv, sl = [], [], []
        for line in stream:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "node":
                kinds[int(parts[1])] = parts[2]
            elif parts[0] == "label":
                lab = parts[1]
                labels[int(lab) if lab.lstrip("-").isdigit() else lab] = int(parts[2])
            else:
                su.append(int(parts[0]))
                sv.append(int(parts[1]))
                sl.append(float(parts[2]))
        return cls(su, sv, sl, tuple(kinds[i] for i in range(len(kinds))), labels)


def segment_distance(g: SegmentGraph, a: PointRef, b: PointRef) -> float:
    return float(g.distance_matrix([a, b])[0, 1])


def sample_point(g: SegmentGraph, rng=None) -> PointRef:
    """Point drawn from the normalised length measure of ``g``."""
    rng = check_random_state(rng)
    u = rng.random() * g.total_length()
    cum = np.cumsum(g.seg_len)
    seg = min(int(np.searchsorted(cum, u, side="right")), g.n_segments - 1)
    start = cum[seg] - g.seg_len[seg]
    return PointRef(seg, float(min(max(u - start, 0.0), g.seg_len[seg])))


def distance_matrix_csv(g: SegmentGraph, points, stream: TextIO | None = None) -> str:
    """CSV with columns ``point,segment,offset,d_0,...,d_{k-1}``."""
    pts = [PointRef(int(s), float(o)) for s, o in points]
    D = g.distance_matrix(pts)
    buf = io.StringIO()
    buf.write(",".join(["point", "segment", "offset"] + [f"d_{j}" for j in range(len(pts))]) + "\n")
    for i, (s, o) in enumerate(pts):
        buf.write(",".join([str(i), str(s), repr(o)] + [repr(float(x)) for x in D[i]]) + "\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
