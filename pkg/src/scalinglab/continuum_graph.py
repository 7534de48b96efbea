"""Finite approximations of continuum random graphs with fixed surplus.

Two constructions are provided: a weighted cubic kernel whose edges become
segments, grown further by line-breaking; and a tree coded by an area-tilted
excursion in which ``s`` points are glued to ancestors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import ValidationError, check_int, check_random_state, spawn
from .graph_core import MultiGraph, kernel_law
from .linebreak import poisson_rate_t_arrivals
from .path_codes import RealExcursion, rescale_excursion
from .samplers import srw_excursions
from .segments import PointRef, SegmentGraph, SegmentGraphBuilder, distance_matrix_csv, sample_point, segment_distance

__all__ = [
    "SegmentGraph",
    "PointRef",
    "segment_distance",
    "sample_point",
    "distance_matrix_csv",
    "rescale_excursion",
    "ContinuumGraphSample",
    "continuum_graph_construct",
    "TiltedExcursionSample",
    "tilted_excursions",
    "tilted_excursion",
    "GluedGraph",
    "glue_surplus_points",
]


@lru_cache(maxsize=8)
def _kernel_table(s: int):
    law = kernel_law(s)
    return [K for K, _ in law], np.array([float(p) for _, p in law])


@dataclass(frozen=True)
class ContinuumGraphSample:
    """Segment graph with the kernel it was grown from.

    ``core_lengths`` lists the kernel-edge segment lengths in kernel-edge
    order; their sum is ``core_length``.
    """

    graph: SegmentGraph
    kernel: MultiGraph
    core_length: float
    core_lengths: np.ndarray
    arrivals: np.ndarray


def continuum_graph_construct(s: int, k: int = 0, rng=None) -> ContinuumGraphSample:
    """Kernel drawn from the limiting cubic-kernel law, edges scaled by
    ``X * Dirichlet(1, ..., 1)`` with ``X^2 ~ Gamma((3s-2)/2, rate 1/2)``,
    then ``k`` segments attached by line-breaking started at ``X``."""
    check_int(s, "s", minimum=2)
    check_int(k, "k", minimum=0)
    rng = check_random_state(rng)
    kernels, probs = _kernel_table(s)
    K = kernels[int(rng.choice(len(kernels), p=probs))]
    X = math.sqrt(rng.gamma((3 * s - 2) / 2, 2.0))
    Y = rng.dirichlet(np.ones(3 * s - 3))
    b = SegmentGraphBuilder()
    node = {v: b.add_node("kernel") for v in sorted(K.vertices)}
    lengths = []
    i = 0
    for (u, v), m in K.edges.items():
        for _ in range(m):
            b.add_segment(node[u], node[v], X * Y[i])
            lengths.append(X * Y[i])
            i += 1
    arrivals = np.empty(0)
    if k:
        sched = poisson_rate_t_arrivals(k, X, rng)
        arrivals = sched.s
        for j, length in enumerate(sched.increments()):
            seg, off = b.locate(rng)
            w = b.split(seg, off)
            leaf = b.add_node("leaf", label=j + 1)
            b.add_segment(w, leaf, length)
    return ContinuumGraphSample(b.freeze(), K, X, np.array(lengths), arrivals)


@dataclass(frozen=True)
class TiltedExcursionSample:
    """Unit-length excursion tilted by the ``s``-th power of its area.

    ``dyck`` is the lattice path it was obtained from; ``excursion`` is that
    path with time scaled by ``1/len`` and space by ``1/sqrt(len)``.
    """

    excursion: RealExcursion
    dyck: np.ndarray
    s: int
    diagnostics: dict = field(default_factory=dict)


def _dyck_to_excursion(path: np.ndarray, s: int) -> RealExcursion:
    L = path.size - 1
    return RealExcursion(np.arange(L + 1) / L, path / math.sqrt(L), {"s": s})


def tilted_excursions(s: int, m: int, count: int, rng=None, pool_factor: int = 64, chunk: int = 1024):
    """``count`` approximate tilted excursions from Dyck paths with ``m`` up-steps.

    A pool of ``pool_factor * count`` uniform Dyck paths is resampled with
    weights ``area^s``. Diagnostics report the pool's effective size.
    """
    check_int(s, "s", minimum=0)
    check_int(m, "m", minimum=1)
    check_int(count, "count", minimum=1)
    rng = check_random_state(rng)
    if s == 0:
        paths = srw_excursions(m, count, rng)
        diag = {"pool_size": count, "effective_sample_size": float(count)}
        return [TiltedExcursionSample(_dyck_to_excursion(p, 0), p, 0, diag) for p in paths]
    pool = pool_factor * count
    n_chunks = -(-pool // chunk)
    subs = spawn(rng, n_chunks)
    states = [g.bit_generator.state for g in subs]
    areas = np.concatenate(
        [srw_excursions(m, min(chunk, pool - c * chunk), g).sum(axis=1) for c, g in enumerate(subs)]
    ).astype(float)
    w = (areas / areas.max()) ** s
    ess = float(w.sum() ** 2 / (w @ w))
    idx = np.sort(rng.choice(pool, size=count, p=w / w.sum()))
    picked = {}
    for c in np.unique(idx // chunk):
        g = np.random.Generator(type(rng.bit_generator)())
        g.bit_generator.state = states[c]
        paths = srw_excursions(m, min(chunk, pool - c * chunk), g)
        for i in idx[(idx // chunk) == c]:
            picked[int(i)] = paths[i - c * chunk].copy()
    scale = (2 * m) ** 1.5
    diag = {
        "pool_size": pool,
        "effective_sample_size": ess,
        "pool_mean_area": float(areas.mean() / scale),
        "weighted_mean_area": float((w @ areas) / w.sum() / scale),
        "distinct_draws": len(set(idx.tolist())),
    }
    order = rng.permutation(count)
    return [TiltedExcursionSample(_dyck_to_excursion(picked[int(idx[k])], s), picked[int(idx[k])], s, diag) for k in order]


def tilted_excursion(s: int, gridsize: int = 20_000, rng=None, pool_factor: int = 64) -> TiltedExcursionSample:
    """One tilted excursion on a grid of ``gridsize + 1`` points (rounded to even)."""
    m = max(1, gridsize // 2)
    return tilted_excursions(s, m, 1, rng, pool_factor=pool_factor)[0]


@dataclass(frozen=True)
class GluedGraph:
    """Tree coded by ``2e`` with ``s`` identifications.

    ``vertex_at`` maps each contour step to the frozen-graph node it visits;
    ``resolution`` is the length of one tree edge (the grid error of the
    identifications).
    """

    graph: SegmentGraph
    vertex_at: np.ndarray
    resolution: float
    identifications: tuple

    def sample_nodes(self, k: int, rng=None) -> np.ndarray:
        """Nodes at ``k`` uniform contour times (the mass measure)."""
        rng = check_random_state(rng)
        L = self.vertex_at.size - 1
        j = np.rint(rng.uniform(0, L, size=k)).astype(np.int64)
        return self.vertex_at[j]

    def distance_matrix(self, k: int, rng=None) -> np.ndarray:
        nodes = self.sample_nodes(k, rng)
        return self.graph.node_distances(nodes)[:, nodes]


def _contour_tree(path: np.ndarray):
    """Parent array and per-step vertex of the tree with contour ``path``."""
    L = path.size - 1
    parent = [-1]
    at = np.empty(L + 1, dtype=np.int64)
    cur = 0
    at[0] = 0
    up = np.diff(path) > 0
    for i in range(L):
        if up[i]:
            parent.append(cur)
            cur = len(parent) - 1
        else:
            cur = parent[cur]
        at[i + 1] = cur
    return np.asarray(parent, dtype=np.int64), at


def glue_surplus_points(e: TiltedExcursionSample, s: int, rng=None, max_tries: int = 10_000) -> GluedGraph:
    """Identify ``s`` uniform points under ``2e`` with their ancestors.

    A point ``(x, y)`` under the graph of ``2e`` glues the tree vertex visited
    at time ``x`` to its ancestor at height ``y``, rounded down to the grid.
    Repeated identifications of one pair are redrawn.
    """
    check_int(s, "s", minimum=0)
    rng = check_random_state(rng)
    path = np.asarray(e.dyck, dtype=np.int64)
    L = path.size - 1
    h = 2.0 / math.sqrt(L)
    parent, at = _contour_tree(path)
    b = SegmentGraphBuilder()
    for _ in range(parent.size):
        b.add_node("tree")
    for v in range(1, parent.size):
        b.add_segment(int(parent[v]), v, h)
    depth = np.zeros(parent.size, dtype=np.int64)
    depth[at] = path
    weights = path.astype(float)
    if s and weights.sum() == 0:
        raise ValidationError("cannot place points under a zero excursion")
    glued = []
    tries = 0
    while len(glued) < s:
        tries += 1
        if tries > max_tries:
            raise ValidationError("failed to place distinct identifications")
        j = int(rng.choice(L + 1, p=weights / weights.sum()))
        v = int(at[j])
        k = int(rng.integers(0, depth[v]))
        a = v
        for _ in range(depth[v] - k):
            a = int(parent[a])
        if b.find(a) == b.find(v):
            continue
        b.merge(a, v)
        glued.append((a, v))
    nmap = b.node_map()
    return GluedGraph(b.freeze(), nmap[at], h, tuple(glued))
