"""Random generators for trees and graphs.

Everything takes an explicit ``rng`` (anything accepted by
:func:`numpy.random.default_rng`). Compiled loops that need a stream of
uniforms are seeded from that generator, so results are reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.special import gammaln

from ._validation import ValidationError, check_int, check_random_state, spawn
from .graph_core import ConnectedGraph, MarkedDfq, marked_dfq_to_graph
from .linebreak import decode, uniform_labelled_tree
from .path_codes import DiscreteExcursion, dfq_of, tree_from_dfq
from .tree_core import LabelledRootedTree, RootedOrderedTree

__all__ = [
    "OffspringSpec",
    "PRESETS",
    "bienayme_conditioned",
    "cycle_lemma_rotation",
    "srw_excursion",
    "srw_excursions",
    "uniform_labelled_tree",
    "AreaBiasDiagnostics",
    "area_biased_trees",
    "area_biased_tree",
    "uniform_graphs_fixed_surplus",
    "uniform_graph_fixed_surplus",
    "ErParams",
    "ComponentList",
    "er_graph",
    "er_explore_markov",
    "ReflectedPath",
    "reflected_limit_process",
    "largest_excursions",
    "DegreeModelParams",
    "degree_model_graph",
]


def _seed_from(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


@numba.njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


# ---------------------------------------------------------------------------
# Offspring laws and conditioned trees


@dataclass(frozen=True)
class OffspringSpec:
    """Offspring law ``p_k``; ``pmf`` is truncated where the tail is negligible."""

    name: str
    pmf: np.ndarray
    mean: float
    variance: float

    @property
    def critical(self) -> bool:
        return abs(self.mean - 1.0) < 1e-12

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.pmf > 0)

    @classmethod
    def from_pmf(cls, name: str, pmf) -> "OffspringSpec":
        pmf = np.asarray(pmf, dtype=float)
        if (pmf < 0).any() or abs(pmf.sum() - 1.0) > 1e-9:
            raise ValidationError("offspring pmf must be nonnegative and sum to 1")
        k = np.arange(pmf.size)
        mean = float(k @ pmf)
        return cls(name, pmf, mean, float((k - mean) ** 2 @ pmf))


def _geometric_pmf(kmax: int = 80) -> np.ndarray:
    p = 0.5 ** (np.arange(kmax) + 1.0)
    p[-1] += 1.0 - p.sum()
    return p


def _poisson_pmf(kmax: int = 40) -> np.ndarray:
    k = np.arange(kmax)
    p = np.exp(-1.0 - gammaln(k + 1))
    p[-1] += 1.0 - p.sum()
    return p


PRESETS = {
    "geometric": OffspringSpec("geometric", _geometric_pmf(), 1.0, 2.0),
    "binary": OffspringSpec("binary", np.array([0.5, 0.0, 0.5]), 1.0, 1.0),
    "poisson1": OffspringSpec("poisson1", _poisson_pmf(), 1.0, 1.0),
}


def _get_spec(spec) -> OffspringSpec:
    if isinstance(spec, OffspringSpec):
        return spec
    try:
        return PRESETS[spec]
    except KeyError:
        raise ValidationError(f"unknown offspring preset {spec!r}; choose from {sorted(PRESETS)}") from None


def _check_admissible(spec: OffspringSpec, n: int) -> None:
    sup = spec.support
    lo, hi = n * int(sup.min()), n * int(sup.max())
    step = reduce(math.gcd, (int(x - sup.min()) for x in sup), 0)
    target = n - 1
    ok = lo <= target and (target <= hi or spec.pmf.size > 30)
    if step:
        ok = ok and (target - lo) % step == 0
    else:
        ok = ok and target == lo
    if not ok:
        raise ValidationError(f"no tree of size {n} has positive probability under the {spec.name} law")


def cycle_lemma_rotation(c) -> np.ndarray:
    """Rotate child counts summing to ``n-1`` so that ``1 + cumsum(c - 1)``
    first hits 0 at the last step."""
    c = np.asarray(c, dtype=np.int64)
    s = np.cumsum(c - 1)
    m = int(np.argmin(s))  # first index of the minimum
    return np.roll(c, -(m + 1))


def _conditioned_counts(spec: OffspringSpec, n: int, rng: np.random.Generator, max_tries: int) -> np.ndarray:
    """``n`` i.i.d. offspring counts conditioned to sum to ``n - 1``."""
    if spec.name == "poisson1":
        return rng.multinomial(n - 1, np.full(n, 1.0 / n))
    if spec.name == "geometric":
        # uniform weak composition of n-1 into n parts (stars and bars)
        bars = np.sort(rng.choice(2 * n - 2, size=n - 1, replace=False))
        edges = np.concatenate([[-1], bars, [2 * n - 2]])
        return np.diff(edges) - 1
    if spec.name == "binary":
        c = np.zeros(n, dtype=np.int64)
        c[rng.choice(n, size=(n - 1) // 2, replace=False)] = 2
        return c
    k = np.arange(spec.pmf.size)
    for _ in range(max_tries):
        c = rng.choice(k, size=n, p=spec.pmf)
        if int(c.sum()) == n - 1:
            return c
    raise ValidationError(f"no conditioned sample of size {n} after {max_tries} tries")


def bienayme_conditioned(spec, n: int, rng=None, max_tries: int = 100_000) -> RootedOrderedTree:
    """Bienaymé tree conditioned to have ``n`` vertices.

    Draws offspring counts conditioned on their sum and rotates them with
    the cycle lemma into the unique DFQ excursion.
    """
    spec = _get_spec(spec)
    check_int(n, "n", minimum=1)
    rng = check_random_state(rng)
    _check_admissible(spec, n)
    c = cycle_lemma_rotation(_conditioned_counts(spec, n, rng, max_tries))
    q = np.concatenate([[1], 1 + np.cumsum(c - 1)])
    return tree_from_dfq(DiscreteExcursion(q, "dfq"))


def srw_excursions(m: int, count: int, rng=None) -> np.ndarray:
    """``count`` uniform Dyck paths with ``m`` up-steps, one per row."""
    check_int(m, "m", minimum=0)
    rng = check_random_state(rng)
    steps = np.concatenate([np.ones(m, dtype=np.int8), -np.ones(m + 1, dtype=np.int8)])
    steps = rng.permuted(np.broadcast_to(steps, (count, 2 * m + 1)), axis=1)
    walk = np.cumsum(steps, axis=1, dtype=np.int32)
    first_min = np.argmin(walk, axis=1)
    shift = (first_min + 1)[:, None]
    idx = (np.arange(2 * m + 1)[None, :] + shift) % (2 * m + 1)
    rotated = np.take_along_axis(steps, idx, axis=1)[:, :-1]
    out = np.zeros((count, 2 * m + 1), dtype=np.int32)
    np.cumsum(rotated, axis=1, out=out[:, 1:])
    return out


def srw_excursion(m: int, rng=None) -> DiscreteExcursion:
    """Uniform Dyck path of length ``2m`` via cycle-lemma rotation of a
    ``+-1`` sequence with one extra down-step."""
    return DiscreteExcursion(srw_excursions(m, 1, rng)[0], "contour")


# ---------------------------------------------------------------------------
# Area-biased trees and uniform connected graphs with fixed surplus


@numba.njit(cache=True)
def _dfq_from_parent(parent, root):
    """DFQ path of a labelled tree whose children are ordered by index."""
    n = parent.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        if parent[v] >= 0:
            counts[parent[v] + 1] += 1
    offsets = np.cumsum(counts)
    fill = offsets[:-1].copy()
    kids = np.empty(max(n - 1, 1), dtype=np.int64)
    for v in range(n):
        p = parent[v]
        if p >= 0:
            kids[fill[p]] = v
            fill[p] += 1
    q = np.empty(n + 1, dtype=np.int64)
    q[0] = 1
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[0] = root
    i = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        c = offsets[v + 1] - offsets[v]
        q[i + 1] = q[i] + c - 1
        i += 1
        for j in range(offsets[v + 1] - 1, offsets[v] - 1, -1):
            top += 1
            stack[top] = kids[j]
    return q


@numba.njit(cache=True)
def _areas_of_words(words):
    from_word = np.empty(words.shape[0], dtype=np.int64)
    n = words.shape[1] + 1
    for r in range(words.shape[0]):
        parent, _ = _decode_rows(words[r], n)
        q = _dfq_from_parent(parent, words[r, 0] if n > 1 else 0)
        a = 0
        for i in range(1, n):
            a += q[i] - 1
        from_word[r] = a
    return from_word


@numba.njit(cache=True)
def _decode_rows(word, n):
    # same rule as the line-breaking decoder, duplicated to stay inside a
    # compiled loop
    parent = np.full(n, -1, dtype=np.int64)
    if n == 1:
        return parent, 0
    in_s = np.zeros(n, dtype=np.bool_)
    root = word[0]
    in_s[root] = True
    y = 0
    while in_s[y]:
        y += 1
    prev = root
    for k in range(1, n - 1):
        v = word[k]
        if in_s[v] or v == y:
            parent[y] = prev
            in_s[y] = True
            while y < n and in_s[y]:
                y += 1
            prev = v
        else:
            parent[v] = prev
            in_s[v] = True
            prev = v
    parent[y] = prev
    return parent, root


def _rooted_at_one_words(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform coding words with first symbol 1 (0-based): uniform trees
    on ``[n]`` rooted at label 1."""
    w = rng.integers(0, n, size=(count, max(n - 1, 0)), dtype=np.int64)
    if n > 1:
        w[:, 0] = 0
    return w


def _log_binom_weights(a: np.ndarray, s: int) -> np.ndarray:
    a = a.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = gammaln(a + 1) - gammaln(a - s + 1) - gammaln(s + 1)
    return np.where(a >= s, lw, -np.inf)


@dataclass(frozen=True)
class AreaBiasDiagnostics:
    method: str
    pool_size: int
    draws: int
    effective_sample_size: float
    max_weight_share: float
    distinct_draws: int

    @property
    def exhausted(self) -> bool:
        """True if the pool carries less information than the number of draws."""
        return self.method == "resample" and self.effective_sample_size < self.draws


def _all_rooted_at_one_words(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((n,) * (n - 2)).reshape(n - 2, -1).T if n > 2 else np.zeros((1, 0), dtype=np.int64)
    return np.hstack([np.zeros((grids.shape[0], 1), dtype=np.int64), grids.astype(np.int64)])


def area_biased_trees(
    n: int,
    s: int,
    draws: int,
    rng=None,
    pool_factor: int = 64,
    method: str = "auto",
    chunk: int = 2048,
):
    """Trees on ``[n]`` rooted at label 1 with law proportional to ``C(a(T), s)``.

    ``method="exact"`` enumerates all ``n^(n-2)`` trees (``n <= 8``);
    ``"resample"`` draws a pool of ``pool_factor * draws`` uniform trees and
    resamples with weights ``C(a, s)``. Returns ``(trees, diagnostics)``.
    """
    check_int(n, "n", minimum=1)
    check_int(s, "s", minimum=0)
    check_int(draws, "draws", minimum=1)
    rng = check_random_state(rng)
    if method == "auto":
        method = "exact" if n <= 8 else "resample"
    if method == "exact":
        if n > 8:
            raise ValidationError("exact enumeration is limited to n <= 8")
        words = _all_rooted_at_one_words(n)
        areas = _areas_of_words(words)
        lw = _log_binom_weights(areas, s)
        if not np.isfinite(lw).any():
            raise ValidationError(f"no tree on {n} vertices has area >= {s}")
        w = np.exp(lw - lw[np.isfinite(lw)].max())
        idx = rng.choice(words.shape[0], size=draws, p=w / w.sum())
        trees = [LabelledRootedTree(_decode_rows(words[i], n)[0]) for i in idx]
        diag = AreaBiasDiagnostics("exact", words.shape[0], draws, float("inf"), float(w.max() / w.sum()), len(set(idx.tolist())))
        return trees, diag
    if method != "resample":
        raise ValidationError(f"unknown method {method!r}")
    pool = pool_factor * draws
    # keep each chunk of coding words near 16M entries
    chunk = max(1, min(chunk, (1 << 24) // max(n, 1)))
    n_chunks = -(-pool // chunk)
    chunk_rngs = spawn(rng, n_chunks)
    states = [g.bit_generator.state for g in chunk_rngs]
    areas = np.concatenate(
        [_areas_of_words(_rooted_at_one_words(n, min(chunk, pool - c * chunk), g)) for c, g in enumerate(chunk_rngs)]
    )
    lw = _log_binom_weights(areas, s)
    if not np.isfinite(lw).any():
        raise ValidationError(f"no pooled tree has area >= {s}; increase n or the pool")
    w = np.exp(lw - lw[np.isfinite(lw)].max())
    ess = float(w.sum() ** 2 / (w @ w))
    idx = np.sort(rng.choice(pool, size=draws, p=w / w.sum()))
    trees_by_idx = {}
    for c in np.unique(idx // chunk):
        g = np.random.Generator(type(rng.bit_generator)())
        g.bit_generator.state = states[c]
        words = _rooted_at_one_words(n, min(chunk, pool - c * chunk), g)
        for i in idx[(idx // chunk) == c]:
            trees_by_idx[int(i)] = words[i - c * chunk].copy()
    order = rng.permutation(draws)
    trees = [LabelledRootedTree(_decode_rows(trees_by_idx[int(idx[k])], n)[0]) for k in order]
    diag = AreaBiasDiagnostics("resample", pool, draws, ess, float(w.max() / w.sum()), len(set(idx.tolist())))
    if diag.exhausted:
        warnings.warn(f"area-biased pool is thin: effective size {ess:.0f} < {draws} draws", RuntimeWarning)
    return trees, diag


def area_biased_tree(n: int, s: int, rng=None, **kwargs) -> LabelledRootedTree:
    trees, _ = area_biased_trees(n, s, 1, rng, **kwargs)
    return trees[0]


def _graph_from_tree_and_marks(t: LabelledRootedTree, s: int, rng: np.random.Generator) -> ConnectedGraph:
    q = dfq_of(t)
    slots = np.maximum(q.q - 1, 0)
    cum = np.cumsum(slots)
    a = int(cum[-1])
    if a < s:
        raise ValidationError(f"tree area {a} is smaller than the surplus {s}")
    picks = rng.choice(a, size=s, replace=False)
    i = np.searchsorted(cum, picks, side="right")
    j = picks - (cum[i] - slots[i]) + 1
    labels = tuple((t.dfs_order() + 1).tolist())
    return marked_dfq_to_graph(MarkedDfq(q, labels, frozenset(zip(i.tolist(), j.tolist()))))


def uniform_graphs_fixed_surplus(n: int, s: int, draws: int, rng=None, **kwargs):
    """``draws`` uniform connected graphs on ``[n]`` with surplus ``s``.

    An area-biased depth-first tree is decorated with ``s`` distinct marks
    chosen uniformly among its legal slots. Returns ``(graphs, diagnostics)``.
    """
    rng = check_random_state(rng)
    trees, diag = area_biased_trees(n, s, draws, rng, **kwargs)
    return [_graph_from_tree_and_marks(t, s, rng) for t in trees], diag


def uniform_graph_fixed_surplus(n: int, s: int, rng=None, **kwargs) -> ConnectedGraph:
    graphs, _ = uniform_graphs_fixed_surplus(n, s, 1, rng, **kwargs)
    return graphs[0]


# ---------------------------------------------------------------------------
# Critical random graphs


@dataclass(frozen=True)
class ErParams:
    """Edge probability ``p = 1/n + lambda n^{-4/3}`` (or an explicit ``p``)."""

    n: int
    lam: float = 0.0
    p_override: float | None = None

    def __post_init__(self):
        check_int(self.n, "n", minimum=1)
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"edge probability {self.p} outside [0, 1]")

    @property
    def p(self) -> float:
        if self.p_override is not None:
            return float(self.p_override)
        return 1.0 / self.n + self.lam * self.n ** (-4.0 / 3.0)


@dataclass(frozen=True)
class ComponentList:
    """Connected components of a graph on ``n`` vertices (labels 0-based).

    ``sizes`` and ``surpluses`` are ordered by decreasing size, ties broken by
    decreasing surplus.
    """

    n: int
    sizes: np.ndarray
    surpluses: np.ndarray
    edges: np.ndarray | None = None
    component_of: np.ndarray | None = None
    order: np.ndarray | None = field(default=None, repr=False)

    def key(self) -> tuple:
        return tuple(zip(self.sizes.tolist(), self.surpluses.tolist()))

    def largest_vertices(self) -> np.ndarray:
        if self.component_of is None:
            raise ValidationError("component membership was not recorded")
        return np.flatnonzero(self.component_of == self.order[0])

    def largest_distances(self, k: int, rng=None) -> np.ndarray:
        """Graph distances between ``k`` uniform vertices of the largest component."""
        rng = check_random_state(rng)
        verts = self.largest_vertices()
        pick = rng.choice(verts, size=k, replace=True)
        e = self.edges
        A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(self.n, self.n)).tocsr()
        D = shortest_path(A, directed=False, unweighted=True, indices=pick)
        return D[:, pick]


def _components(n: int, edges: np.ndarray) -> ComponentList:
    if edges.size:
        A = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    else:
        A = coo_matrix((n, n))
    ncomp, lab = connected_components(A, directed=False)
    sizes = np.bincount(lab, minlength=ncomp)
    ecount = np.bincount(lab[edges[:, 0]], minlength=ncomp) if edges.size else np.zeros(ncomp, dtype=np.int64)
    surp = ecount - sizes + 1
    order = np.lexsort((-surp, -sizes))
    return ComponentList(n, sizes[order], surp[order], edges, lab, order)


@numba.njit(cache=True)
def _er_edges(n, p, seed):
    np.random.seed(seed)
    cap = 16
    out = np.empty((cap, 2), dtype=np.int64)
    m = 0
    if p <= 0.0 or n < 2:
        return out[:0]
    if p >= 1.0:
        out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
        for v in range(1, n):
            for w in range(v):
                out[m, 0] = v
                out[m, 1] = w
                m += 1
        return out
    lq = math.log(1.0 - p)
    v = 1
    w = -1
    while v < n:
        r = np.random.random()
        w = w + 1 + int(math.floor(math.log(1.0 - r) / lq))
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            if m == cap:
                cap *= 2
                bigger = np.empty((cap, 2), dtype=np.int64)
                bigger[:m] = out[:m]
                out = bigger
            out[m, 0] = v
            out[m, 1] = w
            m += 1
    return out[:m]


def er_graph(params: ErParams, rng=None) -> ComponentList:
    """Erdős–Rényi graph ``G(n, p)`` by geometric skipping over vertex pairs."""
    rng = check_random_state(rng)
    edges = _er_edges(params.n, params.p, _seed_from(rng))
    return _components(params.n, edges)


@numba.njit(cache=True)
def _binomial_inversion(N, p):
    """Exact binomial draw by sequential search of the cdf."""
    if N <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return N
    flip = p > 0.5
    pp = 1.0 - p if flip else p
    u = np.random.random()
    ratio = pp / (1.0 - pp)
    prob = math.exp(N * math.log1p(-pp))
    k = 0
    cdf = prob
    while u > cdf and k < N:
        prob *= ratio * (N - k) / (k + 1)
        k += 1
        cdf += prob
    return N - k if flip else k


@numba.njit(cache=True)
def _explore_chain(n, p, seed):
    np.random.seed(seed)
    sizes = np.empty(n, dtype=np.int64)
    surp = np.empty(n, dtype=np.int64)
    ncomp = -1
    q = 0
    for i in range(n):
        if q == 0:
            # stack empty: a fresh vertex starts the next component
            ncomp += 1
            sizes[ncomp] = 0
            surp[ncomp] = 0
            q = 1
        surp[ncomp] += _binomial_inversion(q - 1, p)
        q += _binomial_inversion(n - i - q, p) - 1
        sizes[ncomp] += 1
    return sizes[: ncomp + 1], surp[: ncomp + 1]


def er_explore_markov(params: ErParams, rng=None) -> ComponentList:
    """Component sizes and surpluses from the depth-first queue chain.

    With ``i`` vertices explored and ``q`` on the stack, the explored vertex
    gets ``Bin(n - i - q, p)`` new children and ``Bin(q - 1, p)`` surplus
    edges to the rest of the stack.
    """
    rng = check_random_state(rng)
    sizes, surp = _explore_chain(params.n, params.p, _seed_from(rng))
    order = np.lexsort((-surp, -sizes))
    return ComponentList(params.n, sizes[order], surp[order])


@dataclass(frozen=True)
class ReflectedPath:
    """Discretised ``B^lam`` with its reflection ``R`` and Poisson marks.

    ``excursions`` holds rows ``(start_time, length, marks)`` sorted by
    decreasing length; excursions shorter than ``2 dt`` are dropped.
    """

    dt: float
    drift_path: np.ndarray
    R: np.ndarray
    mark_counts: np.ndarray
    excursions: np.ndarray

    @property
    def gammas(self) -> np.ndarray:
        return self.excursions[:, 1]

    @property
    def sigmas(self) -> np.ndarray:
        return self.excursions[:, 2].astype(np.int64)


def _excursions_of(R: np.ndarray, marks: np.ndarray, dt: float) -> np.ndarray:
    zero = np.flatnonzero(R <= 0.0)
    if zero.size == 0 or zero[-1] != R.size - 1:
        zero = np.append(zero, R.size - 1)
    gaps = np.diff(zero)
    keep = np.flatnonzero(gaps >= 2)
    cm = np.concatenate([[0], np.cumsum(marks)])
    rows = []
    for g in keep:
        a, b = zero[g], zero[g + 1]
        length = (b - a) * dt
        if length < 2 * dt:
            continue
        rows.append((a * dt, length, cm[b] - cm[a]))
    rows.sort(key=lambda r: -r[1])
    return np.array(rows, dtype=float).reshape(-1, 3)


def reflected_limit_process(
    lam: float,
    horizon: float,
    dt: float,
    rng=None,
    *,
    diffusivity: float = 1.0,
    curvature: float = 0.5,
    noise: bool = True,
) -> ReflectedPath:
    """``diffusivity * B_t + lam t - curvature t^2`` reflected at its running
    minimum, with marks of intensity ``R_t`` per unit time.

    The defaults give ``B_t + lam t - t^2/2``.
    """
    if not dt > 0 or not horizon > 0:
        raise ValidationError("dt and horizon must be positive")
    rng = check_random_state(rng)
    m = int(round(horizon / dt))
    t = np.arange(m + 1) * dt
    incr = rng.standard_normal(m) * math.sqrt(dt) if noise else np.zeros(m)
    B = np.concatenate([[0.0], np.cumsum(incr)])
    X = diffusivity * B + lam * t - curvature * t * t
    R = X - np.minimum.accumulate(X)
    marks = rng.poisson(R * dt)
    return ReflectedPath(dt, X, R, marks, _excursions_of(R, marks, dt))


def largest_excursions(
    lam: float,
    horizon: float,
    dt: float,
    draws: int,
    rng=None,
    *,
    diffusivity: float = 1.0,
    curvature: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Longest excursion length and its mark count, over ``draws`` paths."""
    rng = check_random_state(rng)
    g = np.empty(draws)
    s = np.empty(draws, dtype=np.int64)
    for k, sub in enumerate(spawn(rng, draws)):
        path = reflected_limit_process(lam, horizon, dt, sub, diffusivity=diffusivity, curvature=curvature)
        g[k] = path.gammas[0] if path.excursions.size else 0.0
        s[k] = path.sigmas[0] if path.excursions.size else 0
    return g, s


# ---------------------------------------------------------------------------
# Graphs with i.i.d. degrees


@dataclass(frozen=True)
class DegreeModelParams:
    """Law of a positive integer degree ``D`` with finite support."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.size == 0:
            raise ValidationError("values and probs must have equal nonzero length")
        if (v < 1).any():
            raise ValidationError("degrees must be positive integers")
        if (p < 0).any() or abs(p.sum() - 1) > 1e-12:
            raise ValidationError("degree probabilities must sum to 1")
        if abs(float(p[v == 2].sum()) - 1.0) < 1e-12:
            raise ValidationError("P(D = 2) must be below 1")
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "probs", tuple(p.tolist()))

    def _moment(self, f) -> float:
        v = np.asarray(self.values, dtype=float)
        return float(np.asarray(self.probs) @ f(v))

    @property
    def mu(self) -> float:
        return self._moment(lambda d: d)

    @property
    def theta(self) -> float:
        return self._moment(lambda d: d * (d - 1)) / self.mu

    @property
    def beta(self) -> float:
        return self._moment(lambda d: d * (d - 1) * (d - 2))

    @property
    def critical(self) -> bool:
        return abs(self.theta - 1.0) < 1e-9

    @property
    def diffusivity(self) -> float:
        return math.sqrt(self.beta / self.mu)

    @property
    def curvature(self) -> float:
        return self.beta / (2 * self.mu**2)

    def sample(self, n: int, rng) -> np.ndarray:
        d = rng.choice(np.asarray(self.values), size=n, p=np.asarray(self.probs))
        if d.sum() % 2:
            d[-1] -= 1
        return d


@numba.njit(cache=True)
def _is_simple(pairs, n):
    m = pairs.shape[0]
    keys = np.empty(m, dtype=np.int64)
    for k in range(m):
        a, b = pairs[k, 0], pairs[k, 1]
        if a == b:
            return False
        if a > b:
            a, b = b, a
        keys[k] = a * n + b
    keys.sort()
    for k in range(1, m):
        if keys[k] == keys[k - 1]:
            return False
    return True


def degree_model_graph(params: DegreeModelParams, n: int, rng=None, max_tries: int = 10_000, degrees=None):
    """Uniform simple graph with i.i.d. degrees from ``params``.

    If the degree sum is odd the last vertex loses one degree. Uniformity is
    obtained by resampling the configuration-model pairing until it is simple.
    Returns ``(components, degrees)``.
    """
    check_int(n, "n", minimum=1)
    rng = check_random_state(rng)
    d = params.sample(n, rng) if degrees is None else np.asarray(degrees, dtype=np.int64)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if _is_simple(pairs, n):
            return _components(n, pairs), d
    raise ValidationError(f"no simple pairing found after {max_tries} tries")
