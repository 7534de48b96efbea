"""Contour and depth-first queue (Lukasiewicz) encodings of trees, and the
pseudometric carried by a real excursion."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import TextIO

import numba
import numpy as np

from ._validation import ValidationError, check_int, check_random_state
from .tree_core import RootedOrderedTree

__all__ = [
    "DiscreteExcursion",
    "RealExcursion",
    "contour_of",
    "dfq_of",
    "dfq_by_stack",
    "tree_from_dfq",
    "tree_from_contour",
    "excursion_distance",
    "pairwise_excursion_distances",
    "distance_matrix_from_excursion",
    "four_point_violations",
    "rescale_excursion",
    "DfqContourPairs",
    "dfq_contour_ratio",
    "format_path",
    "parse_path",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

CONTOUR = "contour"
DFQ = "dfq"


@dataclass(frozen=True, eq=False)
class DiscreteExcursion:
    """Integer lattice excursion of either contour or DFQ flavour.

    A DFQ path satisfies ``q[0] == 1``, ``q[-1] == 0``, ``q[i] > 0`` before
    the end and increments ``>= -1``. A contour path starts and ends at 0,
    stays nonnegative and moves by ``+-1``. The single-vertex contour is the
    one-point path ``(0,)``.
    """

    q: np.ndarray
    flavor: str

    def __post_init__(self):
        q = np.array(self.q, dtype=np.int64)
        q.flags.writeable = False
        object.__setattr__(self, "q", q)
        if self.flavor == DFQ:
            _check_dfq(q)
        elif self.flavor == CONTOUR:
            _check_contour(q)
        else:
            raise ValidationError(f"unknown flavor {self.flavor!r}")

    @property
    def length(self) -> int:
        return self.q.size - 1

    def __eq__(self, other):
        if not isinstance(other, DiscreteExcursion):
            return NotImplemented
        return self.flavor == other.flavor and np.array_equal(self.q, other.q)

    def __hash__(self):
        return hash((self.flavor, self.q.tobytes()))

    def __repr__(self):
        head = " ".join(map(str, self.q[:12].tolist()))
        tail = " ..." if self.q.size > 12 else ""
        return f"DiscreteExcursion({self.flavor}: {head}{tail})"


def _check_dfq(q: np.ndarray) -> None:
    if q.ndim != 1 or q.size < 2:
        raise ValidationError("a DFQ path has length >= 1")
    if q[0] != 1 or q[-1] != 0:
        raise ValidationError("a DFQ path starts at 1 and ends at 0")
    if (q[:-1] <= 0).any():
        raise ValidationError("a DFQ path must stay positive before its last step")
    if (np.diff(q) < -1).any():
        raise ValidationError("DFQ increments must be >= -1")


def _check_contour(q: np.ndarray) -> None:
    if q.ndim != 1 or q.size < 1:
        raise ValidationError("empty contour path")
    if q[0] != 0 or q[-1] != 0:
        raise ValidationError("a contour path starts and ends at 0")
    if (q < 0).any():
        raise ValidationError("a contour path must stay nonnegative")
    if q.size > 1 and (np.abs(np.diff(q)) != 1).any():
        raise ValidationError("contour steps must be +1 or -1")


@numba.njit(cache=True)
def _contour_kernel(offsets, children, root):
    n = offsets.shape[0] - 1
    out = np.zeros(2 * n - 1, dtype=np.int64)
    stack_v = np.empty(n, dtype=np.int64)
    stack_k = np.empty(n, dtype=np.int64)
    top = 0
    stack_v[0] = root
    stack_k[0] = offsets[root]
    pos = 0
    while top >= 0:
        v = stack_v[top]
        k = stack_k[top]
        if k < offsets[v + 1]:
            stack_k[top] = k + 1
            top += 1
            stack_v[top] = children[k]
            stack_k[top] = offsets[children[k]]
            pos += 1
            out[pos] = top
        else:
            top -= 1
            if top >= 0:
                pos += 1
                out[pos] = top
    return out


def contour_of(t: RootedOrderedTree) -> DiscreteExcursion:
    """Distance to the root along the clockwise unit-speed contour walk."""
    return DiscreteExcursion(_contour_kernel(t.offsets, t.child_array, t.root), CONTOUR)


def dfq_of(t: RootedOrderedTree) -> DiscreteExcursion:
    """DFQ path ``q_i = 1 + sum_{j<=i} (c(v_j) - 1)`` over the depth-first order."""
    c = t.child_counts()[t.dfs_order()]
    q = np.empty(t.n + 1, dtype=np.int64)
    q[0] = 1
    np.cumsum(c - 1, out=q[1:])
    q[1:] += 1
    return DiscreteExcursion(q, DFQ)


def dfq_by_stack(t: RootedOrderedTree) -> np.ndarray:
    """Stack sizes of an explicit last-in-first-out exploration of ``t``."""
    stack = [t.root]
    sizes = [1]
    while stack:
        v = stack.pop()
        stack.extend(reversed(t.children(v).tolist()))
        sizes.append(len(stack))
    return np.array(sizes, dtype=np.int64)


@numba.njit(cache=True)
def _parent_from_dfq(q):
    n = q.shape[0] - 1
    parent = np.empty(n, dtype=np.int64)
    slots = np.empty(n, dtype=np.int64)
    top = -1
    parent[0] = -1
    for i in range(n):
        if i > 0:
            parent[i] = slots[top]
            top -= 1
        c = q[i + 1] - q[i] + 1
        for _ in range(c):
            top += 1
            slots[top] = i
    return parent


def tree_from_dfq(q) -> RootedOrderedTree:
    """The unique ordered tree whose DFQ path is ``q``; vertices are numbered
    in depth-first order."""
    if not isinstance(q, DiscreteExcursion):
        q = DiscreteExcursion(q, DFQ)
    elif q.flavor != DFQ:
        raise ValidationError("expected a DFQ-flavoured excursion")
    parent = _parent_from_dfq(q.q)
    return RootedOrderedTree(parent, _order=np.arange(parent.size, dtype=np.int64))


@numba.njit(cache=True)
def _parent_from_contour(e):
    m = e.shape[0] - 1
    n = m // 2 + 1
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    cur = 0
    nxt = 1
    for i in range(m):
        if e[i + 1] > e[i]:
            parent[nxt] = cur
            cur = nxt
            nxt += 1
        else:
            cur = parent[cur]
    return parent


def tree_from_contour(e) -> RootedOrderedTree:
    """The unique ordered tree whose contour process is ``e``."""
    if not isinstance(e, DiscreteExcursion):
        e = DiscreteExcursion(e, CONTOUR)
    elif e.flavor != CONTOUR:
        raise ValidationError("expected a contour-flavoured excursion")
    parent = _parent_from_contour(e.q)
    return RootedOrderedTree(parent, _order=np.arange(parent.size, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class RealExcursion:
    """Nonnegative function sampled on a grid, linearly interpolated,
    vanishing at both ends of ``[0, zeta]``."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        v = np.array(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValidationError("grid and values must be matching 1-d arrays of length >= 2")
        if g[0] != 0.0 or (np.diff(g) <= 0).any():
            raise ValidationError("grid must start at 0 and be strictly increasing")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValidationError("an excursion vanishes at both endpoints")
        if (v < 0).any():
            raise ValidationError("excursion values must be nonnegative")
        g.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def zeta(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def area(self) -> float:
        return float(_trapezoid(self.values, self.grid))

    @classmethod
    def from_discrete(cls, path, time_scale: float = 1.0, space_scale: float = 1.0):
        """Lift an integer path onto the grid ``time_scale * (0, 1, ..., m)``."""
        q = path.q if isinstance(path, DiscreteExcursion) else np.asarray(path)
        if q.size < 2:
            raise ValidationError("cannot lift an empty path to a real excursion")
        return cls(np.arange(q.size) * float(time_scale), q * float(space_scale))

    def to_csv(self, stream: TextIO | None = None) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.grid.tolist(), self.values.tolist()):
            buf.write(f"{t!r},{v!r}\n")
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    @classmethod
    def read_csv(cls, stream: TextIO) -> "RealExcursion":
        rows = [line.strip() for line in stream if line.strip() and not line.startswith("#")]
        if not rows or rows[0].replace(" ", "") != "t,value":
            raise ValidationError("excursion CSV must start with a 't,value' header")
        data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
        return cls(data[:, 0], data[:, 1])


def _value_at(e: RealExcursion, x: float):
    if not 0.0 <= x <= e.zeta:
        raise ValidationError(f"time {x} outside [0, {e.zeta}]")
    return float(np.interp(x, e.grid, e.values))


def excursion_distance(e: RealExcursion, x: float, y: float) -> float:
    """``e(x) + e(y) - 2 min_{[x^y, xvy]} e`` for the piecewise-linear ``e``."""
    fx = _value_at(e, x)
    fy = _value_at(e, y)
    lo, hi = (x, y) if x <= y else (y, x)
    i = np.searchsorted(e.grid, lo, side="right")
    j = np.searchsorted(e.grid, hi, side="left")
    m = min(fx, fy)
    if j > i:
        m = min(m, float(e.values[i:j].min()))
    return fx + fy - 2.0 * m


def pairwise_excursion_distances(e: RealExcursion, times) -> np.ndarray:
    """Matrix of ``d_e^0`` between all pairs of the given times."""
    times = np.asarray(times, dtype=float)
    if times.size and (times.min() < 0 or times.max() > e.zeta):
        raise ValidationError("times outside the excursion's domain")
    k = times.size
    order = np.argsort(times, kind="stable")
    ts = times[order]
    fs = np.interp(ts, e.grid, e.values)
    # minimum of e over each gap between consecutive sorted times
    gap_min = np.minimum(fs[:-1], fs[1:])
    lo = np.searchsorted(e.grid, ts[:-1], side="right")
    hi = np.searchsorted(e.grid, ts[1:], side="left")
    for g in np.flatnonzero(hi > lo):
        gap_min[g] = min(gap_min[g], e.values[lo[g] : hi[g]].min())
    D_sorted = np.zeros((k, k))
    for a in range(k - 1):
        mins = np.minimum.accumulate(gap_min[a:])
        D_sorted[a, a + 1 :] = fs[a] + fs[a + 1 :] - 2.0 * mins
    D_sorted = D_sorted + D_sorted.T
    D = np.empty_like(D_sorted)
    D[np.ix_(order, order)] = D_sorted
    return D


def distance_matrix_from_excursion(e: RealExcursion, k: int, rng=None, return_times: bool = False):
    """Distances between ``k`` points of the coded tree drawn from the
    push-forward of the uniform measure on ``[0, zeta]``."""
    k = check_int(k, "k", minimum=1)
    rng = check_random_state(rng)
    times = rng.uniform(0.0, e.zeta, size=k)
    D = pairwise_excursion_distances(e, times)
    return (D, times) if return_times else D


def four_point_violations(D, tol: float = 1e-9) -> int:
    """Number of quadruples violating the four-point (tree-metric) condition.

    For every quadruple the largest of the three pairings sums must be
    attained at least twice.
    """
    D = np.asarray(D, dtype=float)
    k = D.shape[0]
    if k < 4:
        return 0
    idx = np.array(
        [(w, x, y, z) for w in range(k) for x in range(w + 1, k) for y in range(x + 1, k) for z in range(y + 1, k)]
    )
    w, x, y, z = idx.T
    s = np.sort(np.stack([D[w, x] + D[y, z], D[w, y] + D[x, z], D[w, z] + D[x, y]]), axis=0)
    scale = np.maximum(1.0, s[2])
    return int(np.count_nonzero(s[2] - s[1] > tol * scale))


def rescale_excursion(e: RealExcursion, x: float) -> RealExcursion:
    """Stretch time by ``x`` and space by ``sqrt(x)``."""
    if not x > 0:
        raise ValidationError("scale factor must be positive")
    return RealExcursion(e.grid * x, e.values * np.sqrt(x), dict(e.meta))


@dataclass(frozen=True)
class DfqContourPairs:
    """Per-vertex DFQ heights paired with true depths, in depth-first order."""

    q: np.ndarray
    depth: np.ndarray
    predicted_factor: float
    degenerate: bool

    def slope(self) -> float:
        """Least-squares slope of ``q`` against depth through the origin."""
        d = self.depth.astype(float)
        denom = float(d @ d)
        return float(d @ self.q) / denom if denom > 0 else float("nan")


def dfq_contour_ratio(t: RootedOrderedTree) -> DfqContourPairs:
    """Pair ``q_i`` with ``dist(root, v_i)`` for ``i = 1..n``.

    The predicted constant is ``sum c(c-1) / (2(n-1))``; trees where this sum
    vanishes (paths) are flagged as degenerate.
    """
    if t.n < 2:
        raise ValidationError("need at least two vertices")
    q = dfq_of(t).q[1:]
    depth = t.depths()[t.dfs_order()]
    c = t.child_counts().astype(np.int64)
    s = int((c * (c - 1)).sum())
    return DfqContourPairs(q.copy(), depth.copy(), 0.5 * s / (t.n - 1), s == 0)


def format_path(path) -> str:
    q = path.q if isinstance(path, DiscreteExcursion) else np.asarray(path)
    return " ".join(map(str, q.tolist()))


def parse_path(text: str, flavor: str) -> DiscreteExcursion:
    try:
        q = [int(x) for x in text.split()]
    except ValueError as exc:
        raise ValidationError(f"path must be whitespace-separated integers: {exc}") from exc
    return DiscreteExcursion(q, flavor)
