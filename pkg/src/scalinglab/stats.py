"""Reference laws, goodness-of-fit tests and experiment runners.

Every ``experiment_*`` function takes an integer ``seed`` and returns a plain
dictionary (JSON-serialisable) with parameters, sample sizes, statistics,
p-values and a status per check. Reruns with the same seed are identical.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats as sps
from scipy.special import gammainc, gammaln

from . import __version__
from ._validation import ValidationError, check_int, check_random_state, spawn
from .graph_core import core, kernel
from .linebreak import (
    LeafTree,
    _decode_kernel,
    double_factorial,
    enumerate_binary_shapes,
    marchal_distance_series,
    marchal_step,
    remy_step,
    root_distance_table,
    uniform_labelled_tree,
)
from .samplers import (
    PRESETS,
    DegreeModelParams,
    ErParams,
    bienayme_conditioned,
    degree_model_graph,
    er_explore_markov,
    er_graph,
    largest_excursions,
    uniform_graphs_fixed_surplus,
)
from .tree_core import tree_distance

__all__ = [
    "ReferenceDensity",
    "rayleigh",
    "arrival_marginal",
    "ArrivalJointDensity",
    "core_size_density",
    "total_length_density",
    "EmpiricalSample",
    "GofResult",
    "ks_test",
    "ks_2sample",
    "chi_square",
    "chi_square_2sample",
    "total_variation",
    "status_for_p",
    "finite_core_law",
    "experiment_root_distance",
    "experiment_subtree_sizes",
    "experiment_crt_distance",
    "experiment_uniform_graph",
    "experiment_core_size",
    "experiment_shapes",
    "experiment_marchal_stability",
    "experiment_er_chain",
    "experiment_critical_er",
    "experiment_glue_vs_graph",
    "experiment_degree_model",
    "EXPERIMENTS",
]

P_PASS = 0.01
P_FLAG = 0.001


# ---------------------------------------------------------------------------
# Reference laws


@dataclass(frozen=True)
class ReferenceDensity:
    name: str
    pdf: Callable
    cdf: Callable
    support: tuple = (0.0, math.inf)

    def total_mass(self) -> float:
        val, _ = integrate.quad(self.pdf, *self.support, limit=200, epsabs=1e-12, epsrel=1e-12)
        return val


def rayleigh() -> ReferenceDensity:
    return ReferenceDensity("rayleigh", lambda x: x * np.exp(-x * x / 2), lambda x: -np.expm1(-np.square(x) / 2))


def arrival_marginal(i: int) -> ReferenceDensity:
    """Law of the ``i``-th arrival of the rate-``t`` Poisson process:
    ``s_i^2 / 2 ~ Gamma(i, 1)``."""
    check_int(i, "i", minimum=1)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            lp = np.log(x) + (i - 1) * np.log(x * x / 2) - x * x / 2 - gammaln(i)
        return np.where(x > 0, np.exp(lp), 0.0)

    return ReferenceDensity(f"arrival_{i}", pdf, lambda x: gammainc(i, np.square(x) / 2))


class ArrivalJointDensity:
    """Joint density ``x_1 ... x_k exp(-x_k^2/2)`` on ``0 <= x_1 <= ... <= x_k``."""

    def __init__(self, k: int):
        self.k = check_int(k, "k", minimum=1)

    def pdf(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.k,) or (x < 0).any() or (np.diff(x) < 0).any():
            return 0.0
        return float(np.prod(x) * math.exp(-x[-1] ** 2 / 2))

    def rosenblatt(self, x) -> np.ndarray:
        """Map rows of arrival vectors to i.i.d. uniforms under the joint law."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        sq = np.concatenate([np.zeros((x.shape[0], 1)), x * x / 2], axis=1)
        return -np.expm1(-np.diff(sq, axis=1))

    def total_mass(self) -> float:
        if self.k == 1:
            return rayleigh().total_mass()
        if self.k == 2:
            val, _ = integrate.dblquad(lambda x1, x2: x1 * x2 * math.exp(-x2 * x2 / 2), 0, 40, 0, lambda x2: x2)
            return val
        raise ValidationError("quadrature check implemented for k <= 2")


def core_size_density(s: int) -> ReferenceDensity:
    """Density proportional to ``x^{3s-3} e^{-x^2/2}`` on ``x >= 0``."""
    check_int(s, "s", minimum=1)
    a = (3 * s - 2) / 2
    lognorm = ((3 * s - 4) / 2) * math.log(2) + math.lgamma(a)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = (3 * s - 3) * np.log(np.abs(x)) - x * x / 2 - lognorm if s > 1 else -x * x / 2 - lognorm
        return np.where(x > 0, np.exp(lp), 0.0)

    return ReferenceDensity(f"core_size_s{s}", pdf, lambda x: gammainc(a, np.square(x) / 2))


def total_length_density(i: int) -> ReferenceDensity:
    """Total length of a line-breaking tree with ``i`` leaves: the edge-length
    density ``s e^{-s^2/2}`` integrated over the simplex of ``2i-1`` lengths and
    summed over the ``(2i-3)!!`` shapes."""
    check_int(i, "i", minimum=1)
    shapes = double_factorial(2 * i - 3)
    logc = math.log(shapes) - math.lgamma(2 * i - 1)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            lp = (2 * i - 1) * np.log(x) - x * x / 2 + logc
        return np.where(x > 0, np.exp(lp), 0.0)

    def cdf(x):
        return np.array([integrate.quad(pdf, 0, xi)[0] if xi > 0 else 0.0 for xi in np.atleast_1d(x)])

    return ReferenceDensity(f"total_length_{i}", pdf, cdf)


# ---------------------------------------------------------------------------
# Tests


@dataclass
class EmpiricalSample:
    observations: np.ndarray
    weights: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.observations = np.asarray(self.observations)
        if self.observations.size == 0:
            raise ValidationError("empty sample")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if (self.weights < 0).any():
                raise ValidationError("weights must be nonnegative")


@dataclass(frozen=True)
class GofResult:
    name: str
    statistic: float
    p_value: float | None
    dof: int | None = None
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"name": self.name, "statistic": _num(self.statistic), "p_value": _num(self.p_value)}
        if self.dof is not None:
            d["dof"] = self.dof
        d.update({k: _num(v) for k, v in self.detail.items()})
        return d


def _num(x):
    if x is None:
        return None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def status_for_p(p: float) -> str:
    if p > P_PASS:
        return "pass"
    if p > P_FLAG:
        return "flag"
    return "fail"


def _sample_array(sample) -> np.ndarray:
    x = sample.observations if isinstance(sample, EmpiricalSample) else np.asarray(sample, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty sample")
    return x


def ks_test(sample, ref: ReferenceDensity | Callable, name: str | None = None) -> GofResult:
    """One-sample Kolmogorov–Smirnov test against a continuous cdf."""
    x = _sample_array(sample)
    cdf = ref.cdf if isinstance(ref, ReferenceDensity) else ref
    res = sps.kstest(x, cdf, method="asymp" if x.size >= 20 else "exact")
    return GofResult(name or f"ks:{getattr(ref, 'name', 'cdf')}", float(res.statistic), float(res.pvalue))


def ks_2sample(a, b, name: str = "ks2") -> GofResult:
    a, b = _sample_array(a), _sample_array(b)
    res = sps.ks_2samp(a, b, method="asymp")
    return GofResult(name, float(res.statistic), float(res.pvalue))


def _merge_small(expected: np.ndarray, minimum: float = 5.0) -> np.ndarray:
    """Group labels such that every group's expected count is >= ``minimum``.

    Cells below the minimum are pooled together (smallest first); if the pool
    is still too small it absorbs the smallest remaining cell.
    """
    k = expected.size
    group = np.arange(k)
    small = np.flatnonzero(expected < minimum)
    if small.size == 0:
        return group
    pool = small[0]
    group[small] = pool
    total = expected[small].sum()
    rest = [i for i in np.argsort(expected, kind="stable") if expected[i] >= minimum]
    while total < minimum and rest:
        j = rest.pop(0)
        group[j] = pool
        total += expected[j]
    _, relabel = np.unique(group, return_inverse=True)
    return relabel


def chi_square(observed, probs, ddof: int = 0, name: str = "chi2") -> GofResult:
    """Pearson goodness of fit; cells with expected count < 5 are merged."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(probs, dtype=float)
    if obs.shape != p.shape or obs.size == 0:
        raise ValidationError("observed counts and probabilities must match and be nonempty")
    if obs.sum() == 0:
        raise ValidationError("empty sample")
    p = p / p.sum()
    exp = obs.sum() * p
    g = _merge_small(exp)
    o = np.bincount(g, weights=obs)
    e = np.bincount(g, weights=exp)
    keep = e > 0
    o, e = o[keep], e[keep]
    dof = o.size - 1 - ddof
    stat = float(((o - e) ** 2 / e).sum())
    pval = float(sps.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return GofResult(name, stat, pval, dof, {"cells": int(obs.size), "merged_cells": int(o.size)})


def chi_square_2sample(a: Sequence, b: Sequence, name: str = "chi2_2sample") -> GofResult:
    """Homogeneity test for two samples of hashable categories."""
    ca, cb = Counter(a), Counter(b)
    cats = sorted(set(ca) | set(cb), key=repr)
    tab = np.array([[ca[c] for c in cats], [cb[c] for c in cats]], dtype=float)
    total = tab.sum()
    exp_min = np.minimum(tab[0].sum(), tab[1].sum()) * tab.sum(axis=0) / total
    g = _merge_small(exp_min)
    merged = np.vstack([np.bincount(g, weights=tab[0]), np.bincount(g, weights=tab[1])])
    if merged.shape[1] < 2:
        return GofResult(name, 0.0, 1.0, 0, {"categories": len(cats)})
    stat, pval, dof, _ = sps.chi2_contingency(merged, correction=False)
    return GofResult(name, float(stat), float(pval), int(dof), {"categories": len(cats), "merged_cells": int(merged.shape[1])})


def total_variation(a: Sequence, b: Sequence) -> float:
    ca, cb = Counter(a), Counter(b)
    na, nb = sum(ca.values()), sum(cb.values())
    return 0.5 * sum(abs(ca[k] / na - cb[k] / nb) for k in set(ca) | set(cb))


# ---------------------------------------------------------------------------
# Exact finite-size core laws


def _log_forests(n: int, k: int) -> float:
    """log of ``C(n,k) * k * n^(n-k-1)``: vertex set of size k plus rooted forest."""
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + math.log(k) + (n - k - 1) * math.log(n)


def finite_core_law(n: int, s: int) -> dict:
    """Exact law of (kernel type, core size) for a uniform graph in ``G_n^s``.

    Supported for ``s in (1, 2)``. Kernel types: ``cycle`` (s=1); ``theta``,
    ``dumbbell``, ``eight`` (s=2).
    """
    check_int(n, "n", minimum=3)
    logs: dict = {}
    if s == 1:
        for k in range(3, n + 1):
            logs[("cycle", k)] = _log_forests(n, k) + math.lgamma(k) - math.log(2)
    elif s == 2:
        for k in range(4, n + 1):
            N = k - 2
            lf = _log_forests(n, k) + math.log(math.comb(k, 2)) + math.lgamma(N + 1)
            theta = (math.comb(N - 1, 2) if N >= 3 else 0) + 3 * (N - 1)
            if theta > 0:
                logs[("theta", k)] = lf + math.log(theta / 6)
            if N >= 4:
                logs[("dumbbell", k)] = lf + math.log(math.comb(N - 2, 2) / 4)
            M = k - 1
            if M >= 4:
                logs[("eight", k)] = _log_forests(n, k) + math.log(k) + math.lgamma(M + 1) + math.log((M - 3) / 8)
        # theta with k=4 (N=2): two internal vertices, at most one empty path
        # is handled by the general formula above
    else:
        raise ValidationError("finite core law implemented for s = 1, 2")
    mx = max(logs.values())
    w = {key: math.exp(v - mx) for key, v in logs.items()}
    tot = sum(w.values())
    return {key: v / tot for key, v in w.items()}


# ---------------------------------------------------------------------------
# Experiments


def _report(name: str, seed: int, params: dict) -> dict:
    return {"experiment": name, "version": __version__, "seed": int(seed), "params": params, "checks": [], "observations": {}}


def _add_p_check(rep: dict, res: GofResult, threshold: float = P_PASS, **extra) -> None:
    d = res.as_dict()
    d["threshold"] = threshold
    d["status"] = status_for_p(res.p_value) if threshold == P_PASS else ("pass" if res.p_value > threshold else "fail")
    d.update(extra)
    rep["checks"].append(d)


def _add_bound_check(rep: dict, name: str, value: float, bound: float, **extra) -> None:
    rep["checks"].append({"name": name, "statistic": float(value), "threshold": float(bound), "status": "pass" if value < bound else "fail", **extra})


def _finish(rep: dict) -> dict:
    statuses = [c["status"] for c in rep["checks"] if not c.get("diagnostic")]
    rep["passed"] = all(s == "pass" for s in statuses)
    rep["flagged"] = any(s == "flag" for s in statuses)
    return rep


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def experiment_root_distance(n: int = 100, draws: int = 100_000, seed: int = 0) -> dict:
    """Distance from the root to label 1 in uniform rooted trees vs the exact pmf."""
    rng = _rng(seed)
    rep = _report("root-distance", seed, {"n": n, "draws": draws})
    d = np.empty(draws, dtype=np.int64)
    for b, sub in enumerate(spawn(rng, -(-draws // 1000))):
        for r in range(b * 1000, min(draws, (b + 1) * 1000)):
            t = uniform_labelled_tree(n, sub)
            d[r] = tree_distance(t, t.root, 0)
    pmf = root_distance_table(n)
    obs = np.bincount(d, minlength=n)
    _add_p_check(rep, chi_square(obs, pmf, name="chi2:root_distance"))
    rep["observations"]["distance"] = d.tolist()
    return _finish(rep)


def _subtree_size_matrix(n: int, k: int, draws: int, rng) -> np.ndarray:
    out = np.empty((draws, k))
    batch = 256
    r = 0
    for sub in spawn(rng, -(-draws // batch)):
        words = sub.integers(0, n, size=(min(batch, draws - r), n - 1), dtype=np.int64)
        for w in words:
            _, starts = _decode_kernel(w, n, k)
            sizes = np.full(k, n, dtype=np.int64)
            m = min(k, starts.size - 1)
            sizes[:m] = starts[1 : m + 1] + 1
            out[r] = sizes
            r += 1
    return out / math.sqrt(n)


def experiment_subtree_sizes(n: int = 10_000, k: int = 1, draws: int = 10_000, seed: int = 0) -> dict:
    """Rescaled sizes of the first ``k`` line-breaking subtrees vs the arrival
    times of a rate-``t`` Poisson process."""
    check_int(k, "k", minimum=1)
    rng = _rng(seed)
    rep = _report("subtree-sizes", seed, {"n": n, "k": k, "draws": draws})
    S = _subtree_size_matrix(n, k, draws, rng)
    for i in range(k):
        _add_p_check(rep, ks_test(S[:, i], arrival_marginal(i + 1), name=f"ks:S_{i + 1}/sqrt(n)"))
    rep["monotone"] = bool((np.diff(S, axis=1) >= 0).all())
    if k > 1:
        u = ArrivalJointDensity(k).rosenblatt(S).ravel()
        _add_p_check(rep, ks_test(u, sps.uniform.cdf, name="ks:joint_rosenblatt"))
    for i in range(k):
        rep["observations"][f"S_{i + 1}"] = S[:, i].tolist()
    return _finish(rep)


def experiment_crt_distance(n: int = 10_000, draws: int = 2000, seed: int = 0, presets: Sequence[str] = ("poisson1", "geometric", "binary")) -> dict:
    """Two-point distances in conditioned trees, multiplied by ``sigma / sqrt(n)``."""
    rng = _rng(seed)
    rep = _report("crt-distance", seed, {"n": n, "draws": draws, "presets": list(presets)})
    samples = {}
    for name, sub in zip(presets, spawn(rng, len(presets))):
        spec = PRESETS[name]
        m = n if name != "binary" or n % 2 else n + 1
        x = np.empty(draws)
        for r in range(draws):
            t = bienayme_conditioned(spec, m, sub)
            u, v = sub.integers(0, m, size=2)
            x[r] = spec.sigma * tree_distance(t, int(u), int(v)) / math.sqrt(m)
        samples[name] = x
        _add_p_check(rep, ks_test(x, rayleigh(), name=f"ks:{name}_vs_rayleigh"))
        rep["observations"][name] = x.tolist()
    names = list(presets)
    for a, b in zip(names[:-1], names[1:]):
        _add_p_check(rep, ks_2sample(samples[a], samples[b], name=f"ks2:{a}_vs_{b}"))
    return _finish(rep)


def experiment_uniform_graph(n: int = 4, s: int = 1, draws: int = 100_000, seed: int = 0) -> dict:
    """Frequencies of the fixed-surplus sampler against enumeration."""
    from .graph_core import enumerate_Gns

    rng = _rng(seed)
    rep = _report("uniform-graph", seed, {"n": n, "s": s, "draws": draws})
    universe = {g.canonical(): i for i, g in enumerate(enumerate_Gns(n, s))}
    graphs, diag = uniform_graphs_fixed_surplus(n, s, draws, rng)
    counts = np.zeros(len(universe))
    outside = 0
    for g in graphs:
        i = universe.get(g.canonical())
        if i is None:
            outside += 1
        else:
            counts[i] += 1
    rep["graph_count"] = len(universe)
    rep["outside_universe"] = outside
    rep["sampler"] = diag.method
    _add_p_check(rep, chi_square(counts, np.ones(len(universe)), name="chi2:uniform_over_Gns"))
    rep["observations"]["index"] = [universe.get(g.canonical(), -1) for g in graphs]
    return _finish(rep)


def _kernel_kind(g) -> str:
    K = kernel(g)
    if not K.edges:
        return "cycle" if K.cycle_length else "tree"
    loops = sum(m for (u, v), m in K.edges.items() if u == v)
    if K.n == 2 and loops == 0:
        return "theta"
    if K.n == 2 and loops == 2:
        return "dumbbell"
    if K.n == 1:
        return "eight"
    return f"other:{K.n}v{K.n_edges()}e"


def experiment_core_size(n: int = 2000, s: int = 1, draws: int = 2000, seed: int = 0, pool_factor: int = 64) -> dict:
    """Core size over ``sqrt(n)`` of uniform graphs in ``G_n^s`` against the
    limiting density; kernel frequencies when ``s = 2``."""
    rng = _rng(seed)
    rep = _report("core-size", seed, {"n": n, "s": s, "draws": draws, "pool_factor": pool_factor})
    graphs, diag = uniform_graphs_fixed_surplus(n, s, draws, rng, pool_factor=pool_factor)
    rep["sampler"] = {"method": diag.method, "pool_size": diag.pool_size, "effective_sample_size": diag.effective_sample_size, "distinct_draws": diag.distinct_draws}
    sizes = np.array([core(g).n for g in graphs])
    x = sizes / math.sqrt(n)
    rep["core_below_n"] = bool((sizes < n).all())
    _add_p_check(rep, ks_test(x, core_size_density(s), name="ks:core_size_limit"))
    a = (3 * s - 2) / 2
    _add_p_check(rep, ks_test(x * x, lambda y: gammainc(a, np.asarray(y) / 2), name="ks:core_size_squared_gamma"))
    if s in (1, 2):
        law = finite_core_law(n, s)
        ks_exact = _discrete_ks(sizes, law)
        rep["checks"].append({**ks_exact, "name": "ks:core_size_exact_finite_n", "diagnostic": True})
        limit_gap = _limit_gap(n, s, law)
        rep["finite_n_ks_distance_to_limit"] = limit_gap
    if s == 2:
        kinds = Counter(_kernel_kind(g) for g in graphs)
        f_theta = kinds["theta"] / draws
        f_db = kinds["dumbbell"] / draws
        rep["kernel_counts"] = dict(kinds)
        _add_bound_check(rep, "kernel_freq:theta", abs(f_theta - 0.4), 0.03, frequency=f_theta, target=0.4)
        _add_bound_check(rep, "kernel_freq:dumbbell", abs(f_db - 0.6), 0.03, frequency=f_db, target=0.6)
        law = finite_core_law(n, 2)
        rep["kernel_exact_finite_n"] = {kind: sum(p for (kk, _), p in law.items() if kk == kind) for kind in ("theta", "dumbbell", "eight")}
    rep["observations"]["core_size"] = sizes.tolist()
    return _finish(rep)


def _discrete_ks(sizes: np.ndarray, law: dict) -> dict:
    """KS distance between the sample and an exact discrete law, with the
    asymptotic p-value (conservative for discrete laws)."""
    pmf = Counter()
    for (_, k), p in law.items():
        pmf[k] += p
    ks = np.array(sorted(pmf))
    cdf = np.cumsum([pmf[k] for k in ks])
    emp = np.searchsorted(np.sort(sizes), ks, side="right") / sizes.size
    emp_left = np.searchsorted(np.sort(sizes), ks, side="left") / sizes.size
    cdf_left = np.concatenate([[0.0], cdf[:-1]])
    D = float(max(np.abs(emp - cdf).max(), np.abs(emp_left - cdf_left).max()))
    p = float(sps.kstwobign.sf(D * math.sqrt(sizes.size)))
    return {"statistic": D, "p_value": p, "status": status_for_p(p)}


def _limit_gap(n: int, s: int, law: dict) -> float:
    """Sup distance between the exact finite-n cdf of ``|core|/sqrt(n)`` and the limit cdf."""
    pmf = Counter()
    for (_, k), p in law.items():
        pmf[k] += p
    ks = np.array(sorted(pmf))
    cdf = np.cumsum([pmf[k] for k in ks])
    lim = core_size_density(s).cdf(ks / math.sqrt(n))
    lim_left = core_size_density(s).cdf((ks - 1e-9) / math.sqrt(n))
    cdf_left = np.concatenate([[0.0], cdf[:-1]])
    return float(max(np.abs(cdf - lim).max(), np.abs(cdf_left - lim_left).max()))


def experiment_shapes(steps: int = 3, draws: int = 20_000, seed: int = 0, alpha: float = 2.0) -> dict:
    """Leaf-labelled shapes after ``steps`` growth steps: uniformity for the
    uniform-edge rule and agreement of the weighted rule at ``alpha``."""
    rng = _rng(seed)
    r1, r2 = spawn(rng, 2)
    rep = _report("shapes", seed, {"steps": steps, "draws": draws, "alpha": alpha})
    shapes = [t.shape_key() for t in enumerate_binary_shapes(steps)]
    index = {k: i for i, k in enumerate(shapes)}
    remy, marchal = [], []
    for _ in range(draws):
        t = LeafTree.initial()
        for _ in range(steps):
            t = remy_step(t, r1)
        remy.append(index[t.shape_key()])
        t = LeafTree.initial()
        for _ in range(steps):
            t = marchal_step(t, alpha, r2)
        marchal.append(index.get(t.shape_key(), -1))
    rep["shape_count"] = len(shapes)
    _add_p_check(rep, chi_square(np.bincount(remy, minlength=len(shapes)), np.ones(len(shapes)), name="chi2:remy_uniform"))
    _add_p_check(rep, chi_square_2sample(remy, marchal, name="chi2:marchal_vs_remy"))
    rep["observations"]["remy"] = remy
    rep["observations"]["marchal"] = marchal
    return _finish(rep)


def experiment_marchal_stability(alpha: float = 1.5, runs: int = 200, seed: int = 0, checkpoints=(2**12, 2**14)) -> dict:
    """Medians of rescaled leaf distances at two checkpoints of the weighted rule."""
    rng = _rng(seed)
    rep = _report("marchal-stability", seed, {"alpha": alpha, "runs": runs, "checkpoints": list(checkpoints)})
    series = np.array([marchal_distance_series(alpha, checkpoints, sub) for sub in spawn(rng, runs)])
    med = np.median(series, axis=0)
    rel = abs(med[-1] - med[0]) / med[0]
    rep["medians"] = med.tolist()
    _add_bound_check(rep, "median_relative_change", rel, 0.10)
    rep["observations"]["first"] = series[:, 0].tolist()
    rep["observations"]["last"] = series[:, -1].tolist()
    return _finish(rep)


def experiment_er_chain(n: int = 6, lam: float = 0.0, draws: int = 100_000, seed: int = 0) -> dict:
    """Joint law of (sizes, surpluses) from the queue chain vs the built graph."""
    rng = _rng(seed)
    r1, r2 = spawn(rng, 2)
    rep = _report("er-chain", seed, {"n": n, "lambda": lam, "draws": draws})
    params = ErParams(n, lam)
    a = [er_graph(params, r1).key() for _ in range(draws)]
    b = [er_explore_markov(params, r2).key() for _ in range(draws)]
    _add_p_check(rep, chi_square_2sample(a, b, name="chi2:graph_vs_chain"))
    rep["observations"]["graph"] = [repr(k) for k in a]
    rep["observations"]["chain"] = [repr(k) for k in b]
    return _finish(rep)


def _largest_distance_sample(n: int, lam: float, draws: int, rng, scale_power: float) -> np.ndarray:
    out = np.empty(draws)
    for r, sub in enumerate(spawn(rng, draws)):
        comps = er_graph(ErParams(n, lam), sub)
        D = comps.largest_distances(2, sub)
        out[r] = D[0, 1] / n**scale_power
    return out


def experiment_critical_er(
    n: int = 25_000,
    lam: float = 0.0,
    draws: int = 2000,
    dt: float = 1e-3,
    seed: int = 0,
    horizon: float = 10.0,
    size_factor: int = 4,
    metric_n: int = 10_000,
    metric_draws: int = 500,
) -> dict:
    """Critical random graph: component sizes and surpluses against the
    reflected drifted Brownian motion, and the ``n^{1/3}`` distance scale."""
    rng = _rng(seed)
    r_small, r_big, r_lim, r_m1, r_m2 = spawn(rng, 5)
    sizes = (n, size_factor * n)
    rep = _report("critical-er", seed, {"n": list(sizes), "lambda": lam, "draws": draws, "dt": dt, "horizon": horizon, "metric_n": [metric_n, 2 * metric_n], "metric_draws": metric_draws})
    largest = {}
    surpl = {}
    for m, sub in zip(sizes, (r_small, r_big)):
        c = [er_explore_markov(ErParams(m, lam), g) for g in spawn(sub, draws)]
        largest[m] = np.array([x.sizes[0] for x in c]) / m ** (2 / 3)
        surpl[m] = [int(x.surpluses[0]) for x in c]
    gam, sig = largest_excursions(lam, horizon, dt, draws, r_lim)
    _add_p_check(rep, ks_2sample(largest[sizes[0]], largest[sizes[1]], name="ks2:largest_size_n_vs_4n"))
    ks_lim = ks_2sample(largest[sizes[1]], gam, name="ks2:largest_size_vs_excursion")
    _add_bound_check(rep, ks_lim.name, ks_lim.statistic, 0.1, p_value=ks_lim.p_value)
    tv = total_variation(surpl[sizes[1]], sig.tolist())
    _add_bound_check(rep, "tv:largest_surplus_vs_marks", tv, 0.1)
    p0_graph = float(np.mean(np.array(surpl[sizes[1]]) == 0))
    p0_lim = float(np.mean(sig == 0))
    _add_bound_check(rep, "abs:P(surplus_1=0)", abs(p0_graph - p0_lim), 0.03, graph=p0_graph, limit=p0_lim)
    if metric_draws:
        d1 = _largest_distance_sample(metric_n, lam, metric_draws, r_m1, 1 / 3)
        d2 = _largest_distance_sample(2 * metric_n, lam, metric_draws, r_m2, 1 / 3)
        _add_p_check(rep, ks_2sample(d1, d2, name="ks2:largest_distance_n_vs_2n"))
        rep["observations"]["distance_n"] = d1.tolist()
        rep["observations"]["distance_2n"] = d2.tolist()
    for m in sizes:
        rep["observations"][f"largest_size_{m}"] = largest[m].tolist()
    rep["observations"]["excursion_length"] = gam.tolist()
    rep["observations"]["excursion_marks"] = sig.tolist()
    return _finish(rep)


def experiment_glue_vs_graph(n: int = 2000, s: int = 1, draws: int = 1000, seed: int = 0, m: int = 1000, pool_factor: int = 64) -> dict:
    """Two-point distances of uniform graphs in ``G_n^s`` over ``sqrt(n)``
    against the glued tilted-excursion construction."""
    from .continuum_graph import glue_surplus_points, tilted_excursions

    rng = _rng(seed)
    r1, r2, r3 = spawn(rng, 3)
    rep = _report("glue-vs-graph", seed, {"n": n, "s": s, "draws": draws, "grid_halfsteps": m, "pool_factor": pool_factor})
    graphs, _ = uniform_graphs_fixed_surplus(n, s, draws, r1, pool_factor=pool_factor)
    dg = np.empty(draws)
    for r, g in enumerate(graphs):
        u, v = r1.integers(1, n + 1, size=2)
        dg[r] = _bfs_distance(g, int(u), int(v)) / math.sqrt(n)
    exc = tilted_excursions(s, m, draws, r2, pool_factor=pool_factor)
    dc = np.empty(draws)
    betti_ok = True
    for r, e in enumerate(exc):
        gl = glue_surplus_points(e, s, r3)
        betti_ok &= gl.graph.betti_number() == s
        dc[r] = gl.distance_matrix(2, r3)[0, 1]
    rep["betti_exact"] = bool(betti_ok)
    _add_p_check(rep, ks_2sample(dg, dc, name="ks2:graph_vs_glued"))
    rep["observations"]["graph"] = dg.tolist()
    rep["observations"]["glued"] = dc.tolist()
    return _finish(rep)


def _bfs_distance(g, u: int, v: int) -> int:
    if u == v:
        return 0
    adj = g.adjacency()
    dist = {u: 0}
    frontier = [u]
    while frontier:
        nxt = []
        for x in frontier:
            for w in adj[x]:
                if w not in dist:
                    dist[w] = dist[x] + 1
                    if w == v:
                        return dist[w]
                    nxt.append(w)
        frontier = nxt
    raise ValidationError("vertices are in different components")


def experiment_degree_model(
    values=(1, 3),
    probs=(0.75, 0.25),
    n: int = 100_000,
    draws: int = 500,
    seed: int = 0,
    dt: float = 1e-3,
    horizon: float = 10.0,
) -> dict:
    """Largest component of the i.i.d.-degree graph against the reflected
    process with diffusivity ``sqrt(beta/mu)`` and curvature ``beta/(2 mu^2)``."""
    params = DegreeModelParams(tuple(values), tuple(probs))
    rng = _rng(seed)
    r1, r2, r3 = spawn(rng, 3)
    rep = _report("degree-model", seed, {"values": list(params.values), "probs": list(params.probs), "n": [n, 2 * n], "draws": draws, "dt": dt, "horizon": horizon})
    rep["moments"] = {"mu": params.mu, "theta": params.theta, "beta": params.beta}
    rep["critical"] = params.critical
    if not params.critical:
        rep["warning"] = f"theta = {params.theta:.6g} is not 1; the scaling comparison does not apply"
    big = {}
    for m, sub in ((n, r1), (2 * n, r2)):
        big[m] = np.array([degree_model_graph(params, m, g)[0].sizes[0] for g in spawn(sub, draws)]) / m ** (2 / 3)
    gam, _ = largest_excursions(0.0, horizon, dt, max(draws, 1000), r3, diffusivity=params.diffusivity, curvature=params.curvature)
    ks = ks_2sample(big[n], gam, name="ks2:largest_size_vs_excursion")
    _add_bound_check(rep, ks.name, ks.statistic, 0.1, p_value=ks.p_value)
    _add_p_check(rep, ks_2sample(big[n], big[2 * n], name="ks2:largest_size_n_vs_2n"))
    rep["observations"]["largest_size_n"] = big[n].tolist()
    rep["observations"]["largest_size_2n"] = big[2 * n].tolist()
    rep["observations"]["excursion_length"] = gam.tolist()
    return _finish(rep)


EXPERIMENTS = {
    "root-distance": experiment_root_distance,
    "subtree-sizes": experiment_subtree_sizes,
    "crt-distance": experiment_crt_distance,
    "uniform-graph": experiment_uniform_graph,
    "core-size": experiment_core_size,
    "shapes": experiment_shapes,
    "marchal-stability": experiment_marchal_stability,
    "er-chain": experiment_er_chain,
    "critical-er": experiment_critical_er,
    "glue-vs-graph": experiment_glue_vs_graph,
    "degree-model": experiment_degree_model,
}
