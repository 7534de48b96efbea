import json
import math
from collections import Counter

import numpy as np
import pytest
from scipy import integrate, stats

from scalinglab._validation import ValidationError
from scalinglab.graph_core import core, enumerate_Gns, kernel
from scalinglab.linebreak import poisson_rate_t_arrivals
from scalinglab.stats import (
    EXPERIMENTS,
    ArrivalJointDensity,
    EmpiricalSample,
    arrival_marginal,
    chi_square,
    chi_square_2sample,
    core_size_density,
    experiment_er_chain,
    experiment_root_distance,
    experiment_shapes,
    experiment_uniform_graph,
    finite_core_law,
    ks_2sample,
    ks_test,
    rayleigh,
    status_for_p,
    total_length_density,
    total_variation,
)

from conftest import UNIT_ALPHA

DENSITIES = (
    [rayleigh()]
    + [arrival_marginal(i) for i in (1, 2, 3, 5)]
    + [core_size_density(s) for s in (1, 2, 3, 4)]
    + [total_length_density(i) for i in (1, 2, 3, 4)]
)


@pytest.mark.parametrize("dens", DENSITIES, ids=lambda d: d.name)
def test_densities_are_normalised(dens):
    assert dens.total_mass() == pytest.approx(1.0, abs=1e-9)
    for x in (0.3, 1.0, 2.2, 4.0):
        num, _ = integrate.quad(dens.pdf, 0, x)
        assert float(np.squeeze(dens.cdf(x))) == pytest.approx(num, abs=1e-8)


def test_joint_arrival_density_normalised():
    assert ArrivalJointDensity(1).total_mass() == pytest.approx(1.0)
    assert ArrivalJointDensity(2).total_mass() == pytest.approx(1.0, abs=1e-8)
    assert ArrivalJointDensity(3).pdf([1.0, 0.5, 2.0]) == 0.0


def test_rosenblatt_gives_uniforms(rng):
    x = poisson_rate_t_arrivals(4, 0.0, rng, size=20_000)
    u = ArrivalJointDensity(4).rosenblatt(x)
    for j in range(4):
        assert stats.kstest(u[:, j], "uniform").pvalue > UNIT_ALPHA
    assert abs(np.corrcoef(u.T)[0, 3]) < 0.03


def test_identities_between_laws():
    x = np.linspace(0.1, 5, 30)
    assert np.allclose(arrival_marginal(1).pdf(x), rayleigh().pdf(x))
    for i in (2, 3, 4):
        assert np.allclose(total_length_density(i).pdf(x), arrival_marginal(i).pdf(x))
    # core size with surplus 1 is half-normal
    assert np.allclose(core_size_density(1).pdf(x), 2 * stats.norm.pdf(x))


def test_gof_trivial_cases():
    res = chi_square([25, 25, 25, 25], [1, 1, 1, 1])
    assert res.statistic == 0 and res.p_value == 1.0 and res.dof == 3
    # expected 90, 5, 3, 2: the last two pool into one cell of 5
    res = chi_square([90, 5, 3, 2], [0.9, 0.05, 0.03, 0.02])
    assert res.detail["merged_cells"] == 3 and res.dof == 2
    # expected 98, 1, 1: the pool of 2 must absorb the large cell
    assert chi_square([100, 0, 0], [0.98, 0.01, 0.01]).detail["merged_cells"] == 1
    with pytest.raises(ValidationError):
        chi_square([1, 2], [1, 1, 1])
    x = (np.arange(1000) + 0.5) / 1000
    assert ks_test(x, stats.uniform.cdf).p_value > 0.99
    assert ks_2sample(x, x).p_value == 1.0
    assert chi_square_2sample(list("aabbc") * 30, list("aabbc") * 30).p_value == pytest.approx(1.0)
    assert total_variation("aab", "aab") == 0
    assert total_variation("aa", "bb") == 1
    with pytest.raises(ValidationError):
        EmpiricalSample([])


def test_status_levels():
    assert status_for_p(0.5) == "pass"
    assert status_for_p(0.005) == "flag"
    assert status_for_p(0.0005) == "fail"


def test_chi_square_is_calibrated(rng):
    p = np.array([0.5, 0.2, 0.15, 0.1, 0.04, 0.01])
    rejections = sum(chi_square(rng.multinomial(300, p), p).p_value <= 0.01 for _ in range(400))
    assert rejections / 400 <= 0.04


def test_ks_is_calibrated(rng):
    rejections = sum(ks_test(rng.rayleigh(size=500), rayleigh()).p_value <= 0.01 for _ in range(400))
    assert rejections / 400 <= 0.04
    rejections = sum(chi_square_2sample(rng.integers(0, 5, 400), rng.integers(0, 5, 400)).p_value <= 0.01 for _ in range(300))
    assert rejections / 300 <= 0.04


def test_tests_have_power(rng):
    assert ks_test(rng.rayleigh(scale=1.2, size=2000), rayleigh()).p_value < 1e-6
    assert chi_square(rng.multinomial(5000, [0.3, 0.7]), [0.5, 0.5]).p_value < 1e-6


def kernel_kind(g):
    K = kernel(g)
    if not K.edges:
        return "cycle"
    if K.n == 1:
        return "eight"
    return "theta" if K.mult(*sorted(K.vertices)) == 3 else "dumbbell"


@pytest.mark.parametrize("n, s", [(5, 1), (6, 1), (5, 2), (6, 2)])
def test_finite_core_law_matches_enumeration(n, s):
    graphs = enumerate_Gns(n, s)
    counts = Counter((kernel_kind(g), core(g).n) for g in graphs)
    law = finite_core_law(n, s)
    assert set(k for k, p in law.items() if p > 0) == set(counts)
    for key, c in counts.items():
        assert law[key] == pytest.approx(c / len(graphs), rel=1e-12)


def test_finite_kernel_law_tends_to_limit():
    gaps = []
    for n in (200, 2000, 20_000):
        law = finite_core_law(n, 2)
        theta = sum(p for (k, _), p in law.items() if k == "theta")
        gaps.append(abs(theta - 0.4))
    assert gaps[0] > gaps[1] > gaps[2]


SMALL_RUNS = {
    "root-distance": lambda seed: experiment_root_distance(n=20, draws=3000, seed=seed),
    "uniform-graph": lambda seed: experiment_uniform_graph(n=4, s=1, draws=3000, seed=seed),
    "er-chain": lambda seed: experiment_er_chain(n=5, draws=3000, seed=seed),
    "shapes": lambda seed: experiment_shapes(steps=2, draws=3000, seed=seed),
}


@pytest.mark.parametrize("name", sorted(SMALL_RUNS))
def test_reports_are_deterministic(name):
    a = json.dumps(SMALL_RUNS[name](3), sort_keys=True)
    b = json.dumps(SMALL_RUNS[name](3), sort_keys=True)
    c = json.dumps(SMALL_RUNS[name](4), sort_keys=True)
    assert a == b and a != c
    rep = json.loads(a)
    assert rep["experiment"] == name and rep["checks"]
    assert all(ch["status"] in ("pass", "flag", "fail") for ch in rep["checks"])


def test_experiment_registry():
    assert set(EXPERIMENTS) == {
        "root-distance", "subtree-sizes", "crt-distance", "uniform-graph", "core-size", "shapes",
        "marchal-stability", "er-chain", "critical-er", "glue-vs-graph", "degree-model",
    }
