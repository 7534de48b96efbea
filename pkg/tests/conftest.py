import numpy as np
import pytest
from hypothesis import strategies as st

from scalinglab.tree_core import LabelledRootedTree

FIG2_WORD = "4 8 3 8 9 3 5 8 10"
FIG2_EDGES = {(4, 8), (8, 3), (3, 1), (8, 9), (9, 2), (3, 5), (5, 6), (8, 10), (10, 7)}


def random_labelled_tree(n, rng):
    """Random recursive tree on shuffled labels; independent of the coding code."""
    parent = np.full(n, -1, dtype=np.int64)
    for v in range(1, n):
        parent[v] = rng.integers(0, v)
    perm = rng.permutation(n)
    relabelled = np.full(n, -1, dtype=np.int64)
    relabelled[perm[1:]] = perm[parent[1:]]
    return LabelledRootedTree(relabelled)


@st.composite
def labelled_trees(draw, min_n=1, max_n=40):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_labelled_tree(n, np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Level for goodness-of-fit checks in unit tests. With several dozen such
# checks per run, 0.01 would produce a spurious red roughly every other run.
UNIT_ALPHA = 1e-3


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: dict = {}


def record(number: int, ok: bool, text: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
