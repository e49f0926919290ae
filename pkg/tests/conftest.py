import numpy as np
import pytest

from smartkl import BOX, ORTHANT, SIMPLEX
from smartkl.linops import NonnegativeSparseMatrix

MANIFOLDS = {"orthant": ORTHANT, "box": BOX, "simplex": SIMPLEX}


def random_point(kind, n, rng):
    if kind == "orthant":
        return rng.uniform(0.2, 3.0, n)
    if kind == "box":
        return rng.uniform(0.05, 0.95, n)
    p = rng.uniform(0.2, 1.0, n)
    return p / p.sum()


def random_tangent(kind, x, rng):
    v = rng.normal(size=x.size)
    if kind == "simplex":
        v -= v.mean()
    return v


def random_matrix(m, n, rng, density=0.5):
    a = rng.uniform(0.1, 2.0, (m, n)) * (rng.uniform(size=(m, n)) < density)
    for i in range(m):
        if not a[i].any():
            a[i, rng.integers(n)] = 1.0
    for j in range(n):
        if not a[:, j].any():
            a[rng.integers(m), j] = 1.0
    return NonnegativeSparseMatrix.from_dense(a)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(MANIFOLDS))
def kind(request):
    return request.param


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
