import math

import numpy as np
import pytest

from smartkl import _fallback
from smartkl.linops import OpCounter
from smartkl.objective import KlProblem, bregman_gap, gradient, kl, objective
from smartkl.problems import toy_problem

from .conftest import MANIFOLDS, random_matrix, random_point


def problem(kind, rng, m=6, n=5):
    A = random_matrix(m, n, rng)
    return KlProblem(A, rng.uniform(0.5, 2.0, m), kind)


def test_kl_examples():
    y = np.array([0.3, 2.0, 5.0])
    assert kl(y, y) == 0.0
    assert kl([0.0], [1.0]) == 1.0
    assert kl([2.0], [1.0]) == pytest.approx(2 * math.log(2) - 1, rel=1e-15)


def test_kl_domain_errors():
    with pytest.raises(ValueError):
        kl([1.0], [0.0])
    with pytest.raises(ValueError):
        kl([-1e-10], [1.0])
    with pytest.raises(ValueError):
        kl([1.0, 2.0], [1.0])
    assert kl([-1e-15], [1.0]) == 1.0


def test_kl_matches_direct_formula(rng):
    for _ in range(50):
        y, yp = rng.uniform(0, 3, 8), rng.uniform(0.1, 3, 8)
        y[0] = 0.0
        terms = np.where(y > 0, y * np.log(np.where(y > 0, y, 1) / yp), 0.0) - y + yp
        assert kl(y, yp) == pytest.approx(terms.sum(), rel=1e-12)
        assert _fallback.kl_sum(y, yp) == pytest.approx(terms.sum(), rel=1e-12)


def test_kl_far_below_reference_is_finite():
    # y/yp below machine epsilon used to hit log1p(-1)
    assert kl([1e-300], [1.0]) == pytest.approx(1.0, rel=1e-12)
    assert _fallback.kl_sum(np.array([1e-300]), np.array([1.0])) == pytest.approx(1.0, rel=1e-12)


def test_toy_values():
    P = toy_problem().problem
    assert P.L == 0.75
    assert objective(P, [1.0, 1.0]) == 0.0
    assert objective(P, [0.5, 0.5]) == pytest.approx(0.5 * math.log(0.5) + 0.5, abs=1e-15)
    assert objective(P, [0.5, 0.5]) == pytest.approx(0.153426, abs=1e-6)
    assert np.allclose(gradient(P, [0.5, 0.5]), -math.log(2) * np.array([0.25, 0.75]), rtol=1e-15)
    assert np.array_equal(gradient(P, [1.0, 1.0]), [0.0, 0.0])


def test_problem_validation(rng):
    A = random_matrix(3, 2, rng)
    with pytest.raises(ValueError):
        KlProblem(A, [1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        KlProblem(A, [1.0, 1.0])
    P = KlProblem(A, [1.0, 2.0, 3.0], "simplex")
    assert P.kind.value == "simplex" and P.manifold is MANIFOLDS["simplex"]
    with pytest.raises(ValueError):
        P.b[0] = 5.0


def test_matvec_accounting(rng):
    P = problem("box", rng)
    x = np.full(5, 0.5)
    c = OpCounter()
    P.objective(x, c)
    assert c.matvec_count == 1
    P.gradient(x, c)
    assert c.matvec_count == 3
    P.value_and_gradient(x, c)
    assert c.matvec_count == 5


def test_gradient_finite_differences(rng, kind):
    P = problem(kind, rng)
    for _ in range(10):
        x = random_point(kind, 5, rng)
        g = P.gradient(x)
        h = 1e-6
        fd = np.array([(P.objective(x + h * e) - P.objective(x - h * e)) / (2 * h) for e in np.eye(5)])
        assert np.max(np.abs(g - fd)) <= 1e-6 * (1 + np.max(np.abs(g)))


def test_bregman_gap_definition(rng, kind):
    P = problem(kind, rng)
    for _ in range(20):
        x, y = random_point(kind, 5, rng), random_point(kind, 5, rng)
        ref = P.objective(x) - P.objective(y) - P.gradient(y) @ (x - y)
        assert bregman_gap(P, x, y) == pytest.approx(ref, rel=1e-10, abs=1e-13)
        assert bregman_gap(P, x, x) == 0.0


def test_relative_smoothness_samples(rng, kind):
    M = MANIFOLDS[kind]
    for _ in range(100):
        m, n = rng.integers(1, 12, size=2)
        A = random_matrix(m, n, rng)
        P = KlProblem(A, np.ones(m), kind)
        x, y = random_point(kind, n, rng), random_point(kind, n, rng)
        assert P.bregman_gap(x, y) <= A.one_norm() * M.bregman_divergence(x, y) + 1e-12


def test_convexity_samples(rng, kind):
    P = problem(kind, rng)
    for _ in range(50):
        x, y = random_point(kind, 5, rng), random_point(kind, 5, rng)
        lam = rng.uniform()
        lhs = P.objective(lam * x + (1 - lam) * y)
        assert lhs <= lam * P.objective(x) + (1 - lam) * P.objective(y) + 1e-12
