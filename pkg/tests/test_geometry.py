import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartkl.geometry import (
    BOX,
    ORTHANT,
    SIMPLEX,
    DomainError,
    ManifoldKind,
    RetractionOverflowError,
    bregman_divergence,
    get_manifold,
)

from .conftest import MANIFOLDS, random_point, random_tangent


def test_kind_lookup():
    assert get_manifold("box") is BOX
    assert get_manifold(ManifoldKind.SIMPLEX) is SIMPLEX
    assert ManifoldKind.ORTHANT.manifold is ORTHANT
    with pytest.raises(ValueError):
        get_manifold("sphere")


# ---- inverse metric and gradients ------------------------------------


def test_inverse_metric_examples():
    w = np.array([1.5, -2.0, 7.0])
    assert np.array_equal(ORTHANT.inverse_metric_apply(np.ones(3), w), w)
    assert np.allclose(SIMPLEX.inverse_metric_apply(np.full(3, 1 / 3), np.ones(3)), 0.0, atol=1e-16)
    assert np.array_equal(BOX.inverse_metric_apply([0.5, 0.5], [4.0, 8.0]), [1.0, 2.0])
    assert np.array_equal(ORTHANT.riemannian_gradient([2.0, 3.0], [1.0, 1.0]), [2.0, 3.0])


def test_simplex_gradient_is_tangent(rng):
    for _ in range(50):
        p = random_point("simplex", 6, rng)
        assert abs(SIMPLEX.riemannian_gradient(p, rng.normal(size=6)).sum()) < 1e-14


def test_simplex_replicator_matches_matrix(rng):
    p = random_point("simplex", 5, rng)
    w = rng.normal(size=5)
    ref = (np.diag(p) - np.outer(p, p)) @ w
    assert np.allclose(SIMPLEX.inverse_metric_apply(p, w), ref, rtol=1e-13, atol=1e-15)


def test_inner_examples(rng, kind):
    M = MANIFOLDS[kind]
    assert ORTHANT.inner([2.0, 2.0], [2.0, 2.0], [2.0, 2.0]) == 4.0
    x = random_point(kind, 5, rng)
    u, v = random_tangent(kind, x, rng), random_tangent(kind, x, rng)
    assert M.inner(x, u, v) == pytest.approx(M.inner(x, v, u), rel=1e-15)
    assert M.inner(x, v, v) > 0
    assert M.norm(x, v) == pytest.approx(math.sqrt(M.inner(x, v, v)))


def test_grad_sq_norm_is_metric_norm_of_gradient(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 6, rng)
    g = rng.normal(size=6)
    rg = M.riemannian_gradient(x, g)
    assert M.grad_sq_norm(x, g) == pytest.approx(M.inner(x, rg, rg), rel=1e-12)


def test_riemannian_gradient_directional_derivative(rng, kind):
    # d/dt f(R_x(t v)) at 0 equals <grad f, v>_x for f(x) = <c, x> + 0.5 |x|^2
    M = MANIFOLDS[kind]
    c = rng.normal(size=4)
    f = lambda x: c @ x + 0.5 * x @ x  # noqa: E731
    for _ in range(10):
        x = random_point(kind, 4, rng)
        v = random_tangent(kind, x, rng)
        h = 1e-6
        fd = (f(M.retract(x, v, h)) - f(M.retract(x, v, -h))) / (2 * h)
        rg = M.riemannian_gradient(x, c + x)
        assert fd == pytest.approx(M.inner(x, rg, v), rel=1e-6, abs=1e-8)


# ---- retractions -------------------------------------------------------


def test_retract_examples(kind, rng):
    M = MANIFOLDS[kind]
    x = random_point(kind, 5, rng)
    v = random_tangent(kind, x, rng)
    assert np.array_equal(M.retract(x, v, 0.0), x)
    assert np.allclose(ORTHANT.retract(np.ones(3), np.ones(3), 1.0), math.e, rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_retract_stays_in_domain(seed, t):
    rng = np.random.default_rng(seed)
    for kind, M in MANIFOLDS.items():
        x = random_point(kind, 4, rng)
        v = random_tangent(kind, x, rng)
        try:
            y = M.retract(x, v, t)
        except RetractionOverflowError:
            continue
        assert np.all(y >= 0)
        if kind == "simplex":
            assert abs(y.sum() - 1.0) <= 1e-12
        # strict interiority holds until exponentials under- or saturate
        spread = np.abs(t * v / (x * (1 - x) if kind == "box" else x))
        if spread.max() < 30:
            assert np.all(y > 0)
            if kind == "box":
                assert np.all(y < 1)


def test_retract_overflow_guard():
    with pytest.raises(RetractionOverflowError) as exc:
        ORTHANT.retract([1.0, 1.0], [0.0, 800.0], 1.0)
    assert exc.value.index == 1
    with pytest.raises(RetractionOverflowError):
        BOX.exp_shorthand([0.5], [701.0])
    with pytest.raises(RetractionOverflowError):
        SIMPLEX.exp_shorthand([0.5, 0.5], [np.nan, 0.0])


def test_simplex_tangent_projection_and_rejection():
    p = np.array([0.25, 0.75])
    y = SIMPLEX.retract(p, [1.0 + 5e-10, -1.0], 0.1)
    assert abs(y.sum() - 1) < 1e-15
    with pytest.raises(DomainError):
        SIMPLEX.retract(p, [1.0, 0.0], 0.1)


def test_exp_shorthand_examples(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 4, rng)
    assert np.allclose(M.exp_shorthand(x, np.zeros(4)), x, rtol=1e-15)
    assert BOX.exp_shorthand([0.5], [math.log(3)])[0] == pytest.approx(0.75, rel=1e-15)


def test_exp_shorthand_is_retract_of_inverse_metric(rng, kind):
    M = MANIFOLDS[kind]
    for _ in range(100):
        x = random_point(kind, 5, rng)
        g = rng.normal(size=5)
        a = M.exp_shorthand(x, g)
        b = M.retract(x, M.inverse_metric_apply(x, g), 1.0)
        assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_mirror_step_examples(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 4, rng)
    assert np.allclose(M.mirror_step(x, rng.normal(size=4), 1e-300), x, rtol=1e-15)
    assert ORTHANT.mirror_step([1.0], [1.0], 1.0)[0] == pytest.approx(math.exp(-1), rel=1e-15)
    with pytest.raises(ValueError):
        M.mirror_step(x, np.ones(4), 0.0)


def test_dual_coordinates_invert(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 6, rng)
    assert np.allclose(M.from_dual(M.to_dual(x)), x, rtol=1e-13)


# ---- transports ------------------------------------------------------


def test_transport_examples(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 5, rng)
    v = random_tangent(kind, x, rng)
    assert np.allclose(M.transport(x, np.zeros(5), v), v, rtol=1e-13, atol=1e-15)
    # u = (log 2, log 3) carries x = (1, 1) to x' = (2, 3)
    u = np.array([math.log(2.0), math.log(3.0)])
    assert np.allclose(ORTHANT.transport([1.0, 1.0], u, [1.0, 1.0]), [2.0, 3.0], rtol=1e-15)


def test_transport_gradient_matches_composition(rng, kind):
    M = MANIFOLDS[kind]
    for _ in range(50):
        x = random_point(kind, 5, rng)
        u = 0.3 * random_tangent(kind, x, rng)
        g = rng.normal(size=5)
        a = M.transport_gradient(x, u, g)
        b = M.transport(x, u, M.riemannian_gradient(x, g))
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
        assert np.allclose(M.transport_gradient(x, np.zeros(5), g), M.riemannian_gradient(x, g), rtol=1e-14)
    assert abs(SIMPLEX.transport_gradient(x if kind == "simplex" else np.full(5, 0.2), np.zeros(5), g).sum()) < 1e-14


def test_metric_transport_compatible_at_zero(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 4, rng)
    u, v = random_tangent(kind, x, rng), random_tangent(kind, x, rng)
    z = np.zeros(4)
    assert M.inner(x, M.transport(x, z, u), M.transport(x, z, v)) == pytest.approx(M.inner(x, u, v), rel=1e-12)


# ---- divergences -----------------------------------------------------


def test_divergence_examples(rng, kind):
    M = MANIFOLDS[kind]
    x = random_point(kind, 5, rng)
    assert M.bregman_divergence(x, x) == pytest.approx(0.0, abs=1e-15)
    assert bregman_divergence("orthant", [1.0, 2.0], [1.0, 1.0]) == pytest.approx(2 * math.log(2) - 1, rel=1e-14)
    assert bregman_divergence("box", [1.0, 1.0], [0.5, 0.5]) == pytest.approx(2 * math.log(2), rel=1e-14)


def test_divergence_boundary_rules():
    assert BOX.bregman_divergence([0.0, 1.0], [0.5, 0.5]) == pytest.approx(2 * math.log(2))
    assert SIMPLEX.bregman_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    with pytest.raises(DomainError):
        BOX.bregman_divergence([0.5], [1.0])
    with pytest.raises(DomainError):
        ORTHANT.bregman_divergence([1.0], [0.0])


def test_divergence_matches_kernel_definition(rng, kind):
    # D(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>
    phi = {
        "orthant": lambda x: np.sum(x * np.log(x) - x),
        "box": lambda x: np.sum(x * np.log(x) + (1 - x) * np.log(1 - x)),
        "simplex": lambda x: np.sum(x * np.log(x)),
    }[kind]
    M = MANIFOLDS[kind]
    for _ in range(20):
        x, y = random_point(kind, 5, rng), random_point(kind, 5, rng)
        ref = phi(x) - phi(y) - M.to_dual(y) @ (x - y)
        assert M.bregman_divergence(x, y) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_divergence_nonnegative_and_separating(seed):
    rng = np.random.default_rng(seed)
    for kind, M in MANIFOLDS.items():
        x, y = random_point(kind, 4, rng), random_point(kind, 4, rng)
        d = M.bregman_divergence(x, y)
        assert d >= 0
        if not np.allclose(x, y):
            assert d > 0
