import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmhf.energy import interpolate
from hmhf.mesh import (
    FEFunction,
    ReferenceElement,
    build_mesh,
    evaluate,
    evaluate_derivative,
    fe_space,
    gauss_rule,
)


def test_build_mesh_vertices():
    mesh = build_mesh(4)
    np.testing.assert_array_equal(mesh.vertices, [0.0, 0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize("n", [1, 0, -3, 2.5])
def test_build_mesh_rejects_degenerate(n):
    with pytest.raises(ValueError):
        build_mesh(n)


def test_finest_table_level():
    assert build_mesh(2**5).h == 0.03125


@pytest.mark.parametrize("n", [2, 3, 7, 64, 1000, 2**14])
def test_mesh_invariants(n):
    mesh = build_mesh(n)
    v = mesh.vertices
    assert v[0] == 0.0 and v[-1] == 1.0
    assert np.all(np.diff(v) > 0)
    assert abs(mesh.h * mesh.n_cells - 1.0) < 1e-14


def test_gauss_midpoint():
    rule = gauss_rule(1)
    assert rule.points[0] == pytest.approx(0.5, abs=1e-15)
    assert rule.weights[0] == pytest.approx(1.0, abs=1e-15)


def test_gauss_two_point_cubic():
    rule = gauss_rule(2)
    assert np.dot(rule.weights, rule.points**3) == pytest.approx(0.25, abs=1e-16)


def test_gauss_five_point_degree_nine():
    rule = gauss_rule(5)
    assert abs(np.dot(rule.weights, rule.points**9) - 0.1) < 1e-15


@pytest.mark.parametrize("n", [0, 17])
def test_gauss_range(n):
    with pytest.raises(ValueError):
        gauss_rule(n)


@pytest.mark.parametrize("n", range(1, 17))
def test_gauss_exactness_and_interior(n):
    rule = gauss_rule(n)
    assert rule.order == 2 * n - 1
    assert abs(rule.weights.sum() - 1.0) < 1e-14
    assert np.all(rule.weights > 0)
    assert np.all((rule.points > 0) & (rule.points < 1))
    for p in range(2 * n):
        exact = 1.0 / (p + 1)
        assert abs(np.dot(rule.weights, rule.points**p) - exact) / exact < 1e-13


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_reference_element(k):
    el = ReferenceElement(k)
    np.testing.assert_allclose(el.values(el.nodes), np.eye(k + 1), atol=1e-12)
    x = np.random.default_rng(k).uniform(0, 1, 50)
    assert np.max(np.abs(el.values(x).sum(axis=1) - 1.0)) < 1e-12
    assert np.max(np.abs(el.derivatives(x).sum(axis=1))) < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_reference_derivatives_match_differences(k):
    el = ReferenceElement(k)
    x = np.linspace(0.05, 0.95, 7)
    d = 1e-6
    fd = (el.values(x + d) - el.values(x - d)) / (2 * d)
    np.testing.assert_allclose(el.derivatives(x), fd, atol=1e-7)


@pytest.mark.parametrize("k,n", [(1, 4), (2, 4), (1, 7), (2, 9), (3, 5)])
def test_space_dofs(k, n):
    space = fe_space(n, k)
    assert space.n_dofs_total == k * n + 1
    assert space.free_dofs.size == k * n - 1
    counts = np.bincount(space.dof_map.ravel())
    assert counts[0] == counts[-1] == 1
    assert counts.max() <= 2
    np.testing.assert_allclose(space.dof_coordinates[space.dof_map[:, 0]], space.mesh.vertices[:-1])


def test_evaluate_zero():
    space = fe_space(8, 2)
    assert evaluate(space.zero(), 0.37) == 0.0
    assert evaluate_derivative(space.zero(), 0.37) == 0.0


@pytest.mark.parametrize("n", [2, 5, 16])
def test_p1_reproduces_linear(n):
    u = interpolate(lambda r: r, fe_space(n, 1))
    assert evaluate(u, 0.3) == pytest.approx(0.3, abs=1e-15)
    r = np.linspace(0.01, 0.99, 23)
    np.testing.assert_allclose(evaluate_derivative(u, r), 1.0, atol=1e-12)


def test_p2_reproduces_quadratic():
    u = interpolate(lambda r: r * r, fe_space(7, 2))
    assert abs(evaluate(u, 1 / 3) - 1 / 9) < 1e-14
    assert abs(evaluate_derivative(u, 0.5) - 1.0) < 1e-13


def test_evaluate_domain():
    u = fe_space(4, 1).zero()
    for r in (-1e-9, 1.0 + 1e-9, np.nan):
        with pytest.raises(ValueError):
            evaluate(u, r)


def test_evaluate_derivative_left_convention():
    space = fe_space(4, 1)
    u = FEFunction(space, np.array([0.0, 1.0, 0.0, 0.0, 0.0]))
    assert evaluate_derivative(u, 0.25) == pytest.approx(4.0)
    assert evaluate_derivative(u, 0.25 + 1e-12) == pytest.approx(-4.0)
    assert evaluate_derivative(u, 0.0) == pytest.approx(4.0)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_nodal_reproduction_of_polynomials(k):
    rng = np.random.default_rng(10 + k)
    c = rng.normal(size=k + 1)
    p = np.polynomial.Polynomial(c)
    u = interpolate(p, fe_space(5, k))
    r = rng.uniform(0, 1, 100)
    assert np.max(np.abs(evaluate(u, r) - p(r))) < 1e-12
    assert np.max(np.abs(evaluate_derivative(u, r) - p.deriv()(r))) < 1e-10


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(1, 4),
    n=st.integers(2, 40),
    seed=st.integers(0, 2**32 - 1),
)
def test_continuity_at_vertices(k, n, seed):
    space = fe_space(n, k)
    coeffs = np.random.default_rng(seed).uniform(-1, 1, space.n_dofs_total)
    el = space.element
    local = coeffs[space.dof_map]
    right_end = local @ el.values(np.array([1.0]))[0]
    left_end = local @ el.values(np.array([0.0]))[0]
    assert np.max(np.abs(right_end[:-1] - left_end[1:])) < 1e-13
