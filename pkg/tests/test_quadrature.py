"""Quadrature rules, Lagrange matrices, even-odd split, projections."""

import numpy as np
import pytest

from wavekernel.quadrature import (
    basis_change_matrices,
    even_odd_decompose,
    gauss_lobatto_rule,
    gauss_rule,
    lagrange_matrix,
    projection_matrix,
)

RNG = np.random.default_rng(20240611)


def test_gauss_two_point_values():
    rule = gauss_rule(2)
    s3 = np.sqrt(3.0)
    assert np.allclose(rule.points, [(3 - s3) / 6, (3 + s3) / 6], atol=1e-15)
    assert np.allclose(rule.weights, [0.5, 0.5], atol=1e-15)


def test_lobatto_three_point_values():
    rule = gauss_lobatto_rule(3)
    assert np.allclose(rule.points, [0.0, 0.5, 1.0], atol=1e-15)
    assert np.allclose(rule.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-15)


@pytest.mark.parametrize("n", range(1, 14))
def test_gauss_exactness(n):
    rule = gauss_rule(n)
    for p in range(2 * n):
        exact = 1.0 / (p + 1)
        assert abs(np.dot(rule.weights, rule.points ** p) - exact) < 1e-13


@pytest.mark.parametrize("n", range(2, 14))
def test_lobatto_exactness_and_endpoints(n):
    rule = gauss_lobatto_rule(n)
    assert rule.points[0] == 0.0 and rule.points[-1] == 1.0
    assert np.all(np.diff(rule.points) > 0)
    for p in range(max(1, 2 * n - 2)):
        exact = 1.0 / (p + 1)
        assert abs(np.dot(rule.weights, rule.points ** p) - exact) < 1e-13


@pytest.mark.parametrize("n", range(1, 14))
def test_weights_positive_and_normalized(n):
    for rule in (gauss_rule(n), gauss_lobatto_rule(max(n, 2))):
        assert np.all(rule.weights > 0)
        assert abs(rule.weights.sum() - 1.0) < 1e-14


def test_linear_basis_at_gauss_points():
    b = lagrange_matrix(np.array([0.0, 1.0]), gauss_rule(2).points)
    expect = np.array([[0.788675, 0.211325], [0.211325, 0.788675]])
    assert np.allclose(b.matrix, expect, atol=5e-7)


def test_cardinality_at_own_nodes():
    nodes = gauss_lobatto_rule(5).points
    b = lagrange_matrix(nodes, nodes)
    assert np.allclose(b.matrix, np.eye(5), atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 4, 7])
def test_partition_of_unity_and_derivative_rows(k):
    nodes = gauss_lobatto_rule(k + 1).points
    pts = gauss_rule(k + 1).points
    val = lagrange_matrix(nodes, pts, "value")
    der = lagrange_matrix(nodes, pts, "derivative")
    assert np.allclose(val.matrix.sum(axis=1), 1.0, atol=1e-13)
    assert np.allclose(der.matrix.sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_derivative_matrix_differentiates_monomials(k):
    nodes = gauss_lobatto_rule(k + 1).points
    pts = gauss_rule(k + 1).points
    der = lagrange_matrix(nodes, pts, "derivative").matrix
    for p in range(k + 1):
        got = der @ nodes ** p
        expect = p * pts ** (p - 1) if p > 0 else np.zeros_like(pts)
        assert np.allclose(got, expect, atol=1e-11)


@pytest.mark.parametrize("kind", ["value", "derivative"])
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 8])
def test_even_odd_matches_dense(kind, k):
    nodes = gauss_lobatto_rule(k + 1).points
    pts = gauss_rule(k + 1).points
    basis = lagrange_matrix(nodes, pts, kind)
    eo = even_odd_decompose(basis)
    x = RNG.standard_normal((k + 1, 7))
    dense = basis.matrix @ x
    assert np.max(np.abs(eo.apply(x, axis=0) - dense)) < 1e-12


def test_even_odd_on_tensor_axis():
    basis = lagrange_matrix(gauss_lobatto_rule(4).points,
                            gauss_rule(4).points, "derivative")
    eo = even_odd_decompose(basis)
    x = RNG.standard_normal((3, 4, 5))
    dense = np.moveaxis(np.moveaxis(x, 1, -1) @ basis.matrix.T, -1, 1)
    assert np.max(np.abs(eo.apply(x, axis=1) - dense)) < 1e-12


def test_even_odd_rejects_asymmetric_nodes():
    basis = lagrange_matrix(np.array([0.0, 0.3, 1.0]), gauss_rule(3).points)
    with pytest.raises(ValueError):
        even_odd_decompose(basis)


def test_projection_quadratic_to_linear():
    # L2-projecting x^2 onto degree-1 polynomials on [0,1] gives x - 1/6
    proj = projection_matrix(3, 1)
    x_from = gauss_rule(4).points
    x_to = gauss_rule(2).points
    got = proj.matrix @ x_from ** 2
    assert np.allclose(got, x_to - 1 / 6, atol=1e-13)


@pytest.mark.parametrize("k_from,k_to", [(2, 0), (4, 2), (5, 5), (8, 6)])
def test_projection_preserves_low_degree(k_from, k_to):
    proj = projection_matrix(k_from, k_to)
    x_from = gauss_rule(k_from + 1).points
    x_to = gauss_rule(k_to + 1).points
    for p in range(k_to + 1):
        got = proj.matrix @ x_from ** p
        assert np.allclose(got, x_to ** p, atol=1e-12)


def test_projection_is_orthogonal():
    # residual of projecting x^3 down to degree 1 is L2-orthogonal to P1
    proj = projection_matrix(3, 1)
    mix = gauss_rule(4)
    a_to = lagrange_matrix(gauss_rule(2).points, mix.points).matrix
    coarse = a_to @ (proj.matrix @ gauss_rule(4).points ** 3)
    resid = mix.points ** 3 - coarse
    for p in range(2):
        moment = np.dot(mix.weights, resid * mix.points ** p)
        assert abs(moment) < 1e-14


@pytest.mark.parametrize("k", range(1, 13))
def test_basis_roundtrip(k):
    gl_to_g, g_to_gl = basis_change_matrices(k)
    r1 = g_to_gl.matrix @ gl_to_g.matrix
    r2 = gl_to_g.matrix @ g_to_gl.matrix
    assert np.max(np.abs(r1 - np.eye(k + 1))) < 1e-13
    assert np.max(np.abs(r2 - np.eye(k + 1))) < 1e-13


def test_degree_cap_enforced():
    with pytest.raises(ValueError):
        basis_change_matrices(13)
