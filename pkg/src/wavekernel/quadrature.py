"""One-dimensional quadrature rules and nodal basis matrices.

Everything lives on the reference interval [0, 1].  Tensor-product
quantities are built from these 1-D objects by the kernel layer; this
module deliberately knows nothing about meshes or states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Largest supported polynomial degree for basis/tensor machinery.  The
# dense inverses and even-odd splits are only validated up to here.
MAX_DEGREE = 12

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class QuadRule1D:
    """Points and weights of a 1-D quadrature rule on [0, 1]."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class BasisMatrix1D:
    """Values or derivatives of a nodal Lagrange basis at evaluation points.

    ``matrix[i, j]`` is ``L_j(x_i)`` (kind "value") or ``L_j'(x_i)``
    (kind "derivative") for the basis anchored at ``nodes`` evaluated at
    ``eval_points``.
    """

    matrix: np.ndarray
    nodes: np.ndarray
    eval_points: np.ndarray
    kind: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class EvenOddMatrix:
    """Even-odd split of a basis matrix between symmetric point sets.

    For point sets symmetric about 1/2 the matrix satisfies
    ``M[m-1-i, n-1-j] = sigma * M[i, j]`` with sigma = +1 for value
    matrices and -1 for derivative matrices.  Splitting input vectors
    into mirror-symmetric and mirror-antisymmetric halves then halves
    the multiplication work.
    """

    even_block: np.ndarray
    odd_block: np.ndarray
    sigma: int
    shape: tuple[int, int]
    dense: np.ndarray = field(repr=False)

    def apply(self, arr: np.ndarray, axis: int = 0) -> np.ndarray:
        """Multiply along ``axis`` using the even-odd blocks only."""
        m, n = self.shape
        x = np.moveaxis(arr, axis, 0)
        lead = x.shape[0]
        if lead != n:
            raise ValueError(f"axis length {lead} != matrix columns {n}")
        n_lo = (n + 1) // 2
        n_hi = n // 2
        rev = x[::-1]
        e = 0.5 * (x[:n_lo] + rev[:n_lo])
        if n % 2:
            e[n_lo - 1] = x[n_lo - 1]
        o = 0.5 * (x[:n_hi] - rev[:n_hi])
        if self.sigma > 0:
            y_sym = np.tensordot(self.even_block, e, axes=(1, 0))
            y_anti = np.tensordot(self.odd_block, o, axes=(1, 0))
        else:
            # derivative kind swaps symmetry classes
            y_anti = np.tensordot(self.even_block, e, axes=(1, 0))
            y_sym = np.tensordot(self.odd_block, o, axes=(1, 0))
        m_lo = (m + 1) // 2
        m_hi = m // 2
        y = np.empty((m,) + x.shape[1:], dtype=arr.dtype)
        y[:m_hi] = y_sym[:m_hi] + y_anti[:m_hi]
        y[m - m_hi:] = (y_sym[:m_hi] - y_anti[:m_hi])[::-1]
        if m % 2:
            y[m_hi] = y_sym[m_lo - 1]
        return np.moveaxis(y, 0, axis)


@dataclass(frozen=True)
class ProjectionMatrix1D:
    """L2 projection between Gauss-collocated Lagrange spaces."""

    matrix: np.ndarray
    degree_from: int
    degree_to: int


def gauss_rule(n: int) -> QuadRule1D:
    """n-point Gauss-Legendre rule on [0, 1], exact through degree 2n-1."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadRule1D(points=0.5 * (x + 1.0), weights=0.5 * w)


def gauss_lobatto_rule(n: int) -> QuadRule1D:
    """n-point Gauss-Lobatto rule on [0, 1] (n >= 2), exact through 2n-3.

    Interior points are found by Newton iteration on the derivative of
    the Legendre polynomial, started from Chebyshev-Lobatto points.
    """
    if n < 2:
        raise ValueError("Gauss-Lobatto needs n >= 2")
    if n == 2:
        return QuadRule1D(points=np.array([0.0, 1.0]),
                          weights=np.array([0.5, 0.5]))

    # work on [-1, 1]; x holds the current iterate, descending order
    x = np.cos(np.pi * np.arange(n) / (n - 1))
    p = np.zeros((n, n))
    for _ in range(_NEWTON_MAXIT):
        p[:, 0] = 1.0
        p[:, 1] = x
        for k in range(2, n):
            p[:, k] = ((2 * k - 1) * x * p[:, k - 1]
                       - (k - 1) * p[:, k - 2]) / k
        dx = (x * p[:, n - 1] - p[:, n - 2]) / (n * p[:, n - 1])
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise RuntimeError("Lobatto Newton iteration did not converge")

    p[:, 0] = 1.0
    p[:, 1] = x
    for k in range(2, n):
        p[:, k] = ((2 * k - 1) * x * p[:, k - 1] - (k - 1) * p[:, k - 2]) / k
    w = 2.0 / (n * (n - 1) * p[:, n - 1] ** 2)
    pts = 0.5 * (x[::-1] + 1.0)
    pts[0] = 0.0
    pts[-1] = 1.0
    return QuadRule1D(points=pts, weights=0.5 * w[::-1])


def lagrange_matrix(nodes: np.ndarray, eval_points: np.ndarray,
                    kind: str = "value") -> BasisMatrix1D:
    """Tabulate Lagrange basis values or derivatives at given points.

    Uses the singularity-free product/sum-of-products formulas, so
    evaluation points may coincide with nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    pts = np.asarray(eval_points, dtype=float)
    nn = nodes.shape[0]
    if nn < 1:
        raise ValueError("empty node set")
    if kind not in ("value", "derivative"):
        raise ValueError(f"unknown kind {kind!r}")
    mat = np.empty((pts.shape[0], nn))
    for j in range(nn):
        others = np.delete(nodes, j)
        denom = np.prod(nodes[j] - others)
        if kind == "value":
            num = np.prod(pts[:, None] - others[None, :], axis=1)
            mat[:, j] = num / denom
        else:
            acc = np.zeros_like(pts)
            for i in range(others.shape[0]):
                rest = np.delete(others, i)
                acc += np.prod(pts[:, None] - rest[None, :], axis=1)
            mat[:, j] = acc / denom
    return BasisMatrix1D(matrix=mat, nodes=nodes, eval_points=pts, kind=kind)


def _is_symmetric_set(pts: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(pts + pts[::-1] - 1.0)) < tol)


def even_odd_decompose(basis: BasisMatrix1D) -> EvenOddMatrix:
    """Split a basis matrix into its even and odd blocks.

    Requires both point sets symmetric about 1/2; value matrices get
    sigma=+1, derivative matrices sigma=-1.
    """
    if not (_is_symmetric_set(basis.nodes)
            and _is_symmetric_set(basis.eval_points)):
        raise ValueError("point sets are not symmetric about 1/2")
    m, n = basis.shape
    sigma = 1 if basis.kind == "value" else -1
    mat = basis.matrix
    sym_err = np.max(np.abs(mat[::-1, ::-1] - sigma * mat))
    if sym_err > 1e-10:
        raise ValueError(f"matrix lacks the expected mirror symmetry "
                         f"(defect {sym_err:.2e})")
    n_lo = (n + 1) // 2
    n_hi = n // 2
    rows_e = (m + 1) // 2 if sigma > 0 else m // 2
    rows_o = m // 2 if sigma > 0 else (m + 1) // 2
    even = np.empty((rows_e, n_lo))
    odd = np.empty((rows_o, n_hi))
    even[:, :n_hi] = mat[:rows_e, :n_hi] + mat[:rows_e, ::-1][:, :n_hi]
    if n % 2:
        even[:, n_lo - 1] = mat[:rows_e, n_hi]
    odd[:, :] = mat[:rows_o, :n_hi] - mat[:rows_o, ::-1][:, :n_hi]
    return EvenOddMatrix(even_block=even, odd_block=odd, sigma=sigma,
                         shape=(m, n), dense=mat)


def projection_matrix(k_from: int, k_to: int) -> ProjectionMatrix1D:
    """L2 projection from degree k_from to k_to Gauss-collocated bases.

    Assembled from exact Gauss quadrature of the mixed mass integrals;
    reproduces polynomials of degree <= k_to exactly.
    """
    if not 0 <= k_to <= k_from:
        raise ValueError("need 0 <= k_to <= k_from")
    rule_to = gauss_rule(k_to + 1)
    rule_from = gauss_rule(k_from + 1)
    mix = gauss_rule(k_from + 1)
    a_to = lagrange_matrix(rule_to.points, mix.points).matrix
    a_from = lagrange_matrix(rule_from.points, mix.points).matrix
    mixed = a_to.T @ (mix.weights[:, None] * a_from)
    mat = mixed / rule_to.weights[:, None]
    return ProjectionMatrix1D(matrix=mat, degree_from=k_from, degree_to=k_to)


def basis_change_matrices(k: int) -> tuple[BasisMatrix1D, BasisMatrix1D]:
    """Value matrices between Lobatto-nodal and Gauss-nodal bases.

    Returns (gl_to_g, g_to_gl); the two interpolations are exact
    inverses on polynomials of degree <= k.
    """
    if not 0 <= k <= MAX_DEGREE:
        raise ValueError(f"degree {k} outside supported range 0..{MAX_DEGREE}")
    if k == 0:
        one = np.ones((1, 1))
        pt = gauss_rule(1).points
        b = BasisMatrix1D(one, pt, pt, "value")
        return b, b
    gl = gauss_lobatto_rule(k + 1).points
    g = gauss_rule(k + 1).points
    return lagrange_matrix(gl, g), lagrange_matrix(g, gl)
