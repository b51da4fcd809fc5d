"""Dense-matrix assembly of M, K, and local derivative operators.

Small-mesh oracle for validating the matrix-free kernels: everything
here goes through explicit Kronecker-product Vandermonde matrices and
naive quadrature sums, sharing no code with the sum-factorized sweeps.
Guarded to desk scale; never use in production runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .mesh import GeometryCache, Material, Mesh
from .operator import FluxParams, StateVector
from .quadrature import basis_change_matrices, gauss_rule, lagrange_matrix

MAX_DENSE_DOF = 20000


@dataclass(frozen=True)
class DenseOperators:
    """Dense M and K plus per-element local derivative matrices.

    local_d[e] is M_e^{-1} A_e where A_e collects the plain (not split)
    cell quadrature of test-function values against S applied to trial
    functions; it transcribes one element-local time derivative.
    """

    mass: np.ndarray
    stiffness: np.ndarray
    local_d: list[np.ndarray]
    degree: int
    dim: int
    n_nodes: int

    @property
    def n_dof(self) -> int:
        return self.mass.shape[0]


def state_to_vector(state: StateVector) -> np.ndarray:
    return state.data.reshape(state.data.shape[0], state.dim + 1, -1).ravel()

def vector_to_state(vec: np.ndarray, n_elements: int, degree: int,
                    dim: int) -> StateVector:
    shape = (n_elements, dim + 1) + (degree + 1,) * dim
    return StateVector(vec.reshape(shape).copy(), degree, dim)


def _kron_chain(mats_per_direction: list[np.ndarray]) -> np.ndarray:
    """Kronecker product with direction 0 fastest-varying."""
    return reduce(np.kron, mats_per_direction[::-1])


def _flux_coefficients(n, c, rho, tau, stabilization):
    """Pointwise linearization of u_hat - F_n(own)/2 in both traces.

    Returns (alpha_own, alpha_nbr): dicts (test comp, trial comp) ->
    coefficient array over face quadrature points.  Component d is
    pressure.
    """
    d = n.shape[-1]
    zeros = np.zeros(n.shape[:-1])
    pen = 1.0 / (2.0 * rho * tau) if stabilization else 0.0
    ppen = 0.5 * c ** 2 * rho * tau if stabilization else 0.0
    own: dict[tuple[int, int], np.ndarray] = {}
    nbr: dict[tuple[int, int], np.ndarray] = {}
    for i in range(d):
        for j in range(d):
            own[(i, j)] = pen * n[..., i] * n[..., j]
            nbr[(i, j)] = -pen * n[..., i] * n[..., j]
        own[(i, d)] = zeros
        nbr[(i, d)] = n[..., i] / (2.0 * rho)
        own[(d, i)] = zeros
        nbr[(d, i)] = 0.5 * c ** 2 * rho * n[..., i]
    own[(d, d)] = ppen + zeros
    nbr[(d, d)] = -ppen + zeros
    return own, nbr


def assemble_dense(mesh: Mesh, geometry: GeometryCache, material: Material,
                   flux: FluxParams = FluxParams()) -> DenseOperators:
    """Direct quadrature assembly of the full system matrices."""
    k = geometry.degree
    d = mesh.d
    n_el = mesh.n_elements
    n_comp = d + 1
    nn = (k + 1) ** d
    n_dof = n_el * n_comp * nn
    if n_el > 16 or k > 3 or n_dof > MAX_DENSE_DOF:
        raise ValueError(f"dense assembly refused: {n_el} elements, "
                         f"degree {k}, {n_dof} dof exceed the oracle guard")

    gl_to_g, _ = basis_change_matrices(k)
    gl_nodes = gl_to_g.nodes
    g_pts = gauss_rule(k + 1).points
    v1 = gl_to_g.matrix
    d1 = lagrange_matrix(gl_nodes, g_pts, "derivative").matrix
    vand = _kron_chain([v1] * d)
    vand_grad = [
        _kron_chain([d1 if j == m else v1 for j in range(d)])
        for m in range(d)
    ]
    endpoint = {s: lagrange_matrix(gl_nodes, np.array([float(s)])).matrix
                for s in (0, 1)}
    face_vand = {}
    for m in range(d):
        for s in (0, 1):
            face_vand[(m, s)] = _kron_chain(
                [endpoint[s] if j == m else v1 for j in range(d)])

    vol = geometry.vol[k]
    nq = nn
    ji = vol.inv_jac.reshape(n_el, d, d, nq).transpose(0, 3, 1, 2)
    jxw = vol.jxw.reshape(n_el, nq)

    mass = np.zeros((n_dof, n_dof))
    stiff = np.zeros((n_dof, n_dof))
    local_d = []

    def block(e: int, c: int) -> slice:
        start = (e * n_comp + c) * nn
        return slice(start, start + nn)

    tau_default = 1.0 / (material.c * material.rho)

    for e in range(n_el):
        c = material.c[e]
        rho = material.rho[e]
        w1 = jxw[e] / rho
        w2 = jxw[e] * c ** 2 * rho
        gx = [sum(ji[e, :, m, i][:, None] * vand_grad[m] for m in range(d))
              for i in range(d)]
        m_small = vand.T @ (jxw[e][:, None] * vand)
        a_e = np.zeros((n_comp * nn, n_comp * nn))
        for i in range(d):
            cell_vp = vand.T @ (w1[:, None] * gx[i])
            cell_pv = vand.T @ (w2[:, None] * gx[i])
            stiff[block(e, i), block(e, d)] += 0.5 * (
                cell_vp - gx[i].T @ (w1[:, None] * vand))
            stiff[block(e, d), block(e, i)] += 0.5 * (
                cell_pv - gx[i].T @ (w2[:, None] * vand))
            a_e[i * nn:(i + 1) * nn, d * nn:] = cell_vp
            a_e[d * nn:, i * nn:(i + 1) * nn] = cell_pv
        for comp in range(n_comp):
            mass[block(e, comp), block(e, comp)] = m_small
        local_d.append(np.kron(np.eye(n_comp), np.linalg.inv(m_small)) @ a_e)

        tau = tau_default[e] if flux.tau is None else float(flux.tau)
        for m in range(d):
            for s in (0, 1):
                fg = geometry.face[(m, s)]
                nqf = fg.jxw[e].size
                normal = fg.normal[e].reshape(d, nqf).T
                fjxw = fg.jxw[e].reshape(nqf)
                a_own, a_nbr = _flux_coefficients(normal, c, rho, tau,
                                                  flux.stabilization)
                vf = face_vand[(m, s)]
                nbr_e = mesh.neighbors[e, m, s]
                if nbr_e >= 0:
                    vf_nbr = face_vand[(m, 1 - s)]
                    for ct in range(n_comp):
                        for cu in range(n_comp):
                            coef = fjxw * a_own[(ct, cu)]
                            stiff[block(e, ct), block(e, cu)] += (
                                vf.T @ (coef[:, None] * vf))
                            coef = fjxw * a_nbr[(ct, cu)]
                            stiff[block(e, ct), block(nbr_e, cu)] += (
                                vf.T @ (coef[:, None] * vf_nbr))
                else:
                    # sound-soft: exterior trace is (v, -p) of the own trace
                    for ct in range(n_comp):
                        for cu in range(n_comp):
                            sign = -1.0 if cu == d else 1.0
                            coef = fjxw * (a_own[(ct, cu)]
                                           + sign * a_nbr[(ct, cu)])
                            stiff[block(e, ct), block(e, cu)] += (
                                vf.T @ (coef[:, None] * vf))

    return DenseOperators(mass=mass, stiffness=stiff, local_d=local_d,
                          degree=k, dim=d, n_nodes=nn)
