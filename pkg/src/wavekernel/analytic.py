"""Standing-wave reference solution and error norms.

The pressure-release (sound-soft) cavity [0,1]^d supports the mode

    p(x, t)   = cos(w t) prod_i sin(m pi x_i),      w = c m pi sqrt(d)
    v_i(x, t) = -(m pi)/(rho w) sin(w t) cos(m pi x_i)
                 prod_{j != i} sin(m pi x_j)

which starts from rest (v = 0 at t = 0).  Error integrals use a finer
Gauss rule than the operator so the quadrature error stays below the
discretization error being measured.
"""

from __future__ import annotations

import numpy as np

from .kernels import apply_1d
from .mesh import Mesh, Material, _jacobians, map_points
from .operator import StateVector
from .quadrature import gauss_lobatto_rule, gauss_rule, lagrange_matrix


def analytic_solution(coords: np.ndarray, t: float, m: int, c: float,
                      rho: float):
    """Mode fields at given points; coords shape (..., d)."""
    d = coords.shape[-1]
    omega = c * m * np.pi * np.sqrt(d)
    sines = np.sin(m * np.pi * coords)
    cosines = np.cos(m * np.pi * coords)
    p = np.cos(omega * t) * np.prod(sines, axis=-1)
    amp = -(m * np.pi) / (rho * omega) * np.sin(omega * t)
    comps = []
    for i in range(d):
        prod = amp * np.ones(coords.shape[:-1], dtype=sines.dtype)
        for j in range(d):
            prod = prod * (cosines[..., j] if j == i else sines[..., j])
        comps.append(prod)
    return np.stack(comps, axis=-1), p


def exact_pressure_norm(t: float, m: int, c: float, d: int) -> float:
    """L2 norm of the mode pressure over the unit cube."""
    omega = c * m * np.pi * np.sqrt(d)
    return abs(np.cos(omega * t)) * 0.5 ** (d / 2.0)


def initial_state(mesh: Mesh, degree: int, material: Material,
                  m: int = 1, t: float = 0.0) -> StateVector:
    """Interpolate the mode at the GL nodes of every element.

    Assumes uniform material (the mode is only exact for one medium).
    """
    c = float(material.c[0])
    rho = float(material.rho[0])
    nodes = gauss_lobatto_rule(degree + 1).points
    coords = map_points(mesh, nodes)
    v, p = analytic_solution(coords, t, m, c, rho)
    state = StateVector.zeros(mesh.n_elements, degree, mesh.d)
    for i in range(mesh.d):
        state.data[:, i] = v[..., i]
    state.data[:, mesh.d] = p
    return state


def l2_pressure_error(state: StateVector, mesh: Mesh, material: Material,
                      t: float, m: int = 1, n_extra: int = 2) -> float:
    """L2 distance of the pressure field from the mode at time t.

    Evaluated on the (k+1+n_extra)-point Gauss rule per direction.
    """
    k = state.degree
    d = state.dim
    rule = gauss_rule(k + 1 + n_extra)
    gl_nodes = gauss_lobatto_rule(k + 1).points
    interp = lagrange_matrix(gl_nodes, rule.points).matrix

    p_h = state.data[:, d]
    for j in range(d):
        p_h = apply_1d(interp, p_h, j)

    coords = map_points(mesh, rule.points)
    _, p_ref = analytic_solution(coords, t, m, float(material.c[0]),
                                 float(material.rho[0]))

    jac = _jacobians(mesh, [rule.points] * d)
    det = np.linalg.det(jac)
    w = np.ones(())
    for _ in range(d):
        w = np.multiply.outer(w, rule.weights)
    jxw = (det * w.ravel()).reshape(det.shape[0:1] + (rule.n,) * d)

    return float(np.sqrt(np.sum(jxw * (p_h - p_ref) ** 2)))
