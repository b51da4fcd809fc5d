"""Matrix-free DG operators for the linear acoustic system.

The solution u = (v_1..v_d, p) satisfies du/dt + S u = 0 with
S u = ((1/rho) grad p, c^2 rho div v).  Discretization in a nodal
Gauss-Lobatto (GL) basis gives M dU/dt = -K U; this module applies K,
the inverse of M, and the element-local pointwise S without ever
forming a matrix.  The cell integrals use the averaged strong/weak
form

    r = 1/2 (w, S u)_K - 1/2 (S^T w, u)_K + <w, u_hat - 1/2 F_n(u)>_dK

whose two halves cancel for continuous exact fluxes; F_n(u) =
((p/rho) n, c^2 rho v.n) is the normal flux of the element's own
trace.  All integrals collapse into 1-D tensor kernel sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelCounter, apply_1d, collocation_derivative_matrix
from .mesh import GeometryCache, Material, Mesh
from .quadrature import (
    basis_change_matrices,
    gauss_rule,
    lagrange_matrix,
    projection_matrix,
)


@dataclass
class StateVector:
    """Element-contiguous coefficients of all d+1 solution fields.

    data has shape (n_elements, d+1, (k+1), ..., (k+1)) with the
    component order v_1..v_d, p and direction 0 on the last axis.
    Globally stored states are always in the GL basis; "g" appears only
    for element-local collocated scratch.
    """

    data: np.ndarray
    degree: int
    dim: int
    basis: str = "gl"

    def copy(self) -> "StateVector":
        return StateVector(self.data.copy(), self.degree, self.dim,
                           self.basis)

    @classmethod
    def zeros(cls, n_elements: int, degree: int, dim: int) -> "StateVector":
        shape = (n_elements, dim + 1) + (degree + 1,) * dim
        return cls(np.zeros(shape), degree, dim)


@dataclass(frozen=True)
class FluxParams:
    """HDG stabilization: tau defaults to 1/(c rho) per element.

    stabilization=False drops both jump-penalty terms, leaving the
    energy-conserving central part (used by the skew-symmetry tests).
    """

    tau: float | None = None
    stabilization: bool = True


def hdg_flux(minus, plus, n, c, rho, tau):
    """Numerical trace flux, directed outward from the minus side.

    minus/plus are (v, p) with v holding the d velocity components
    along the leading axis; n is the minus side's outward unit normal.
    Swapping sides (and hence flipping n) negates the result exactly.
    """
    v_m, p_m = minus
    v_p, p_p = plus
    tau = 0.0 if tau is None else float(tau)
    vn_m = np.sum(np.asarray(n) * np.asarray(v_m), axis=0)
    vn_p = np.sum(np.asarray(n) * np.asarray(v_p), axis=0)
    flux_v = (p_m + p_p) / (2.0 * rho) * np.asarray(n)
    flux_p = 0.5 * c ** 2 * rho * (vn_m + vn_p)
    if tau != 0.0:
        flux_v = flux_v + (vn_m - vn_p) / (2.0 * rho * tau) * np.asarray(n)
        flux_p = flux_p + 0.5 * c ** 2 * rho * tau * (p_m - p_p)
    return flux_v, flux_p


class AcousticOperator:
    """Sum-factorized K, M^{-1}, and local S on one mesh/degree pair."""

    def __init__(self, mesh: Mesh, geometry: GeometryCache,
                 material: Material, flux: FluxParams = FluxParams(),
                 counter: KernelCounter | None = None):
        if geometry.cartesian_flag.shape[0] != mesh.n_elements:
            raise ValueError("geometry was built for a different mesh")
        self.mesh = mesh
        self.geometry = geometry
        self.material = material
        self.flux = flux
        self.counter = counter if counter is not None else KernelCounter()
        self.k = geometry.degree
        self.d = mesh.d
        self.n_comp = mesh.d + 1

        k = self.k
        self.gl_to_g, self.g_to_gl = basis_change_matrices(k)
        gl_nodes = self.gl_to_g.nodes
        g_nodes = gauss_rule(k + 1).points
        self.d_gl = lagrange_matrix(gl_nodes, g_nodes, "derivative")
        self._d_co = {kq: collocation_derivative_matrix(kq)
                      for kq in geometry.vol}
        self._resize_cache: dict[tuple[int, int], np.ndarray] = {}

        shape_e = (mesh.n_elements,) + (1,) * self.d
        self.inv_rho = (1.0 / material.rho).reshape(shape_e)
        self.c2rho = (material.c ** 2 * material.rho).reshape(shape_e)
        tau = (1.0 / (material.c * material.rho) if flux.tau is None
               else np.full(mesh.n_elements, float(flux.tau)))
        if np.any(tau <= 0):
            raise ValueError("stabilization must be positive")
        self.tau = tau.reshape((mesh.n_elements,) + (1,) * (self.d - 1))

    # -- helpers ---------------------------------------------------------

    def _check(self, state: StateVector, basis: str = "gl") -> None:
        if state.basis != basis:
            raise ValueError(f"state must be in the {basis.upper()} basis")
        expect = (self.mesh.n_elements, self.n_comp) + (self.k + 1,) * self.d
        if state.data.shape != expect:
            raise ValueError(f"state shape {state.data.shape}, "
                             f"expected {expect}")

    def _sweep(self, matrix, arr, phase, directions=None,
               face=False) -> np.ndarray:
        units = arr.shape[0] * arr.shape[1]
        span = arr.ndim - 2 if directions is None else directions
        for direction in range(span) if np.isscalar(span) else span:
            arr = apply_1d(matrix, arr, direction, counter=self.counter,
                           phase=phase, units=units, face=face)
        return arr

    def new_state(self) -> StateVector:
        return StateVector.zeros(self.mesh.n_elements, self.k, self.d)

    # -- derivative operator K -------------------------------------------

    def apply_K(self, state: StateVector, parts: str = "both") -> StateVector:
        self._check(state)
        u = state.data
        d = self.d
        vol = self.geometry.vol[self.k]
        ji, jxw = vol.inv_jac, vol.jxw
        r = np.zeros_like(u)

        if parts in ("both", "cell"):
            u_q = self._sweep(self.gl_to_g, u, "stiffness")
            val = np.zeros_like(u)
            for m in range(d):
                g_m = u
                for direction in range(d):
                    mat = self.d_gl if direction == m else self.gl_to_g
                    g_m = apply_1d(mat, g_m, direction, counter=self.counter,
                                   phase="stiffness",
                                   units=u.shape[0] * u.shape[1])
                for i in range(d):
                    val[:, i] += ji[:, m, i] * g_m[:, d]
                    val[:, d] += ji[:, m, i] * g_m[:, i]
            for i in range(d):
                val[:, i] *= 0.5 * jxw * self.inv_rho
            val[:, d] *= 0.5 * jxw * self.c2rho
            r += self._sweep(self.gl_to_g.matrix.T, val, "stiffness")

            acc = np.zeros_like(u)
            gi = np.empty_like(u)
            d_co = self._d_co[self.k]
            for m in range(d):
                for i in range(d):
                    gi[:, i] = (-0.5 * jxw * self.inv_rho
                                * ji[:, m, i] * u_q[:, d])
                gi[:, d] = -0.5 * jxw * self.c2rho * sum(
                    ji[:, m, i] * u_q[:, i] for i in range(d))
                acc += apply_1d(d_co.matrix.T, gi, m, counter=self.counter,
                                phase="stiffness",
                                units=u.shape[0] * u.shape[1])
            r += self._sweep(self.gl_to_g.matrix.T, acc, "stiffness")

        if parts in ("both", "face"):
            self._add_face_terms(u, r)
        return StateVector(r, self.k, self.d)

    def _face_slice(self, m: int):
        idx = [slice(None)] * (2 + self.d)
        axis = 2 + (self.d - 1 - m)
        return idx, axis

    def _trace(self, u: np.ndarray, m: int, side: int) -> np.ndarray:
        """Face values at the face Gauss points, from the (k+1)^{d-1}
        face-node GL coefficients only."""
        idx, axis = self._face_slice(m)
        idx[axis] = -1 if side else 0
        return self._sweep(self.gl_to_g, u[tuple(idx)], "stiffness",
                           directions=self.d - 1, face=True)

    def _add_face_terms(self, u: np.ndarray, r: np.ndarray) -> None:
        d = self.d
        mesh = self.mesh
        traces = {(m, s): self._trace(u, m, s)
                  for m in range(d) for s in (0, 1)}
        for m in range(d):
            for s in (0, 1):
                own = traces[(m, s)]
                nbr = mesh.neighbors[:, m, s]
                other = traces[(m, 1 - s)][np.maximum(nbr, 0)]
                bnd = nbr < 0
                if np.any(bnd):
                    # sound-soft mirror: velocity kept, pressure negated
                    other[bnd, :d] = own[bnd, :d]
                    other[bnd, d] = -own[bnd, d]

                fg = self.geometry.face[(m, s)]
                n = fg.normal
                vn_own = sum(n[:, i] * own[:, i] for i in range(d))
                vn_oth = sum(n[:, i] * other[:, i] for i in range(d))
                # split-form integrand u_hat - F_n(own)/2, by component
                integ = np.empty_like(own)
                p_avg_half = 0.5 * self.inv_rho[..., 0] * other[:, d]
                p_pen = np.zeros(())
                v_pen = np.zeros(())
                if self.flux.stabilization:
                    v_pen = (0.5 * self.inv_rho[..., 0] / self.tau
                             * (vn_own - vn_oth))
                    p_pen = (0.5 * self.c2rho[..., 0] * self.tau
                             * (own[:, d] - other[:, d]))
                for i in range(d):
                    integ[:, i] = (p_avg_half + v_pen) * n[:, i]
                integ[:, d] = 0.5 * self.c2rho[..., 0] * vn_oth + p_pen
                integ *= fg.jxw[:, None]

                contrib = self._sweep(self.gl_to_g.matrix.T, integ,
                                      "stiffness", directions=d - 1,
                                      face=True)
                idx, axis = self._face_slice(m)
                idx[axis] = -1 if s else 0
                r[tuple(idx)] += contrib

    # -- mass matrix -------------------------------------------------------

    def apply_inverse_mass(self, state: StateVector) -> StateVector:
        """M^{-1} r via the 1-D basis-change factors: the GL->G change
        diagonalizes M as N^T diag(JxW) N."""
        self._check(state)
        jxw = self.geometry.vol[self.k].jxw
        t = self._sweep(self.g_to_gl.matrix.T, state.data, "mass")
        t /= jxw[:, None]
        out = self._sweep(self.g_to_gl, t, "mass")
        return StateVector(out, self.k, self.d)

    def apply_mass(self, state: StateVector) -> StateVector:
        self._check(state)
        jxw = self.geometry.vol[self.k].jxw
        t = self._sweep(self.gl_to_g, state.data, "mass")
        t *= jxw[:, None]
        out = self._sweep(self.gl_to_g.matrix.T, t, "mass")
        return StateVector(out, self.k, self.d)

    def rhs(self, state: StateVector) -> StateVector:
        """-M^{-1} K u, the method-of-lines right-hand side."""
        out = self.apply_inverse_mass(self.apply_K(state))
        np.negative(out.data, out=out.data)
        return out

    # -- element-local collocated operators (Taylor derivative loop) ------

    def to_gauss_values(self, data: np.ndarray) -> np.ndarray:
        return self._sweep(self.gl_to_g, data, "convert")

    def from_gauss_weighted(self, values: np.ndarray) -> np.ndarray:
        """N^T (JxW * values): converts a collocated accumulator into a
        mass-structure-weighted GL coefficient vector."""
        jxw = self.geometry.vol[self.k].jxw
        return self._sweep(self.gl_to_g.matrix.T, values * jxw[:, None],
                           "convert")

    def apply_local_S(self, values: np.ndarray, degree: int) -> np.ndarray:
        """Pointwise S on collocated Gauss values at the given degree."""
        if degree not in self.geometry.vol:
            raise ValueError(f"geometry has no degree-{degree} point set; "
                             f"precompute it for this reduction policy")
        d = self.d
        vol = self.geometry.vol[degree]
        ji = vol.inv_jac
        units = values.shape[0] * values.shape[1]
        d_co = self._d_co[degree]
        out = np.zeros_like(values)
        for m in range(d):
            g_m = apply_1d(d_co, values, m, counter=self.counter,
                           phase="tck", units=units)
            for i in range(d):
                out[:, i] += ji[:, m, i] * g_m[:, d]
                out[:, d] += ji[:, m, i] * g_m[:, i]
        for i in range(d):
            out[:, i] *= self.inv_rho
        out[:, d] *= self.c2rho
        return out

    def _resize_matrix(self, k_from: int, k_to: int) -> np.ndarray:
        key = (k_from, k_to)
        if key not in self._resize_cache:
            if k_to < k_from:
                mat = projection_matrix(k_from, k_to).matrix
            else:
                mat = lagrange_matrix(gauss_rule(k_from + 1).points,
                                      gauss_rule(k_to + 1).points).matrix
            self._resize_cache[key] = mat
        return self._resize_cache[key]

    def resize_values(self, values: np.ndarray, k_from: int,
                      k_to: int) -> np.ndarray:
        """L2-project down or interpolate up between collocated degrees."""
        if k_from == k_to:
            return values
        return self._sweep(self._resize_matrix(k_from, k_to), values,
                           "convert")
