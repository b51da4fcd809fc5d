"""Reference-mode tests: PDE residual by complex-step differentiation,
norm identities, and the error-norm quadrature."""

import numpy as np
import pytest

from wavekernel.mesh import build_cartesian, deform, Material, precompute_geometry
from wavekernel.operator import StateVector
from wavekernel.analytic import (analytic_solution, exact_pressure_norm,
                                 initial_state, l2_pressure_error)


@pytest.mark.parametrize("d,m", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_mode_satisfies_acoustic_system(d, m):
    # complex-step derivatives are exact to roundoff for these entire
    # functions, so the residual tolerance can sit near machine precision
    c, rho = 1.3, 0.8
    h = 1e-25
    rng = np.random.default_rng(7 * d + m)
    x = rng.uniform(0.05, 0.95, size=(100, d))
    t = rng.uniform(0.0, 2.0)

    v_t = analytic_solution(x, t + 1j * h, m, c, rho)[0].imag / h
    p_t = analytic_solution(x, t + 1j * h, m, c, rho)[1].imag / h
    grad_p = np.empty((100, d))
    div_v = np.zeros(100)
    for i in range(d):
        xs = x.astype(complex)
        xs[:, i] += 1j * h
        v_i, p_i = analytic_solution(xs, t, m, c, rho)
        grad_p[:, i] = p_i.imag / h
        div_v += v_i[:, i].imag / h

    momentum = v_t + grad_p / rho
    pressure = p_t + rho * c ** 2 * div_v
    assert np.max(np.abs(momentum)) <= 1e-12
    assert np.max(np.abs(pressure)) <= 1e-12


def test_starts_from_rest():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 1.0, size=(50, 3))
    v, p = analytic_solution(x, 0.0, 2, 1.7, 1.2)
    assert np.all(v == 0.0)
    ref = np.prod(np.sin(2 * np.pi * x), axis=-1)
    assert np.max(np.abs(p - ref)) <= 1e-14


def test_pressure_vanishes_on_walls():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        x = rng.uniform(0.0, 1.0, size=(40, d))
        for i in range(d):
            for wall in (0.0, 1.0):
                xw = x.copy()
                xw[:, i] = wall
                _, p = analytic_solution(xw, 0.63, 1, 1.0, 1.0)
                assert np.max(np.abs(p)) <= 1e-13


@pytest.mark.parametrize("d", [2, 3])
def test_norm_formula_matches_quadrature(d):
    m, c, t = 2, 1.4, 0.31
    pts, wts = np.polynomial.legendre.leggauss(24)
    pts = 0.5 * (pts + 1.0)
    wts = 0.5 * wts
    grids = np.meshgrid(*([pts] * d), indexing="ij")
    x = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.ones(x.shape[0])
    for g in np.meshgrid(*([wts] * d), indexing="ij"):
        w = w * g.ravel()
    _, p = analytic_solution(x, t, m, c, 1.0)
    num = np.sqrt(np.sum(w * p ** 2))
    assert num == pytest.approx(exact_pressure_norm(t, m, c, d), abs=1e-12)


def test_interpolation_error_decreases_with_degree():
    mesh = build_cartesian(4, 2, "sound_soft")
    mat = Material.uniform(mesh)
    errs = []
    for k in range(1, 5):
        st = initial_state(mesh, k, mat)
        errs.append(l2_pressure_error(st, mesh, mat, 0.0))
    assert all(errs[i + 1] < 0.5 * errs[i] for i in range(3))
    assert errs[-1] < 1e-4


def test_zero_state_error_is_exact_norm():
    for t in (0.0, 0.37):
        mesh = build_cartesian(4, 2, "sound_soft")
        mat = Material.uniform(mesh, c=1.2)
        zero = StateVector.zeros(mesh.n_elements, 3, 2)
        err = l2_pressure_error(zero, mesh, mat, t)
        assert err == pytest.approx(exact_pressure_norm(t, 1, 1.2, 2),
                                    rel=1e-10)


def test_error_norm_on_deformed_mesh():
    # the curved-cell quadrature must still integrate the smooth mode;
    # extra points push the rule error below the checked tolerance
    mesh = deform(build_cartesian(4, 2, "sound_soft"), 0.05)
    mat = Material.uniform(mesh)
    zero = StateVector.zeros(mesh.n_elements, 3, 2)
    err = l2_pressure_error(zero, mesh, mat, 0.0, n_extra=6)
    assert err == pytest.approx(exact_pressure_norm(0.0, 1, 1.0, 2),
                                rel=1e-8)


def test_initial_state_nodal_values():
    mesh = deform(build_cartesian(2, 2, "sound_soft"), 0.06)
    mat = Material.uniform(mesh, c=1.5, rho=0.7)
    st = initial_state(mesh, 3, mat, m=2, t=0.4)
    from wavekernel.mesh import map_points
    from wavekernel.quadrature import gauss_lobatto_rule
    coords = map_points(mesh, gauss_lobatto_rule(4).points)
    v, p = analytic_solution(coords, 0.4, 2, 1.5, 0.7)
    assert np.max(np.abs(st.data[:, 2] - p)) <= 1e-14
    for i in range(2):
        assert np.max(np.abs(st.data[:, i] - v[..., i])) <= 1e-14
