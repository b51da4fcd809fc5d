"""Matrix-free operators against the dense quadrature oracle."""

import numpy as np
import pytest

from wavekernel.dense_oracle import (
    assemble_dense,
    state_to_vector,
    vector_to_state,
)
from wavekernel.kernels import KernelCounter, kernel_call_table
from wavekernel.mesh import Material, build_cartesian, deform, precompute_geometry
from wavekernel.operator import (
    AcousticOperator,
    FluxParams,
    StateVector,
    hdg_flux,
)

RNG = np.random.default_rng(52297701)


def make_setup(n, d, k, boundary="sound_soft", amplitude=None, c=1.0,
               rho=1.0, flux=FluxParams(), counter=None):
    mesh = build_cartesian(n, d, boundary_kind=boundary)
    if amplitude is None:
        amplitude = 0.05 / max(mesh.n_per_dim)
    if amplitude:
        mesh = deform(mesh, amplitude)
    geo = precompute_geometry(mesh, k)
    mat = Material.uniform(mesh, c=c, rho=rho)
    op = AcousticOperator(mesh, geo, mat, flux=flux, counter=counter)
    return mesh, geo, mat, op


def random_state(op, scale=1.0):
    shape = (op.mesh.n_elements, op.n_comp) + (op.k + 1,) * op.d
    return StateVector(scale * RNG.standard_normal(shape), op.k, op.d)


# -- HDG flux ------------------------------------------------------------

def test_hdg_flux_continuous_trace():
    n = np.array([0.6, 0.8])
    v = np.array([0.3, -0.2])
    p, c, rho = 1.7, 2.0, 3.0
    fv, fp = hdg_flux((v, p), (v, p), n, c, rho, tau=1.0 / (c * rho))
    assert np.allclose(fv, p / rho * n, atol=1e-14)
    assert np.isclose(fp, c ** 2 * rho * np.dot(n, v), atol=1e-14)


def test_hdg_flux_zero_state():
    n = np.array([1.0, 0.0, 0.0])
    fv, fp = hdg_flux((np.zeros(3), 0.0), (np.zeros(3), 0.0), n, 1.0, 1.0, 1.0)
    assert np.all(fv == 0) and fp == 0


def test_hdg_flux_pressure_jump_example():
    c, rho = 1.3, 0.7
    n = np.array([0.0, 1.0])
    fv, fp = hdg_flux((np.zeros(2), 1.0), (np.zeros(2), 0.0), n, c, rho,
                      tau=1.0 / (c * rho))
    assert np.allclose(fv, n / (2 * rho), atol=1e-14)
    assert np.isclose(fp, c / 2, atol=1e-14)


def test_hdg_flux_antisymmetric_under_side_swap():
    c, rho, tau = 1.4, 0.9, 1.0 / (1.4 * 0.9)
    n = np.array([0.48, -0.6, 0.64])
    n = n / np.linalg.norm(n)
    vm, vp = RNG.standard_normal((2, 3))
    pm, pp = RNG.standard_normal(2)
    f1 = hdg_flux((vm, pm), (vp, pp), n, c, rho, tau)
    f2 = hdg_flux((vp, pp), (vm, pm), -n, c, rho, tau)
    assert np.allclose(f1[0], -f2[0], atol=1e-14)
    assert np.isclose(f1[1], -f2[1], atol=1e-14)


# -- apply_K -------------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3])
def test_free_stream_on_periodic_deformed_mesh(d):
    _, _, _, op = make_setup(2, d, 3, boundary="periodic")
    u = op.new_state()
    u.data[:, :d] = 0.4
    u.data[:, d] = -1.3
    r = op.apply_K(u)
    assert np.max(np.abs(r.data)) < 1e-11


def test_apply_K_requires_gl_basis():
    _, _, _, op = make_setup(2, 2, 2)
    u = random_state(op)
    u.basis = "g"
    with pytest.raises(ValueError):
        op.apply_K(u)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_single_element_matches_dense(k):
    mesh, geo, mat, op = make_setup(1, 2, k, amplitude=0.0)
    dense = assemble_dense(mesh, geo, mat)
    u = random_state(op)
    got = state_to_vector(op.apply_K(u))
    ref = dense.stiffness @ state_to_vector(u)
    assert np.max(np.abs(got - ref)) < 1e-11 * np.max(np.abs(u.data))


@pytest.mark.parametrize("d,k,boundary", [
    (2, 2, "sound_soft"),
    (2, 3, "periodic"),
    (3, 1, "sound_soft"),
    (3, 2, "periodic"),
])
def test_deformed_mesh_matches_dense(d, k, boundary):
    mesh, geo, mat, op = make_setup(2, d, k, boundary=boundary,
                                    c=1.2, rho=0.8)
    dense = assemble_dense(mesh, geo, mat)
    for _ in range(3):
        u = random_state(op)
        got = state_to_vector(op.apply_K(u))
        ref = dense.stiffness @ state_to_vector(u)
        assert np.max(np.abs(got - ref)) < 1e-11 * np.max(np.abs(u.data))


def test_heterogeneous_material_matches_dense():
    mesh = deform(build_cartesian(2, 2), 0.02)
    geo = precompute_geometry(mesh, 2)
    mat = Material(c=np.array([1.0, 2.0, 0.5, 1.5]),
                   rho=np.array([1.0, 0.7, 1.3, 2.0]))
    op = AcousticOperator(mesh, geo, mat)
    dense = assemble_dense(mesh, geo, mat)
    u = random_state(op)
    got = state_to_vector(op.apply_K(u))
    ref = dense.stiffness @ state_to_vector(u)
    assert np.max(np.abs(got - ref)) < 1e-11 * np.max(np.abs(u.data))


def test_face_term_reads_only_face_nodes():
    # perturbing an interior GL coefficient must not change face terms
    _, _, _, op = make_setup(2, 2, 2, amplitude=0.02)
    u = random_state(op)
    face_before = op.apply_K(u, parts="face").data.copy()
    u.data[0, 2, 1, 1] += 10.0
    u.data[1, 0, 1, 1] -= 3.0
    face_after = op.apply_K(u, parts="face").data
    assert np.array_equal(face_before, face_after)


def test_skew_core_conserves_energy():
    # central flux, periodic: U^T K U = 0 so the discrete energy is flat
    for d in (2, 3):
        _, _, _, op = make_setup(2, d, 2, boundary="periodic",
                                 flux=FluxParams(stabilization=False))
        u = random_state(op)
        r = op.apply_K(u)
        quad = float(np.sum(u.data * r.data))
        scale = float(np.sum(np.abs(u.data * r.data)))
        assert abs(quad) < 1e-10 * max(scale, 1.0)


def test_stabilization_dissipates_energy():
    _, _, _, op = make_setup(2, 2, 2, boundary="periodic")
    dense = assemble_dense(op.mesh, op.geometry, op.material)
    u = random_state(op)
    vec = state_to_vector(u)
    # d/dt (U^T M U) = -2 U^T K U <= 0 for the stabilized flux
    assert vec @ (dense.stiffness @ vec) > 0


# -- mass ----------------------------------------------------------------

def test_mass_inverse_pair_on_deformed_mesh():
    _, _, _, op = make_setup(2, 3, 3, amplitude=0.02)
    u = random_state(op)
    back = op.apply_inverse_mass(op.apply_mass(u))
    assert np.max(np.abs(back.data - u.data)) < 1e-12 * np.max(np.abs(u.data))


def test_mass_matches_dense_inverse():
    mesh, geo, mat, op = make_setup(1, 2, 1, amplitude=0.0)
    dense = assemble_dense(mesh, geo, mat)
    u = random_state(op)
    got = state_to_vector(op.apply_inverse_mass(u))
    ref = np.linalg.solve(dense.mass, state_to_vector(u))
    assert np.max(np.abs(got - ref)) < 1e-12


def test_constant_through_mass_on_unit_element():
    # one unit element: M of a constant is volume * constant
    mesh, geo, mat, op = make_setup(1, 2, 2, amplitude=0.0)
    dense = assemble_dense(mesh, geo, mat)
    u = op.new_state()
    u.data[:] = 2.5
    out = np.linalg.solve(dense.mass, dense.mass @ state_to_vector(u))
    assert np.allclose(out, 2.5, atol=1e-12)
    mf = op.apply_inverse_mass(op.apply_mass(u))
    assert np.allclose(mf.data, 2.5, atol=1e-12)


# -- local S -------------------------------------------------------------

def test_local_S_constant_is_zero():
    _, _, _, op = make_setup(2, 2, 2, amplitude=0.02)
    values = np.ones((4, 3, 3, 3))
    out = op.apply_local_S(values, 2)
    assert np.max(np.abs(out)) < 1e-12


def test_local_S_linear_pressure():
    from wavekernel.mesh import map_points
    from wavekernel.quadrature import gauss_rule
    mesh, geo, mat, op = make_setup(1, 2, 2, amplitude=0.0)
    coords = map_points(mesh, gauss_rule(3).points)
    values = np.zeros((1, 3, 3, 3))
    values[:, 2] = coords[..., 0]  # p = x
    out = op.apply_local_S(values, 2)
    assert np.allclose(out[:, 0], 1.0, atol=1e-12)
    assert np.max(np.abs(out[:, 1])) < 1e-12
    assert np.max(np.abs(out[:, 2])) < 1e-12


def test_local_S_missing_degree_errors():
    mesh, geo, mat, _ = make_setup(2, 2, 3)
    geo2 = precompute_geometry(mesh, 3, reduced_degrees=())
    op = AcousticOperator(mesh, geo2, mat)
    with pytest.raises(ValueError):
        op.apply_local_S(np.ones((4, 3, 2, 2)), 1)


def test_collocated_pipeline_matches_dense_local_derivative():
    # the collocated route equals M^{-1} (N^T S N) U on each element
    mesh, geo, mat, op = make_setup(1, 2, 3, c=1.1, rho=0.9)
    dense = assemble_dense(mesh, geo, mat)
    u = random_state(op)
    vals = op.to_gauss_values(u.data)
    out = op.apply_local_S(vals, op.k)
    # invert the collocation per direction to get GL coefficients
    from wavekernel.kernels import apply_1d
    back = out
    for direction in range(2):
        back = apply_1d(np.linalg.inv(op.gl_to_g.matrix), back, direction)
    ref = (dense.local_d[0] @ state_to_vector(u)).reshape(back.shape)
    assert np.max(np.abs(back - ref)) < 1e-11 * np.max(np.abs(u.data))


# -- dense oracle sanity -------------------------------------------------

def test_dense_mass_symmetric_positive():
    mesh, geo, mat, _ = make_setup(2, 2, 2, amplitude=0.02)
    dense = assemble_dense(mesh, geo, mat)
    asym = np.max(np.abs(dense.mass - dense.mass.T))
    assert asym < 1e-13
    eigs = np.linalg.eigvalsh(dense.mass)
    assert np.all(eigs > 0)


def test_dense_constant_nullspace_periodic():
    mesh, geo, mat, op = make_setup(2, 2, 2, boundary="periodic")
    dense = assemble_dense(mesh, geo, mat)
    u = op.new_state()
    u.data[:, 2] = 3.0
    u.data[:, 0] = -0.7
    assert np.max(np.abs(dense.stiffness @ state_to_vector(u))) < 1e-11


def test_dense_spectrum_in_left_half_plane():
    mesh = build_cartesian((2, 1), 2)
    geo = precompute_geometry(mesh, 2)
    mat = Material.uniform(mesh)
    dense = assemble_dense(mesh, geo, mat)
    evolution = -np.linalg.solve(dense.mass, dense.stiffness)
    eigs = np.linalg.eigvals(evolution)
    assert np.max(eigs.real) < 1e-10


def test_dense_guard_refuses_large_input():
    mesh = build_cartesian(5, 2)
    geo = precompute_geometry(mesh, 2)
    mat = Material.uniform(mesh)
    with pytest.raises(ValueError):
        assemble_dense(mesh, geo, mat)


def test_state_vector_roundtrip():
    _, _, _, op = make_setup(2, 2, 2)
    u = random_state(op)
    vec = state_to_vector(u)
    back = vector_to_state(vec, 4, 2, 2)
    assert np.array_equal(back.data, u.data)


# -- kernel call counting -------------------------------------------------

@pytest.mark.parametrize("d,k", [(2, 3), (3, 2)])
def test_call_counts_match_table(d, k):
    counter = KernelCounter()
    _, _, _, op = make_setup(2, d, k, boundary="periodic", counter=counter)
    u = random_state(op)
    per = op.mesh.n_elements * op.n_comp
    table = kernel_call_table(k, d)

    counter.enabled = True
    op.apply_K(u)
    assert counter.calls("stiffness") == table["stiffness"]["cell"] * per
    assert counter.calls("stiffness", face=True) == (
        table["stiffness"]["face"] * per)

    counter.reset()
    op.apply_inverse_mass(u)
    assert counter.calls("mass") == table["mass"]["cell"] * per
    assert counter.calls("mass", face=True) == 0
