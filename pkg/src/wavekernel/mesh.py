"""Structured quad/hex meshes with multilinear element mappings.

Meshes tile the unit square/cube.  Vertex v of an element carries a
d-bit index whose bit j selects the low/high side along direction j;
the mapping from the reference cell [0,1]^d is multilinear in the 2^d
vertex positions.  Geometry (inverse Jacobians, JxW, face normals) is
precomputed at the Gauss points of the operator degree and of the
reduced degrees that the Taylor-derivative loop may request.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import MAX_DEGREE, gauss_rule


class GeometryError(ValueError):
    """Raised for inverted elements or other bad geometry."""


@dataclass(frozen=True)
class FaceRecord:
    """One mesh face: owning (minus) element and its neighbor, if any.

    Local face ids are 2*axis + side.  Boundary faces carry ep = -1 and
    kind "sound_soft"; structured meshes always have identity
    orientation between the two sides' tangential indexing.
    """

    em: int
    fm: int
    ep: int
    fp: int
    orientation: int
    kind: str


@dataclass(frozen=True)
class Mesh:
    d: int
    n_per_dim: tuple[int, ...]
    vertices: np.ndarray
    elements: np.ndarray
    neighbors: np.ndarray
    faces: list[FaceRecord]
    boundary_kind: str

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def periodic(self) -> bool:
        return self.boundary_kind == "periodic"


def _as_tuple(n_per_dim, d: int) -> tuple[int, ...]:
    if np.isscalar(n_per_dim):
        return (int(n_per_dim),) * d
    t = tuple(int(n) for n in n_per_dim)
    if len(t) != d:
        raise ValueError(f"n_per_dim has {len(t)} entries for d={d}")
    return t


def build_cartesian(n_per_dim, d: int,
                    boundary_kind: str = "sound_soft") -> Mesh:
    """Uniform mesh of [0,1]^d with n_per_dim elements per direction."""
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if boundary_kind not in ("sound_soft", "periodic"):
        raise ValueError(f"unknown boundary kind {boundary_kind!r}")
    nn = _as_tuple(n_per_dim, d)
    if min(nn) < 1:
        raise ValueError("need at least one element per direction")

    grid = [np.linspace(0.0, 1.0, n + 1) for n in nn]
    mesh_axes = np.meshgrid(*grid, indexing="ij")
    vertices = np.stack([a.ravel(order="F") for a in mesh_axes], axis=-1)

    vstride = np.cumprod([1] + [n + 1 for n in nn[:-1]])
    estride = np.cumprod([1] + list(nn[:-1]))
    n_elems = int(np.prod(nn))

    idx = np.unravel_index(np.arange(n_elems), nn, order="F")
    base_vid = sum(idx[j] * vstride[j] for j in range(d))
    elements = np.empty((n_elems, 2 ** d), dtype=int)
    for v in range(2 ** d):
        off = sum(((v >> j) & 1) * vstride[j] for j in range(d))
        elements[:, v] = base_vid + off

    periodic = boundary_kind == "periodic"
    neighbors = np.full((n_elems, d, 2), -1, dtype=int)
    for axis in range(d):
        pos = idx[axis]
        for side, step in ((0, -1), (1, +1)):
            nbr_pos = pos + step
            if periodic:
                nbr_pos = nbr_pos % nn[axis]
            ok = (nbr_pos >= 0) & (nbr_pos < nn[axis])
            nbr = base_vid * 0 + sum(
                (nbr_pos if j == axis else idx[j]) * estride[j]
                for j in range(d))
            neighbors[ok, axis, side] = nbr[ok]

    faces: list[FaceRecord] = []
    for axis in range(d):
        for e in range(n_elems):
            ep = neighbors[e, axis, 1]
            if ep >= 0:
                wrap = idx[axis][e] == nn[axis] - 1
                kind = "periodic" if wrap else "interior"
                faces.append(FaceRecord(e, 2 * axis + 1, int(ep),
                                        2 * axis, 0, kind))
            else:
                faces.append(FaceRecord(e, 2 * axis + 1, -1, -1, 0,
                                        "sound_soft"))
            if neighbors[e, axis, 0] < 0:
                faces.append(FaceRecord(e, 2 * axis, -1, -1, 0,
                                        "sound_soft"))

    return Mesh(d=d, n_per_dim=nn, vertices=vertices, elements=elements,
                neighbors=neighbors, faces=faces,
                boundary_kind=boundary_kind)


def deform(mesh: Mesh, amplitude: float) -> Mesh:
    """Displace each vertex coordinate by amplitude * prod_j sin(pi x_j).

    The displacement vanishes on the boundary of the unit cube, so the
    outer shape (and any periodic identification) is preserved.
    """
    if amplitude < 0 or amplitude >= 0.5 / max(mesh.n_per_dim):
        raise ValueError("amplitude outside the inversion-safe range")
    bump = amplitude * np.prod(np.sin(np.pi * mesh.vertices), axis=1)
    vertices = mesh.vertices + bump[:, None]
    return Mesh(d=mesh.d, n_per_dim=mesh.n_per_dim, vertices=vertices,
                elements=mesh.elements, neighbors=mesh.neighbors,
                faces=mesh.faces, boundary_kind=mesh.boundary_kind)


@dataclass(frozen=True)
class Material:
    """Element-wise constant speed of sound and mass density."""

    c: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        if np.any(self.c <= 0) or np.any(self.rho <= 0):
            raise ValueError("material constants must be positive")

    @classmethod
    def uniform(cls, mesh: Mesh, c: float = 1.0, rho: float = 1.0):
        e = mesh.n_elements
        return cls(c=np.full(e, float(c)), rho=np.full(e, float(rho)))


@dataclass(frozen=True)
class VolumeGeometry:
    """Per-element volume metric at one degree's Gauss points.

    inv_jac[e, a, b, ...] = d xi_a / d x_b on the shaped point tensor;
    jxw[e, ...] = det(J) times the tensor quadrature weight.
    """

    inv_jac: np.ndarray
    jxw: np.ndarray


@dataclass(frozen=True)
class FaceGeometry:
    """Outward unit normals and surface JxW on one face group."""

    normal: np.ndarray
    jxw: np.ndarray


@dataclass(frozen=True)
class GeometryCache:
    degree: int
    vol: dict[int, VolumeGeometry]
    face: dict[tuple[int, int], FaceGeometry]
    h_min: float
    cartesian_flag: np.ndarray = field(repr=False)


def _vertex_factors(pts: list[np.ndarray], d: int):
    """1-D low/high shape factors and their derivatives per direction."""
    val = [(1.0 - p, p) for p in pts]
    der = [(-np.ones_like(p), np.ones_like(p)) for p in pts]
    return val, der


def _shape_tensors(pts: list[np.ndarray], d: int):
    """Multilinear shape values and gradients on a tensor point set.

    Returns (values (2^d, nq), grads (2^d, d, nq)) with points flattened
    direction-0-fastest.
    """
    val, der = _vertex_factors(pts, d)
    nq = int(np.prod([p.size for p in pts]))
    values = np.empty((2 ** d, nq))
    grads = np.empty((2 ** d, d, nq))
    for v in range(2 ** d):
        bits = [(v >> j) & 1 for j in range(d)]
        acc = np.ones(())
        for j in reversed(range(d)):
            acc = np.multiply.outer(acc, val[j][bits[j]])
        values[v] = acc.ravel()
        for m in range(d):
            acc = np.ones(())
            for j in reversed(range(d)):
                f = der[j][bits[j]] if j == m else val[j][bits[j]]
                acc = np.multiply.outer(acc, f)
            grads[v, m] = acc.ravel()
    return values, grads


def map_points(mesh: Mesh, pts: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Physical coordinates of a tensor reference point set per element.

    ``pts`` is one 1-D array reused in all directions or a per-direction
    list.  Returns shape (E, ext_{d-1}, ..., ext_0, d).
    """
    d = mesh.d
    if isinstance(pts, np.ndarray) and pts.ndim == 1:
        pts = [pts] * d
    values, _ = _shape_tensors(list(pts), d)
    coords = np.einsum("evi,vq->eqi", mesh.vertices[mesh.elements], values)
    ext = tuple(p.size for p in pts)[::-1]
    return coords.reshape((mesh.n_elements,) + ext + (mesh.d,))


def _jacobians(mesh: Mesh, pts: list[np.ndarray]):
    """J[e, q, i, m] = d x_i / d xi_m at flattened tensor points."""
    _, grads = _shape_tensors(pts, mesh.d)
    x = mesh.vertices[mesh.elements]
    return np.einsum("evi,vmq->eqim", x, grads)


def _volume_geometry(mesh: Mesh, degree: int) -> tuple[VolumeGeometry, np.ndarray]:
    rule = gauss_rule(degree + 1)
    d = mesh.d
    jac = _jacobians(mesh, [rule.points] * d)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise GeometryError("non-positive Jacobian determinant")
    inv = np.linalg.inv(jac)
    w = np.ones(())
    for _ in range(d):
        w = np.multiply.outer(w, rule.weights)
    jxw = det * w.ravel()
    ext = (rule.n,) * d
    vol = VolumeGeometry(
        inv_jac=np.ascontiguousarray(
            inv.transpose(0, 2, 3, 1).reshape((mesh.n_elements, d, d) + ext)),
        jxw=jxw.reshape((mesh.n_elements,) + ext))
    return vol, jac


def _face_geometry(mesh: Mesh, degree: int, axis: int, side: int) -> FaceGeometry:
    rule = gauss_rule(degree + 1)
    d = mesh.d
    pts = [rule.points] * d
    pts[axis] = np.array([float(side)])
    jac = _jacobians(mesh, pts)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise GeometryError("non-positive Jacobian determinant on a face")
    inv = np.linalg.inv(jac)
    sgn = 2.0 * side - 1.0
    n_vec = sgn * det[..., None] * inv[:, :, axis, :]
    length = np.linalg.norm(n_vec, axis=-1)
    w = np.ones(())
    for j in reversed(range(d)):
        w = np.multiply.outer(w, rule.weights if j != axis else np.ones(1))
    ext = tuple(rule.n if j != axis else 1 for j in reversed(range(d)))
    face_ext = tuple(n for n in ext if n > 1) or (1,)
    normal = (n_vec / length[..., None]).transpose(0, 2, 1)
    return FaceGeometry(
        normal=normal.reshape((mesh.n_elements, d) + face_ext),
        jxw=(length * w.ravel()).reshape((mesh.n_elements,) + face_ext))


def default_reduced_degrees(k: int) -> tuple[int, ...]:
    """Degree chain k-2, k-4, ... visited by every-second reduction."""
    return tuple(range(k - 2, -1, -2))


def min_edge_length(mesh: Mesh) -> float:
    """Shortest element edge, the h in the Courant relation."""
    edge_min = np.inf
    x = mesh.vertices[mesh.elements]
    for j in range(mesh.d):
        for v in range(2 ** mesh.d):
            if (v >> j) & 1:
                continue
            dx = x[:, v | (1 << j)] - x[:, v]
            edge_min = min(edge_min, np.linalg.norm(dx, axis=1).min())
    return float(edge_min)


def precompute_geometry(mesh: Mesh, k: int,
                        reduced_degrees=None) -> GeometryCache:
    """Evaluate the metric at the degree-k Gauss points (cells and faces)
    plus the reduced-degree cell point sets used by degree reduction."""
    if not 1 <= k <= MAX_DEGREE:
        raise ValueError(f"degree {k} outside supported range 1..{MAX_DEGREE}")
    if reduced_degrees is None:
        reduced_degrees = default_reduced_degrees(k)

    vol: dict[int, VolumeGeometry] = {}
    vol[k], jac = _volume_geometry(mesh, k)
    scale = np.max(np.abs(jac))
    const_dev = np.abs(jac - jac[:, :1]).max(axis=(1, 2, 3))
    off = np.abs(jac * (1.0 - np.eye(mesh.d))).max(axis=(1, 2, 3))
    cartesian = (const_dev < 1e-12 * scale) & (off < 1e-12 * scale)
    del jac

    for kr in sorted(set(int(q) for q in reduced_degrees) - {k}):
        if not 0 <= kr <= k:
            raise ValueError(f"reduced degree {kr} outside 0..{k}")
        vol[kr], _ = _volume_geometry(mesh, kr)

    face = {(axis, side): _face_geometry(mesh, k, axis, side)
            for axis in range(mesh.d) for side in (0, 1)}

    return GeometryCache(degree=k, vol=vol, face=face,
                         h_min=min_edge_length(mesh),
                         cartesian_flag=cartesian)
