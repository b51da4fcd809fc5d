"""Tensor-product kernels, call/FLOP counting, and the analytic cost model.

A "kernel call" is one application of a 1-D matrix along one direction
of one element's (or face's) coefficient tensor.  All higher-dimensional
interpolation, differentiation, and integration in the solver reduces
to such calls; the counter and the cost model below price exactly them.

Layout contract: direction 0 is the fastest-varying (last) array axis,
so a tensor with extents (n_0, ..., n_{d-1}) is stored C-ordered with
shape (n_{d-1}, ..., n_0).  Batched arrays carry leading axes (element,
component) in front of the tensor axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import (
    BasisMatrix1D,
    EvenOddMatrix,
    basis_change_matrices,
    gauss_rule,
    lagrange_matrix,
)


@dataclass
class ElementTensor:
    """Flat coefficient array with per-direction extents.

    ``values[i_0 + n_0*(i_1 + n_1*i_2 + ...)]`` holds the coefficient at
    multi-index (i_0, ..., i_{d-1}).
    """

    values: np.ndarray
    extents: tuple[int, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != int(np.prod(self.extents)):
            raise ValueError("length does not match product of extents")

    @property
    def shaped(self) -> np.ndarray:
        return self.values.reshape(self.extents[::-1])

    @classmethod
    def from_shaped(cls, arr: np.ndarray) -> "ElementTensor":
        return cls(values=arr.ravel(), extents=tuple(arr.shape[::-1]))


class KernelCounter:
    """Tally of 1-D kernel calls and model FLOPs, split by phase.

    Phases are free-form strings ("mass", "stiffness", "tck",
    "convert"); each phase accumulates cell calls, face calls, and
    model FLOPs.  Counting is off by default so benchmark runs pay
    nothing; counters from worker threads can be merged on read.
    """

    def __init__(self):
        self.enabled = False
        self.counts: dict[str, dict[str, int]] = {}

    def _bucket(self, phase: str) -> dict[str, int]:
        if phase not in self.counts:
            self.counts[phase] = {"cell_calls": 0, "face_calls": 0, "flops": 0}
        return self.counts[phase]

    def record(self, phase: str, *, units: int, n_out: int, n_in: int,
               lines: int, face: bool = False) -> None:
        if not self.enabled:
            return
        b = self._bucket(phase)
        b["face_calls" if face else "cell_calls"] += units
        b["flops"] += units * kernel_flops(n_out, n_in, lines)

    def reset(self) -> None:
        self.counts = {}

    def merge(self, other: "KernelCounter") -> None:
        for phase, ob in other.counts.items():
            b = self._bucket(phase)
            for key, val in ob.items():
                b[key] += val

    def calls(self, phase: str, face: bool = False) -> int:
        b = self.counts.get(phase)
        if b is None:
            return 0
        return b["face_calls" if face else "cell_calls"]

    def total_flops(self) -> int:
        return sum(b["flops"] for b in self.counts.values())


def _dense_matrix(matrix) -> np.ndarray:
    if isinstance(matrix, BasisMatrix1D):
        return matrix.matrix
    if isinstance(matrix, EvenOddMatrix):
        return matrix.dense
    return np.asarray(matrix)


def apply_1d(matrix, tensor: np.ndarray, direction: int, *,
             even_odd: bool = False,
             counter: KernelCounter | None = None, phase: str = "",
             units: int | None = None, face: bool = False) -> np.ndarray:
    """Mode product of a tensor with a 1-D matrix along ``direction``.

    ``tensor`` may carry arbitrary leading batch axes; direction 0 is
    the last axis.  With ``even_odd`` the multiplication runs through
    the even/odd blocks of an EvenOddMatrix instead of the dense form
    (identical results, half the arithmetic).
    """
    nd = tensor.ndim
    axis = nd - 1 - direction
    if axis < 0:
        raise ValueError(f"direction {direction} exceeds tensor rank")
    if even_odd:
        if not isinstance(matrix, EvenOddMatrix):
            raise TypeError("even_odd path needs an EvenOddMatrix")
        n_out, n_in = matrix.shape
        if tensor.shape[axis] != n_in:
            raise ValueError(f"extent {tensor.shape[axis]} in direction "
                             f"{direction} does not match matrix columns {n_in}")
        out = matrix.apply(tensor, axis=axis)
    else:
        mat = _dense_matrix(matrix)
        n_out, n_in = mat.shape
        if tensor.shape[axis] != n_in:
            raise ValueError(f"extent {tensor.shape[axis]} in direction "
                             f"{direction} does not match matrix columns {n_in}")
        out = np.moveaxis(np.moveaxis(tensor, axis, -1) @ mat.T, -1, axis)
    if counter is not None and counter.enabled:
        u = 1 if units is None else units
        lines = tensor.size // (u * n_in)
        counter.record(phase, units=u, n_out=n_out, n_in=n_in, lines=lines,
                       face=face)
    return out


def apply_1d_tensor(matrix, tensor: ElementTensor, direction: int,
                    **kwargs) -> ElementTensor:
    """apply_1d on the flat ElementTensor representation."""
    out = apply_1d(matrix, tensor.shaped, direction, **kwargs)
    return ElementTensor.from_shaped(out)


@lru_cache(maxsize=64)
def collocation_derivative_matrix(k: int) -> BasisMatrix1D:
    """Derivative matrix of the Gauss-nodal basis at its own points."""
    g = gauss_rule(k + 1).points
    return lagrange_matrix(g, g, "derivative")


def interpolate_to_gauss(coeffs: np.ndarray, d: int, gl_to_g=None, *,
                         counter: KernelCounter | None = None,
                         phase: str = "convert",
                         units: int | None = None) -> np.ndarray:
    """Evaluate GL coefficients at the tensor Gauss points (d calls)."""
    if gl_to_g is None:
        gl_to_g = basis_change_matrices(coeffs.shape[-1] - 1)[0]
    out = coeffs
    for direction in range(d):
        out = apply_1d(gl_to_g, out, direction, counter=counter,
                       phase=phase, units=units)
    return out


def gradient_collocated(values: np.ndarray, d: int, d_co=None, *,
                        counter: KernelCounter | None = None,
                        phase: str = "tck",
                        units: int | None = None) -> list[np.ndarray]:
    """Reference-coordinate partials of collocated Gauss values (d calls)."""
    if d_co is None:
        d_co = collocation_derivative_matrix(values.shape[-1] - 1)
    return [apply_1d(d_co, values, m, counter=counter, phase=phase,
                     units=units) for m in range(d)]


def kernel_flops(n_out: int, n_in: int, lines: int) -> int:
    """Model FLOPs of one 1-D kernel call on ``lines`` data lines.

    Per output line: n_out multiply-initializations plus fused
    multiply-adds over the remaining n_in - 2 inputs, exploiting the
    symmetric/antisymmetric (even-odd) matrix structure.
    """
    return (3 * n_out + 2 * ((max(n_in - 2, 0) * n_out) // 2)) * lines


def cost_tensorial(k: int, delta: int) -> int:
    """FLOPs of one square kernel call at degree k on a delta-dim tensor."""
    if k < 1 or delta < 1:
        raise ValueError("need k >= 1 and delta >= 1")
    n = k + 1
    return kernel_flops(n, n, n ** (delta - 1))


def kernel_call_table(k: int, d: int) -> dict[str, dict[str, int]]:
    """Kernel calls per element per scalar field for each operator.

    mass: inverse-mass sandwich (forward + backward basis change);
    stiffness: the full derivative-operator application, cell calls at
    dimension d and face calls at dimension d-1; tck: the Taylor-series
    derivative loop, 2d entry/exit interpolations plus d(k-1) in-place
    gradient evaluations (equivalently d(k+1) collocated gradients).
    """
    if d not in (2, 3):
        raise ValueError("call table is defined for d in {2, 3}")
    return {
        "mass": {"cell": 2 * d, "face": 0},
        "stiffness": {"cell": d * d + 4 * d, "face": 4 * (d * d - d)},
        "tck": {"cell": 2 * d + d * (k - 1), "face": 0},
    }


@dataclass(frozen=True)
class CostReport:
    """Model FLOPs per element per time step, whole (d+1)-field system.

    c_basis_change prices the TCK entry/exit basis conversions, which
    the nominal composition rule keeps separate from c_tck.
    """

    scheme: str
    k: int
    d: int
    stages: int
    c_mass: int
    c_stiffness: int
    c_tck: int
    c_basis_change: int
    c_scheme_total: int
    calls: dict = field(default_factory=dict)


_RK_STAGES = {"rk4_classic": 4, "lsrk45": 5, "lsrk59": 9}


def scheme_cost(k: int, d: int, scheme: str, stages: int | None = None) -> CostReport:
    """Assemble per-element per-step FLOPs for a time-stepping scheme.

    Cell calls are priced at dimension d, face calls at d-1, and all
    counts cover the full d+1 solution fields.  ADER composes as two
    inverse-mass applications plus one derivative operator plus the
    Taylor loop; s-stage RK as s single applications of each.
    """
    table = kernel_call_table(k, d)
    comps = d + 1
    cell = cost_tensorial(k, d)
    face = cost_tensorial(k, d - 1)
    c_mass = comps * table["mass"]["cell"] * cell
    c_stiffness = comps * (table["stiffness"]["cell"] * cell
                           + table["stiffness"]["face"] * face)
    c_tck = comps * table["tck"]["cell"] * cell
    c_convert = comps * 2 * d * cell
    if scheme in ("ader", "ader_hdg"):
        total = 2 * c_mass + c_stiffness + c_tck
        if scheme == "ader_hdg":
            # extra global first derivative W = M^{-1} K U
            total += c_mass + c_stiffness
        s = 0
    elif scheme == "rk" or scheme in _RK_STAGES:
        s = _RK_STAGES.get(scheme, stages)
        if s is None:
            raise ValueError("rk scheme needs a stage count")
        total = s * (c_mass + c_stiffness)
        c_tck = 0
        c_convert = 0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return CostReport(scheme=scheme, k=k, d=d, stages=s, c_mass=c_mass,
                      c_stiffness=c_stiffness, c_tck=c_tck,
                      c_basis_change=c_convert, c_scheme_total=total,
                      calls=table)


REDUCTION_STRIDE = {"none": 0, "every_step": 1, "every_second": 2,
                    "every_third": 3}


def reduction_schedule(k: int, policy: str) -> list[tuple[int, int]]:
    """Degrees (input, output) of each Taylor derivative application.

    Application j consumes the (j-1)-th derivative field and, when the
    policy triggers at j, projects the result down by the policy stride
    (clamped at degree 0).
    """
    stride = REDUCTION_STRIDE[policy]
    steps = []
    deg = k
    for j in range(1, k + 2):
        out = deg
        if stride and j % stride == 0:
            out = max(deg - stride, 0)
        steps.append((deg, out))
        deg = out
    return steps


def reduction_degrees(k: int, policy: str) -> tuple[int, ...]:
    """Reduced degrees (below k, descending) a policy will visit;
    the set a geometry cache must carry for the derivative loop."""
    degs = {out for _, out in reduction_schedule(k, policy)}
    return tuple(sorted(degs - {k}, reverse=True))


def _resize_cost(n_from: int, n_to: int, d: int) -> int:
    """FLOPs of changing per-direction extent n_from -> n_to, one sweep
    per direction with mixed intermediate extents."""
    total = 0
    for t in range(d):
        lines = n_to ** t * n_from ** (d - 1 - t)
        total += kernel_flops(n_to, n_from, lines)
    return total


def tck_cost_model(k: int, d: int, policy: str = "none") -> int:
    """Model FLOPs of one Taylor-derivative evaluation, whole system.

    Simulates the actual extent schedule: entry/exit basis changes at
    full degree, one collocated gradient set per derivative at the
    scheduled degree, projection sweeps where the policy reduces, and
    the final chain interpolating per-degree accumulators back up.
    """
    n = k + 1
    per_comp = 2 * d * kernel_flops(n, n, n ** (d - 1))
    acc_degrees = {k}
    for deg_in, deg_out in reduction_schedule(k, policy):
        m = deg_in + 1
        per_comp += d * kernel_flops(m, m, m ** (d - 1))
        if deg_out != deg_in:
            per_comp += _resize_cost(deg_in + 1, deg_out + 1, d)
        acc_degrees.add(deg_out)
    chain = sorted(acc_degrees)
    for lo, hi in zip(chain[:-1], chain[1:]):
        per_comp += _resize_cost(lo + 1, hi + 1, d)
    return (d + 1) * per_comp
