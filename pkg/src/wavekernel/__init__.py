"""Matrix-free discontinuous Galerkin solver for linear acoustics.

Sum-factorized kernels on quadrilateral and hexahedral meshes, with
interchangeable Gauss and Gauss-Lobatto nodal bases, low-storage
Runge-Kutta and Taylor-derivative (ADER) time integration, and an
operation-count model for both.
"""

from .analytic import (
    analytic_solution,
    exact_pressure_norm,
    initial_state,
    l2_pressure_error,
)
from .kernels import (
    CostReport,
    KernelCounter,
    apply_1d,
    kernel_call_table,
    reduction_degrees,
    reduction_schedule,
    scheme_cost,
    tck_cost_model,
)
from .mesh import (
    GeometryCache,
    GeometryError,
    Material,
    Mesh,
    build_cartesian,
    deform,
    map_points,
    min_edge_length,
    precompute_geometry,
)
from .operator import (
    AcousticOperator,
    FluxParams,
    StateVector,
)
from .quadrature import (
    BasisMatrix1D,
    EvenOddMatrix,
    ProjectionMatrix1D,
    QuadRule1D,
    basis_change_matrices,
    even_odd_decompose,
    gauss_lobatto_rule,
    gauss_rule,
    lagrange_matrix,
    projection_matrix,
)
from .stepping import (
    LSRK45,
    LSRK59,
    RK4_CLASSIC,
    CourantSearchError,
    SchemeConfig,
    ader_step,
    advance,
    compute_dt,
    find_critical_courant,
    lsrk_step,
    make_stepper,
    rk_step,
    state_norm,
    tck_evaluate,
)

__all__ = [
    "AcousticOperator",
    "BasisMatrix1D",
    "CostReport",
    "CourantSearchError",
    "EvenOddMatrix",
    "FluxParams",
    "GeometryCache",
    "GeometryError",
    "KernelCounter",
    "LSRK45",
    "LSRK59",
    "Material",
    "Mesh",
    "ProjectionMatrix1D",
    "QuadRule1D",
    "RK4_CLASSIC",
    "SchemeConfig",
    "StateVector",
    "ader_step",
    "advance",
    "analytic_solution",
    "apply_1d",
    "basis_change_matrices",
    "build_cartesian",
    "compute_dt",
    "deform",
    "even_odd_decompose",
    "exact_pressure_norm",
    "find_critical_courant",
    "gauss_lobatto_rule",
    "gauss_rule",
    "initial_state",
    "kernel_call_table",
    "l2_pressure_error",
    "lagrange_matrix",
    "lsrk_step",
    "make_stepper",
    "map_points",
    "min_edge_length",
    "precompute_geometry",
    "projection_matrix",
    "reduction_degrees",
    "reduction_schedule",
    "rk_step",
    "scheme_cost",
    "state_norm",
    "tck_evaluate",
    "tck_cost_model",
]

__version__ = "0.1.0"
