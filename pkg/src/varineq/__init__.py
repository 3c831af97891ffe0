"""Subgradient projection methods for inequality problems under variable ordering cones.

Solve ``find x in C with F(x) in -K(F(x))`` where the ordering cone ``K``
depends on the point ``F(x)`` itself.
"""

from ._kernels import backend
from .cones import (
    ConeMap,
    PolyhedralCone,
    cone_contains,
    dual_contains,
    in_minus_cone,
    moreau_split,
    project_cone,
    sector_cone,
)
from .errors import (
    DimensionError,
    EmptyCutError,
    InfeasibleSetError,
    NNLSConvergenceError,
    ProjectionError,
)
from .problems import (
    ProblemInstance,
    VectorFunctionOracle,
    affine_orthant,
    build_H_halfspaces,
    check_A4,
    check_k_convexity,
    check_subgradient_validity,
    example_3_2,
    is_solution,
    localization_halfspace,
    paper_remark,
    residual,
)
from .sets import (
    Ball,
    Box,
    Halfspace,
    Intersection,
    Polyhedron,
    WholeSpace,
    dykstra_project,
    project_qp_oracle,
    project_set,
)
from .solver import (
    SolveResult,
    SolverConfig,
    Status,
    fejer_audit,
    residual_bound_audit,
    s_monotonicity_audit,
    solve,
)

__version__ = "0.1.0"
