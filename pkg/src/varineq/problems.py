"""Problem instances ``find x in C with F(x) in -K(F(x))`` and their checkers.

Also builds the cut set ``H(x, U) = {z : F(x) + U (z - x) in -K(F(x))}`` as
halfspaces and the localisation halfspace ``W(x)`` used by the S variant.
Subgradient oracles are supplied by the user and validated here, never
computed.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cones import (
    ConeMap,
    PolyhedralCone,
    _as_vector,
    cone_contains,
    moreau_split,
    sample_rays,
    sector_cone,
)
from .errors import DimensionError, EmptyCutError
from .sets import Box, FeasibleSet, Halfspace, WholeSpace, as_halfspaces, project_set


@dataclass(frozen=True)
class VectorFunctionOracle:
    """``F: R^n -> R^m`` with a subgradient oracle returning an ``(m, n)`` array."""

    n: int
    m: int
    F: Callable[[np.ndarray], np.ndarray]
    subgrad: Callable[[np.ndarray], np.ndarray]

    def value(self, x) -> np.ndarray:
        y = np.asarray(self.F(_as_vector(x, self.n, "x")), dtype=float)
        if y.shape != (self.m,):
            raise DimensionError(f"F returned shape {y.shape}, expected ({self.m},)")
        return y

    def subgradient(self, x) -> np.ndarray:
        U = np.asarray(self.subgrad(_as_vector(x, self.n, "x")), dtype=float)
        if U.shape != (self.m, self.n):
            raise DimensionError(f"subgradient has shape {U.shape}, expected ({self.m}, {self.n})")
        return U


@dataclass(frozen=True)
class ProblemInstance:
    oracle: VectorFunctionOracle
    cone_map: ConeMap
    feasible: FeasibleSet
    name: str = "problem"
    known_solution: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.oracle.n != self.feasible.dim:
            raise DimensionError(f"oracle has n={self.oracle.n} but C lives in R^{self.feasible.dim}")
        if self.oracle.m != self.cone_map.dim:
            raise DimensionError(f"oracle has m={self.oracle.m} but the cone map lives in R^{self.cone_map.dim}")
        if self.known_solution is not None:
            object.__setattr__(self, "known_solution", _as_vector(self.known_solution, self.n, "known_solution"))

    @property
    def n(self):
        return self.oracle.n

    @property
    def m(self):
        return self.oracle.m

    def cone_at(self, x) -> PolyhedralCone:
        """``K(F(x))``."""
        return self.cone_map(self.oracle.value(x))


@dataclass
class CheckReport:
    """Outcome of a sampled check. ``violations`` holds one dict per failure."""

    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    note: str = ""

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# Cut sets
# ---------------------------------------------------------------------------

def build_H_halfspaces(p: ProblemInstance, x, U, tol: float = 1e-12) -> list:
    """Rows of ``H(x, U)``: ``<U^T u_i, z> <= <u_i, U x - F(x)>`` per facet normal.

    Rows whose normal ``U^T u_i`` vanishes are dropped when slack and raise
    :class:`EmptyCutError` when violated.
    """
    x = _as_vector(x, p.n, "x")
    U = np.asarray(U, dtype=float)
    if U.shape != (p.m, p.n):
        raise DimensionError(f"U has shape {U.shape}, expected ({p.m}, {p.n})")
    Fx = p.oracle.value(x)
    cone = p.cone_map(Fx)
    Ux = U @ x
    scale = max(1.0, float(np.linalg.norm(Fx)), float(np.linalg.norm(Ux)))
    rows = []
    for i, u in enumerate(cone.normals):
        a = U.T @ u
        b = float(u @ (Ux - Fx))
        if np.linalg.norm(a) <= 1e-14 * max(1.0, np.linalg.norm(U)):
            if b >= -tol * scale:
                continue
            raise EmptyCutError(
                f"cut row {i} reads 0 <= {b:.3e}: H(x, U) is empty, so the problem data "
                "violate S* being inside every cut",
                row=i,
                offset=b,
            )
        rows.append(Halfspace(a, b))
    return rows


def localization_halfspace(x_k, x_0):
    """``W(x_k) = {z : <z - x_k, x_0 - x_k> <= 0}``; the whole space when ``x_k == x_0``."""
    x_k = _as_vector(x_k, name="x_k")
    x_0 = _as_vector(x_0, x_k.shape[0], "x_0")
    d = x_0 - x_k
    if not np.any(d):
        return WholeSpace(x_k.shape[0])
    return Halfspace(d, float(d @ x_k))


# ---------------------------------------------------------------------------
# Solution tests
# ---------------------------------------------------------------------------

def residual(p: ProblemInstance, x, tol: float = 1e-12) -> float:
    """``||F(x)_+||`` from the split of ``F(x)`` against ``K(F(x))``."""
    Fx = p.oracle.value(x)
    y_plus, _ = moreau_split(p.cone_map(Fx), Fx, tol)
    return float(np.linalg.norm(y_plus))


def is_solution(p: ProblemInstance, x, tol: float = 1e-8) -> bool:
    x = _as_vector(x, p.n, "x")
    if np.linalg.norm(x - project_set(p.feasible, x)) > tol:
        return False
    return residual(p, x) <= tol


def check_subgradient_validity(p: ProblemInstance, x_bar, U, samples, tol: float = 1e-10) -> CheckReport:
    """Test ``F(x) - F(x_bar) - U (x - x_bar) in K(F(x_bar))`` at every sample."""
    x_bar = _as_vector(x_bar, p.n, "x_bar")
    U = np.asarray(U, dtype=float)
    F_bar = p.oracle.value(x_bar)
    cone = p.cone_map(F_bar)
    report = CheckReport("subgradient validity")
    for x in samples:
        x = _as_vector(x, p.n, "sample")
        v = p.oracle.value(x) - F_bar - U @ (x - x_bar)
        report.checked += 1
        if not cone_contains(cone, v, tol):
            report.violations.append({"x": x, "vector": v, "margin": float(np.min(cone.normals @ v))})
    return report


def check_k_convexity(p: ProblemInstance, pairs, alphas, tol: float = 1e-10) -> CheckReport:
    """Test ``a F(x) + (1-a) F(x') - F(a x + (1-a) x') in K(F(a x + (1-a) x'))``."""
    report = CheckReport("K-convexity")
    for x, xh in pairs:
        x = _as_vector(x, p.n, "x")
        xh = _as_vector(xh, p.n, "x_hat")
        Fx, Fxh = p.oracle.value(x), p.oracle.value(xh)
        for a in alphas:
            mid = a * x + (1.0 - a) * xh
            Fmid = p.oracle.value(mid)
            v = a * Fx + (1.0 - a) * Fxh - Fmid
            report.checked += 1
            if not cone_contains(p.cone_map(Fmid), v, tol):
                report.violations.append({"x": x, "x_hat": xh, "alpha": float(a), "vector": v})
    return report


def check_A4(p: ProblemInstance, x_star, samples, ray_grid: int = 64, tol: float = 1e-10) -> CheckReport:
    """Sampled test of ``K(F(x*)) subset K(F(x))`` for ``x`` in ``samples``.

    Generators of ``K(F(x*))`` are exact in 2D and ``ray_grid`` projected
    random directions otherwise. ``x_star`` is a candidate solution supplied
    by the caller; the report says nothing about other points of ``S*``.
    """
    x_star = _as_vector(x_star, p.n, "x_star")
    rays = sample_rays(p.cone_at(x_star), ray_grid)
    report = CheckReport(
        "A4 cone inclusion",
        note="checked against the supplied candidate solution only"
        + ("" if p.m == 2 else f"; {len(rays)} sampled rays"),
    )
    for x in samples:
        x = _as_vector(x, p.n, "sample")
        if not p.feasible.contains(x, 1e-9):
            continue
        cone = p.cone_at(x)
        report.checked += 1
        bad = [r for r in rays if not cone_contains(cone, r, tol)]
        if bad:
            report.violations.append({"x": x, "rays": np.array(bad)})
    return report


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def affine_orthant(A, b, feasible: Optional[FeasibleSet] = None, known_solution=None,
                   name: str = "affine_orthant") -> ProblemInstance:
    """``F(x) = A x - b`` under the constant order ``R^m_+``; ``S* = C cap {A x <= b}``."""
    A = np.array(A, dtype=float, ndmin=2)
    b = _as_vector(b, A.shape[0], "b").copy()
    m, n = A.shape
    A.setflags(write=False)
    b.setflags(write=False)
    oracle = VectorFunctionOracle(n, m, lambda x: A @ x - b, lambda x: A)
    cone_map = ConeMap.constant(PolyhedralCone.orthant(m), "orthant")
    return ProblemInstance(
        oracle,
        cone_map,
        feasible if feasible is not None else WholeSpace(n),
        name,
        known_solution,
        {"A": A, "b": b},
    )


def remark_theta(y) -> float:
    """Upper angle of the sector order of the 1D quadratic example.

    ``pi/2`` when ``y_1 == 0``, else ``3 pi/4 - arctan(y_2^2 / y_1^2) / 2``.
    The quotient is taken through ``atan2`` so huge or tiny ratios stay finite.
    """
    y1, y2 = float(y[0]), float(y[1])
    if y1 == 0.0:
        return math.pi / 2
    return 3 * math.pi / 4 - math.atan2(y2 * y2, y1 * y1) / 2


def remark_cone_map() -> ConeMap:
    return ConeMap(lambda y: sector_cone(0.0, remark_theta(y)), 2, "sector [0, theta(y)]")


def paper_remark(scale: float = 1.0, shift: float = 0.0) -> ProblemInstance:
    """``F(x) = (s (x - c)^2, s (x - c))`` on ``C = R`` under the sector order.

    With the defaults this is ``F(x) = (x^2, x)``, whose unique solution is 0;
    ``scale`` and ``shift`` move the solution to ``shift``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")

    def F(x):
        t = x[0] - shift
        return np.array([scale * t * t, scale * t])

    def subgrad(x):
        return np.array([[2.0 * scale * (x[0] - shift)], [scale]])

    name = "paper_remark" if (scale, shift) == (1.0, 0.0) else "paper_remark_scaled"
    return ProblemInstance(
        VectorFunctionOracle(1, 2, F, subgrad),
        remark_cone_map(),
        WholeSpace(1),
        name,
        np.array([shift]),
        {"scale": float(scale), "shift": float(shift)},
    )


def example_3_2() -> ProblemInstance:
    """``F(x) = (x_1^2 + x_2^2 - 5, x_2)`` on ``[0, 1]^2`` with a three-piece cone map.

    ``F`` has image in ``[-5, -3] x [0, 1]`` where the order is ``-R^2_+``;
    componentwise convexity then breaks K-convexity. Used as a negative
    fixture for :func:`check_k_convexity`.
    """

    def cone(y):
        y1 = y[0]
        if y1 >= -1.0:
            return PolyhedralCone.orthant(2)
        if y1 > -2.0:
            return sector_cone(-math.pi - math.pi * y1, -math.pi / 2 - math.pi * y1)
        return PolyhedralCone(-np.eye(2))

    def F(x):
        return np.array([x[0] ** 2 + x[1] ** 2 - 5.0, x[1]])

    def grad(x):
        return np.array([[2.0 * x[0], 2.0 * x[1]], [0.0, 1.0]])

    return ProblemInstance(
        VectorFunctionOracle(2, 2, F, grad),
        ConeMap(cone, 2, "piecewise R^2_+ / sector / -R^2_+"),
        Box(np.zeros(2), np.ones(2)),
        "example_3_2",
    )


def random_affine_orthant(rng: np.random.Generator, n: int, m: int, box: bool = True,
                          slack: float = 0.5) -> ProblemInstance:
    """Random affine instance with a planted solution ``x_feas`` inside ``C``.

    ``b = A x_feas + s`` with ``s >= 0``, so ``x_feas`` satisfies every row.
    With ``box`` set, ``C = [-3, 3]^n``.
    """
    A = rng.standard_normal((m, n))
    x_feas = rng.uniform(-1.0, 1.0, n)
    b = A @ x_feas + rng.uniform(0.0, slack, m)
    feasible = Box(-3.0 * np.ones(n), 3.0 * np.ones(n)) if box else WholeSpace(n)
    return affine_orthant(A, b, feasible, x_feas, name="affine_orthant_random")


def solution_halfspaces(p: ProblemInstance):
    """Halfspace form of ``S*`` for affine-orthant instances with polyhedral ``C``."""
    if "A" not in p.params:
        raise ValueError(f"{p.name} is not an affine-orthant instance")
    C_rows = as_halfspaces(p.feasible)
    if C_rows is None:
        raise ValueError("C is not polyhedral")
    A, b = p.params["A"], p.params["b"]
    rows = [Halfspace(a, bi) for a, bi in zip(A, b) if np.linalg.norm(a) > 0]
    return rows + C_rows
