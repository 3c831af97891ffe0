"""Feasible sets and the projection engine.

Closed forms cover the whole space, boxes, balls and single halfspaces.
Polyhedra and intersections go through Dykstra's algorithm, which (unlike
plain cyclic projection) converges to the nearest point of the intersection.
:func:`project_qp_oracle` solves small halfspace problems exactly by active
set enumeration and serves as an independent reference.
"""

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from ._activeset import SLOW_CYCLES, polish_projection
from .cones import _as_vector
from .errors import DimensionError, InfeasibleSetError, ProjectionError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_CYCLES = 100_000


class FeasibleSet:
    """Base class. Subclasses are immutable and report their dimension."""

    dim: int

    def contains(self, x, tol: float = 1e-10) -> bool:
        x = _as_vector(x, self.dim, "x")
        return bool(np.linalg.norm(x - project_set(self, x)) <= tol)


@dataclass(frozen=True, eq=False)
class WholeSpace(FeasibleSet):
    dim: int

    def contains(self, x, tol=1e-10):
        _as_vector(x, self.dim, "x")
        return True


@dataclass(frozen=True, eq=False)
class Halfspace(FeasibleSet):
    """``{z : <a, z> <= b}``, stored with ``||a|| = 1``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _as_vector(self.a, name="a").copy()
        norm = np.linalg.norm(a)
        if not norm > 0.0 or not np.isfinite(norm):
            raise ValueError("halfspace normal must be finite and nonzero")
        a /= norm
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b) / norm)

    @property
    def dim(self):
        return self.a.shape[0]

    def violation(self, z) -> float:
        return float(self.a @ z - self.b)

    def contains(self, x, tol=1e-10):
        return self.violation(_as_vector(x, self.dim, "x")) <= tol


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, name="lo").copy()
        hi = _as_vector(self.hi, lo.shape[0], "hi").copy()
        if np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def halfspaces(self):
        """Finite bounds as halfspaces."""
        rows = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if np.isfinite(self.hi[i]):
                rows.append(Halfspace(e, self.hi[i]))
            if np.isfinite(self.lo[i]):
                rows.append(Halfspace(-e, -self.lo[i]))
        return rows


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _as_vector(self.center, name="center").copy()
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.shape[0]


@dataclass(frozen=True, eq=False)
class Polyhedron(FeasibleSet):
    halfspaces: tuple
    dim: int

    def __init__(self, halfspaces: Sequence[Halfspace], dim=None):
        halfspaces = tuple(halfspaces)
        if dim is None:
            if not halfspaces:
                raise DimensionError("an empty polyhedron needs an explicit dimension")
            dim = halfspaces[0].dim
        if any(h.dim != dim for h in halfspaces):
            raise DimensionError("all halfspaces of a polyhedron must share one dimension")
        object.__setattr__(self, "halfspaces", halfspaces)
        object.__setattr__(self, "dim", int(dim))


@dataclass(frozen=True, eq=False)
class Intersection(FeasibleSet):
    members: tuple
    dim: int

    def __init__(self, members: Sequence[FeasibleSet]):
        members = tuple(members)
        if not members:
            raise ValueError("an intersection needs at least one member")
        dim = members[0].dim
        if any(s.dim != dim for s in members):
            raise DimensionError("all members of an intersection must share one dimension")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "dim", dim)


def flatten(members: Sequence[FeasibleSet]) -> list:
    """Expand polyhedra and nested intersections into primitive sets; drop whole spaces."""
    out = []
    for s in members:
        if isinstance(s, Intersection):
            out.extend(flatten(s.members))
        elif isinstance(s, Polyhedron):
            out.extend(s.halfspaces)
        elif isinstance(s, WholeSpace):
            continue
        else:
            out.append(s)
    return out


def as_halfspaces(s: FeasibleSet):
    """Halfspace description of a polyhedral set, or None for balls."""
    rows = []
    for prim in flatten([s]):
        if isinstance(prim, Halfspace):
            rows.append(prim)
        elif isinstance(prim, Box):
            rows.extend(prim.halfspaces())
        else:
            return None
    return rows


def _project_closed_form(s, x):
    if isinstance(s, WholeSpace):
        return x.copy()
    if isinstance(s, Box):
        return np.clip(x, s.lo, s.hi)
    if isinstance(s, Ball):
        d = x - s.center
        nd = np.linalg.norm(d)
        return x.copy() if nd <= s.radius else s.center + d * (s.radius / nd)
    if isinstance(s, Halfspace):
        return x - max(0.0, s.violation(x)) * s.a
    raise TypeError(f"no closed-form projection for {type(s).__name__}")


def _pack(prims, n):
    k = len(prims)
    kinds = np.empty(k, dtype=np.int64)
    vec1 = np.zeros((k, n))
    vec2 = np.zeros((k, n))
    scal = np.zeros(k)
    for i, s in enumerate(prims):
        if isinstance(s, Halfspace):
            kinds[i], vec1[i], scal[i] = _kernels.KIND_HALFSPACE, s.a, s.b
        elif isinstance(s, Box):
            kinds[i], vec1[i], vec2[i] = _kernels.KIND_BOX, s.lo, s.hi
        elif isinstance(s, Ball):
            kinds[i], vec1[i], scal[i] = _kernels.KIND_BALL, s.center, s.radius
        else:
            raise TypeError(f"cannot pack {type(s).__name__}")
    return kinds, vec1, vec2, scal


def dykstra_project(members: Sequence[FeasibleSet], x, tol: float = DEFAULT_TOL,
                    max_cycles: int = DEFAULT_MAX_CYCLES, polish: bool = True) -> np.ndarray:
    """Nearest point of the intersection of ``members`` to ``x``.

    Members are visited in the given order. The loop ends once a full cycle
    moves the iterate by at most ``tol * max(1, ||x||)`` per member. Slow
    runs on a polyhedral intersection hand their last iterate to a certified
    active-set solve, which is exact when it succeeds and is tried before any
    error is raised (skipped with ``polish=False``).

    Raises
    ------
    InfeasibleSetError
        Cap reached while the correction vectors keep growing, the signature
        of an empty intersection.
    ProjectionError
        Cap reached otherwise.
    """
    members = list(members)
    if not members:
        raise ValueError("dykstra_project needs at least one member")
    n = members[0].dim
    x = _as_vector(x, n, "x")
    if any(s.dim != n for s in members):
        raise DimensionError("members and x must share one dimension")
    prims = flatten(members)
    if not prims:
        return x.copy()
    if len(prims) == 1:
        return _project_closed_form(prims[0], x)
    abs_tol = tol * max(1.0, float(np.linalg.norm(x)))
    out, disp, cycles, corr_mid, corr_end = _kernels.dykstra(
        *_pack(prims, n), x.copy(), abs_tol, max_cycles
    )
    if polish and (disp > abs_tol or cycles > SLOW_CYCLES):
        rows = as_halfspaces(Intersection(prims))
        if rows:
            exact = polish_projection(np.array([h.a for h in rows]), np.array([h.b for h in rows]),
                                      x, out, tol)
            if exact is not None:
                return exact
    if disp > abs_tol:
        if corr_end > 1.5 * corr_mid and corr_end > 1.0:
            raise InfeasibleSetError(
                f"intersection appears empty: displacement {disp:.3e} after {cycles} cycles, "
                f"corrections grew {corr_mid:.3e} -> {corr_end:.3e}",
                last_iterate=out,
                displacement=disp,
            )
        raise ProjectionError(
            f"Dykstra did not settle in {cycles} cycles (displacement {disp:.3e})",
            last_iterate=out,
            displacement=disp,
        )
    return out


def project_set(s: FeasibleSet, x, tol: float = DEFAULT_TOL,
                max_cycles: int = DEFAULT_MAX_CYCLES, polish: bool = True) -> np.ndarray:
    """Orthogonal projection of ``x`` onto ``s``."""
    x = _as_vector(x, s.dim, "x")
    if isinstance(s, (WholeSpace, Box, Ball, Halfspace)):
        return _project_closed_form(s, x)
    return dykstra_project([s], x, tol, max_cycles, polish)


def project_qp_oracle(halfspaces: Sequence[Halfspace], x, tol: float = 1e-9) -> np.ndarray:
    """Exact projection onto ``{z : <a_i, z> <= b_i}`` by active-set enumeration.

    Every subset of constraints is tried as the active set: the least-norm
    correction onto its affine hull is computed with a minimum-norm
    least-squares solve, and the candidate is kept if it is feasible and its
    multipliers are nonnegative. Exponential in the number of halfspaces;
    meant for a dozen rows or fewer.
    """
    halfspaces = list(halfspaces)
    x = np.asarray(x, dtype=float)
    if not halfspaces:
        return x.copy()
    n = halfspaces[0].dim
    x = _as_vector(x, n, "x")
    A = np.array([h.a for h in halfspaces])
    b = np.array([h.b for h in halfspaces])
    scale = max(1.0, float(np.linalg.norm(x)), float(np.max(np.abs(b))))
    feas_tol = tol * scale
    best, best_obj = None, np.inf
    for size in range(0, min(len(halfspaces), n) + 1):
        for active in itertools.combinations(range(len(halfspaces)), size):
            if size == 0:
                z, mult = x.copy(), np.zeros(0)
            else:
                As, bs = A[list(active)], b[list(active)]
                # solve on As itself; the normal equations square its conditioning
                delta, *_ = np.linalg.lstsq(As, As @ x - bs, rcond=None)
                z = x - delta
                if np.max(np.abs(As @ z - bs)) > feas_tol:
                    continue
                mult, *_ = np.linalg.lstsq(As.T, delta, rcond=None)
            if np.any(mult < -feas_tol) or np.any(A @ z - b > feas_tol):
                continue
            obj = float((z - x) @ (z - x))
            if obj < best_obj:
                best, best_obj = z, obj
    if best is None:
        raise InfeasibleSetError("no feasible active set: the polyhedron is empty", last_iterate=x)
    return best
