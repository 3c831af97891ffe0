"""Polyhedral cones given by facet normals.

A cone is stored as the unit rows ``u_1, ..., u_r`` of its normal matrix and
represents ``K = {y : <u_i, y> >= 0 for all i}``. The dual cone ``K*`` is the
conic hull of the same rows, so membership in ``K`` is a sign test while
membership in ``K*`` needs a nonnegative least-squares solve.

Pointedness is not checked. :func:`sector_cone` guarantees it for the 2D
angular sectors; cones built directly from normals carry no such guarantee.
Duplicate or opposite normals are kept as given (a pair ``u, -u`` encodes a
lower-dimensional cone such as a ray).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from ._activeset import SLOW_CYCLES, polish_projection
from .errors import DimensionError, NNLSConvergenceError, ProjectionError

DEFAULT_MAX_CYCLES = 10_000
DEFAULT_NNLS_ITER = 10_000


def _as_vector(y, m=None, name="y"):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {y.shape}")
    if m is not None and y.shape[0] != m:
        raise DimensionError(f"{name} has length {y.shape[0]}, expected {m}")
    return y


@dataclass(frozen=True, eq=False)
class PolyhedralCone:
    """Closed convex cone ``{y : normals @ y >= 0}``.

    Parameters
    ----------
    normals : array_like, shape (r, m)
        Facet normals (dual generators). Rows are normalised to unit length
        on construction; zero rows are rejected.
    """

    normals: np.ndarray

    def __post_init__(self):
        normals = np.array(self.normals, dtype=float, copy=True)
        if normals.ndim == 1:
            normals = normals[None, :]
        if normals.ndim != 2 or normals.shape[0] < 1 or normals.shape[1] < 1:
            raise DimensionError(f"normals must have shape (r, m) with r, m >= 1, got {normals.shape}")
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms <= 0.0) or not np.all(np.isfinite(norms)):
            raise ValueError("every facet normal must be finite and nonzero")
        normals = normals / norms[:, None]
        normals.setflags(write=False)
        object.__setattr__(self, "normals", normals)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def n_normals(self) -> int:
        return self.normals.shape[0]

    @classmethod
    def orthant(cls, m: int) -> "PolyhedralCone":
        """The nonnegative orthant of R^m."""
        return cls(np.eye(m))

    def negated(self) -> "PolyhedralCone":
        """The cone ``-K``."""
        return PolyhedralCone(-self.normals)

    def same_as(self, other: "PolyhedralCone") -> bool:
        """True when both cones carry identical normal lists."""
        return self.normals.shape == other.normals.shape and np.array_equal(self.normals, other.normals)

    def __repr__(self):
        return f"PolyhedralCone(dim={self.dim}, n_normals={self.n_normals})"


@dataclass(frozen=True)
class ConeMap:
    """Point-to-cone map ``y -> K(y)`` on R^m.

    ``eval`` must be a pure function: equal inputs give identical normal
    lists, and it may be called from several threads at once. Closedness of
    the graph is the caller's obligation; see
    :func:`varineq.diagnostics.cone_map_continuity_smoke` for a sampled
    smoke test.
    """

    eval: Callable[[np.ndarray], PolyhedralCone]
    dim: int
    descriptor: str = field(default="cone map")

    def __call__(self, y) -> PolyhedralCone:
        y = _as_vector(y, self.dim)
        cone = self.eval(y)
        if cone.dim != self.dim:
            raise DimensionError(f"{self.descriptor} returned a cone of dimension {cone.dim}, expected {self.dim}")
        return cone

    @classmethod
    def constant(cls, cone: PolyhedralCone, descriptor=None) -> "ConeMap":
        return cls(lambda y: cone, cone.dim, descriptor or f"constant {cone!r}")


def sector_cone(theta_lo: float, theta_hi: float) -> PolyhedralCone:
    """2D cone ``{r (cos phi, sin phi) : r >= 0, phi in [theta_lo, theta_hi]}``.

    The angular width must lie in ``[0, pi)``. A zero width gives a ray: the
    two facet normals are then opposite and only cut out a line, so the ray
    direction is added as a third normal.
    """
    width = theta_hi - theta_lo
    if not (0.0 <= width < np.pi):
        raise ValueError(f"sector width must be in [0, pi), got {width!r}")
    normals = np.array(
        [
            [-np.sin(theta_lo), np.cos(theta_lo)],
            [np.sin(theta_hi), -np.cos(theta_hi)],
        ]
    )
    if width == 0.0:
        normals = np.vstack([normals, [np.cos(theta_lo), np.sin(theta_lo)]])
    return PolyhedralCone(normals)


def _scale(y):
    return max(1.0, float(np.linalg.norm(y)))


def _check_dims(cone, y, name="y"):
    return _as_vector(y, cone.dim, name)


def cone_contains(cone: PolyhedralCone, y, tol: float = 1e-12) -> bool:
    """``y in K`` up to ``tol * max(1, ||y||)`` on each facet."""
    y = _check_dims(cone, y)
    return bool(np.all(cone.normals @ y >= -tol * _scale(y)))


def in_minus_cone(cone: PolyhedralCone, y, tol: float = 1e-12) -> bool:
    """``y in -K``, the solution test ``F(x) in -K(F(x))``."""
    y = _check_dims(cone, y)
    return bool(np.all(cone.normals @ y <= tol * _scale(y)))


def dual_nnls(cone: PolyhedralCone, z, tol: float = 1e-10, max_iter: int = DEFAULT_NNLS_ITER):
    """Nonnegative combination of the normals closest to ``z``.

    Returns ``(lam, residual)``. Raises :class:`NNLSConvergenceError` when
    neither the residual reaches ``tol * max(1, ||z||)`` nor the projected
    gradient vanishes within ``max_iter`` iterations.
    """
    z = _check_dims(cone, z, "z")
    gens = np.ascontiguousarray(cone.normals)
    lipschitz = float(np.linalg.eigvalsh(gens @ gens.T)[-1])
    res_tol = tol * _scale(z)
    lam, best, _, ok = _kernels.nnls(gens, z, lipschitz, res_tol, 1e-3 * res_tol, max_iter)
    if not ok:
        raise NNLSConvergenceError(
            f"NNLS did not converge in {max_iter} iterations (best residual {best:.3e})", best
        )
    return lam, best


def dual_contains(cone: PolyhedralCone, z, tol: float = 1e-10, max_iter: int = DEFAULT_NNLS_ITER) -> bool:
    """``z in K*``, decided by the NNLS residual against the normals."""
    _, residual = dual_nnls(cone, z, tol, max_iter)
    return residual <= tol * _scale(np.asarray(z, dtype=float))


def _pack_halfspaces(normals, offsets=None):
    r, m = normals.shape
    kinds = np.zeros(r, dtype=np.int64)
    vec1 = np.ascontiguousarray(normals, dtype=float)
    vec2 = np.zeros((r, m))
    scal = np.zeros(r) if offsets is None else np.asarray(offsets, dtype=float)
    return kinds, vec1, vec2, scal


def project_cone(cone: PolyhedralCone, y, tol: float = 1e-12, max_cycles: int = DEFAULT_MAX_CYCLES,
                 polish: bool = True) -> np.ndarray:
    """Nearest point of ``K`` to ``y``.

    Dykstra cycles over the halfspaces ``<u_i, p> >= 0``; stops once no
    member moves the iterate by more than ``tol * max(1, ||y||)`` in a cycle.
    Slow runs (narrow cones) hand their last iterate to a certified
    active-set solve, which is exact when it succeeds; ``polish=False``
    skips it.
    """
    y = _check_dims(cone, y)
    packed = _pack_halfspaces(-cone.normals)
    x, disp, cycles, _, _ = _kernels.dykstra(*packed, y.copy(), tol * _scale(y), max_cycles)
    if polish and (disp > tol * _scale(y) or cycles > SLOW_CYCLES):
        exact = polish_projection(-cone.normals, np.zeros(cone.n_normals), y, x, tol)
        if exact is not None:
            return exact
    if disp > tol * _scale(y):
        raise ProjectionError(
            f"cone projection did not settle in {cycles} cycles (displacement {disp:.3e})",
            last_iterate=x,
            displacement=disp,
        )
    return x


def moreau_split(cone: PolyhedralCone, y, tol: float = 1e-12, max_cycles: int = DEFAULT_MAX_CYCLES,
                 polish: bool = True):
    """Split ``y = y_plus + y_minus`` with ``y_plus in K*``, ``y_minus in -K``.

    ``y_minus`` is the projection of ``y`` onto ``-K``; the two parts are
    orthogonal. ``||y_plus||`` is zero exactly when ``y in -K``.
    """
    y = _check_dims(cone, y)
    y_minus = project_cone(cone.negated(), y, tol, max_cycles, polish)
    y_plus = y - y_minus
    return y_plus, y_minus


def boundary_rays_2d(cone: PolyhedralCone, tol: float = 1e-12) -> np.ndarray:
    """Unit generators of a 2D cone.

    Returns the extreme rays, plus the inward normals when ``K`` contains a
    line (halfplane case) so the rows always generate ``K``. An empty array
    means ``K = {0}``.
    """
    if cone.dim != 2:
        raise DimensionError("boundary_rays_2d needs a cone in R^2")
    candidates = []
    for u in cone.normals:
        t = np.array([-u[1], u[0]])
        candidates.extend([t, -t])
    rays = []
    for c in candidates:
        if np.all(cone.normals @ c >= -tol) and not any(np.allclose(c, r, atol=1e-12) for r in rays):
            rays.append(c)
    has_line = any(
        np.allclose(a, -b, atol=1e-12) for i, a in enumerate(rays) for b in rays[i + 1:]
    )
    if has_line:
        for u in cone.normals:
            if np.all(cone.normals @ u >= -tol) and not any(np.allclose(u, r, atol=1e-12) for r in rays):
                rays.append(u.copy())
    return np.array(rays).reshape(-1, 2)


def sample_rays(cone: PolyhedralCone, count: int, seed: int = 0) -> np.ndarray:
    """Unit rays of ``K``: exact generators in 2D, projected random directions otherwise."""
    if cone.dim == 2:
        return boundary_rays_2d(cone)
    rng = np.random.default_rng(seed)
    rays = []
    for d in rng.standard_normal((count, cone.dim)):
        p = project_cone(cone, d)
        norm = np.linalg.norm(p)
        if norm > 1e-9:
            rays.append(p / norm)
    return np.array(rays).reshape(-1, cone.dim)
