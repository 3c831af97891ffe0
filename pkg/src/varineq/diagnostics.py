"""Brute-force solution scans and sampled assumption smoke tests.

The grid scan is the independent oracle for the solution set at desk scale
(n <= 3). The continuity smoke test only looks for jumps in a cone map; a
clean result does not certify that the map's graph is closed.
"""

import csv
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cones import ConeMap, _as_vector, boundary_rays_2d
from .problems import CheckReport, ProblemInstance, is_solution, residual

MAX_SCAN_DIM = 3


@dataclass
class ScanReport:
    """Grid nodes that passed :func:`is_solution`.

    ``indices`` are integer grid coordinates of the candidates, so reports on
    the same grid can be merged and midpoints snapped back to nodes.
    """

    candidates: np.ndarray
    residuals: np.ndarray
    indices: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    resolution: int
    tol: float

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / max(self.resolution - 1, 1)

    def __len__(self):
        return self.candidates.shape[0]

    def merge(self, other: "ScanReport") -> "ScanReport":
        """Union of two reports taken on the same grid."""
        if not (np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)
                and self.resolution == other.resolution):
            raise ValueError("reports must share the grid to be merged")
        return ScanReport(
            np.vstack([self.candidates, other.candidates]),
            np.concatenate([self.residuals, other.residuals]),
            np.vstack([self.indices, other.indices]),
            self.lo, self.hi, self.resolution, max(self.tol, other.tol),
        )

    def nearest_candidate_distance(self, x) -> float:
        if len(self) == 0:
            return np.inf
        return float(np.min(np.linalg.norm(self.candidates - np.asarray(x, dtype=float), axis=1)))

    def to_csv(self, path):
        """Write ``x_1..x_n, residual`` rows with a header."""
        n = self.lo.shape[0]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{i + 1}" for i in range(n)] + ["residual"])
            for x, r in zip(self.candidates, self.residuals):
                writer.writerow([f"{v:.17g}" for v in x] + [f"{r:.17g}"])


def grid_solution_scan(p: ProblemInstance, box, resolution: int, tol: float = 1e-6) -> ScanReport:
    """Evaluate :func:`is_solution` on every node of a regular grid over ``box``.

    ``box`` is ``(lo, hi)``; ``resolution`` counts nodes per axis, endpoints
    included.
    """
    if p.n > MAX_SCAN_DIM:
        raise ValueError(f"grid scans are limited to n <= {MAX_SCAN_DIM}, got n = {p.n}")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    lo = _as_vector(np.broadcast_to(np.asarray(box[0], dtype=float), (p.n,)), p.n, "lo").copy()
    hi = _as_vector(np.broadcast_to(np.asarray(box[1], dtype=float), (p.n,)), p.n, "hi").copy()
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(p.n)]
    cands, resids, idx = [], [], []
    for index in itertools.product(range(resolution), repeat=p.n):
        x = np.array([axes[i][j] for i, j in enumerate(index)])
        if is_solution(p, x, tol):
            cands.append(x)
            resids.append(residual(p, x))
            idx.append(index)
    return ScanReport(
        np.array(cands).reshape(-1, p.n),
        np.array(resids),
        np.array(idx, dtype=int).reshape(-1, p.n),
        lo, hi, resolution, tol,
    )


def convexity_of_S_star_check(report: ScanReport, samples: int = 200, tol: float = 0.0,
                              seed: int = 0) -> bool:
    """Sampled midpoint-convexity test of the scanned solution set.

    For random candidate pairs and random ratios, the point on the segment is
    snapped to the grid; the test passes when one of the surrounding nodes
    (floor or ceil per axis, widened by ``tol`` cells) is itself a candidate.
    """
    if len(report) <= 1:
        return True
    rng = np.random.default_rng(seed)
    members = {tuple(i) for i in report.indices}
    widen = int(np.ceil(tol))
    n = report.indices.shape[1]
    for _ in range(samples):
        i, j = rng.integers(0, len(report), size=2)
        t = rng.uniform()
        pos = t * report.indices[i] + (1.0 - t) * report.indices[j]
        lows = np.floor(pos).astype(int) - widen
        highs = np.ceil(pos).astype(int) + widen
        neighbours = itertools.product(*[range(lows[d], highs[d] + 1) for d in range(n)])
        if not any(nb in members for nb in neighbours):
            return False
    return True


@dataclass
class ContinuityReport:
    deviations: np.ndarray
    flagged: list = field(default_factory=list)
    threshold: float = 0.0
    note: str = "sampled necessary condition only; cannot certify closedness"

    @property
    def ok(self):
        return not self.flagged


def _ray_angles(cone):
    rays = boundary_rays_2d(cone)
    return np.arctan2(rays[:, 1], rays[:, 0])


def _angular_hausdorff(a, b):
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return np.inf
    diff = np.abs(np.angle(np.exp(1j * (a[:, None] - b[None, :]))))
    return float(max(diff.min(axis=1).max(), diff.min(axis=0).max()))


def _normal_hausdorff(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def cone_map_continuity_smoke(cone_map: ConeMap, points: Sequence, perturbation: float = 1e-6,
                              threshold: float = None, directions: int = 8) -> ContinuityReport:
    """Look for jumps of ``K(y)`` under small perturbations of ``y``.

    In 2D the deviation is the angular Hausdorff distance between boundary
    rays of ``K(y)`` and ``K(y')``; otherwise the Hausdorff distance between
    unit normal sets. A deviation above ``threshold`` (default
    ``sqrt(perturbation)``) is flagged.
    """
    if threshold is None:
        threshold = float(np.sqrt(perturbation))
    m = cone_map.dim
    if m == 2:
        angs = np.linspace(0.0, 2 * np.pi, directions, endpoint=False)
        dirs = np.column_stack([np.cos(angs), np.sin(angs)])
    else:
        dirs = np.random.default_rng(0).standard_normal((directions, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    devs = []
    flagged = []
    for y in points:
        y = _as_vector(y, m)
        base = cone_map(y)
        worst = 0.0
        for d in dirs:
            other = cone_map(y + perturbation * d)
            if m == 2:
                dev = _angular_hausdorff(_ray_angles(base), _ray_angles(other))
            else:
                dev = _normal_hausdorff(base.normals, other.normals)
            worst = max(worst, dev)
        devs.append(worst)
        if worst > threshold:
            flagged.append({"y": y, "deviation": worst})
    return ContinuityReport(np.array(devs), flagged, threshold)


def sampled_subgradient_bound(p: ProblemInstance, samples) -> CheckReport:
    """Largest spectral norm of the subgradient oracle over ``samples``.

    A finite sampled bound is consistent with local boundedness of the
    subgradients; it is not a proof of it.
    """
    report = CheckReport("subgradient bound")
    norms = [float(np.linalg.norm(p.oracle.subgradient(x), 2)) for x in samples]
    report.checked = len(norms)
    report.note = f"max sampled ||U|| = {max(norms) if norms else float('nan'):.6g}"
    if norms and not np.all(np.isfinite(norms)):
        report.violations.append({"norms": norms})
    return report
