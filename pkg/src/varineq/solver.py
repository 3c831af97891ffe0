"""Subgradient projection loop with the R and S projection rules, plus trace audits.

Variant R: ``x_{k+1} = P_{C cap H(x_k, U_k)}(x_k)``.
Variant S: ``x_{k+1} = P_{C cap W(x_k) cap H(x_k, U_k)}(x_0)``, re-projected
from ``x_0`` every iteration.

Exact fixed points ``x_{k+1} == x_k`` do not occur in floating point, so the
loop stops on ``||x_{k+1} - x_k|| <= step_tol`` and then confirms the final
point with :func:`is_solution`. A residual test runs ahead of each step and
ends the loop early at a solution.
"""

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .cones import _as_vector
from .errors import EmptyCutError, ProjectionError
from .problems import (
    ProblemInstance,
    build_H_halfspaces,
    is_solution,
    localization_halfspace,
    residual,
)
from .sets import dykstra_project, project_set

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    SOLVED = "Solved"
    STOPPED_BY_STEP = "StoppedByStep"
    MAX_ITER = "MaxIter"
    PROJECTION_FAILURE = "ProjectionFailure"
    EMPTY_CUT = "EmptyCut"


@dataclass(frozen=True)
class SolverConfig:
    variant: str = "R"
    step_tol: float = 1e-9
    residual_tol: float = 1e-12
    max_iter: int = 1000
    projection_tol: float = 1e-11
    record_trace: bool = True
    solution_tol: float = 1e-6
    max_cycles: int = 100_000

    def __post_init__(self):
        variant = str(self.variant).upper()
        if variant not in ("R", "S"):
            raise ValueError(f"variant must be 'R' or 'S', got {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        for name in ("step_tol", "residual_tol", "projection_tol", "solution_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.projection_tol < self.step_tol:
            raise ValueError("projection_tol must be smaller than step_tol")


@dataclass
class IterationRecord:
    """State at iteration ``k``.

    ``step_norm`` is ``||x_{k+1} - x_k||`` and is None on the terminal record,
    where no step was taken. ``subgrad_norm`` is the spectral norm of ``U_k``.
    """

    k: int
    x: np.ndarray
    residual: float
    step_norm: Optional[float]
    dist_to_known: Optional[float] = None
    subgrad_norm: Optional[float] = None


@dataclass
class SolveResult:
    status: Status
    final_x: np.ndarray
    trace: List[IterationRecord]
    variant: str
    x0: np.ndarray
    iterations: int
    sound: Optional[bool] = None
    message: str = ""
    notes: List[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        """Solved, or stopped by step at a point that passed the solution check."""
        return self.status is Status.SOLVED or (self.status is Status.STOPPED_BY_STEP and bool(self.sound))


def solve(p: ProblemInstance, x0, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Run the selected variant from ``x0``.

    ``x0`` is projected onto ``C`` first when it lies outside (noted in
    ``result.notes``). Cut emptiness and projection failures end the run with
    the matching status and the last iterate.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    x0 = _as_vector(x0, p.n, "x0").copy()
    notes = []
    projected = project_set(p.feasible, x0, cfg.projection_tol, cfg.max_cycles)
    if np.linalg.norm(projected - x0) > cfg.projection_tol * max(1.0, np.linalg.norm(x0)):
        notes.append(f"x0 was outside C and was projected (moved {np.linalg.norm(projected - x0):.3e})")
        log.info(notes[-1])
        x0 = projected
    trace: List[IterationRecord] = []
    known = p.known_solution

    def record(k, x, res, step, U=None):
        if not cfg.record_trace:
            return
        dist = None if known is None else float(np.linalg.norm(x - known))
        unorm = None if U is None else float(np.linalg.norm(U, 2))
        trace.append(IterationRecord(k, x.copy(), float(res), step, dist, unorm))

    def finish(status, x, k, sound=None, message=""):
        log.info("%s after %d iterations: %s", status.value, k, message)
        return SolveResult(status, x, trace, cfg.variant, x0, k, sound, message, notes,
                           time.perf_counter() - start)

    x = x0
    for k in range(cfg.max_iter):
        res = residual(p, x)
        if res <= cfg.residual_tol:
            record(k, x, res, None)
            return finish(Status.SOLVED, x, k, True, f"residual {res:.3e}")
        U = p.oracle.subgradient(x)
        try:
            cut = build_H_halfspaces(p, x, U)
        except EmptyCutError as exc:
            record(k, x, res, None, U)
            return finish(Status.EMPTY_CUT, x, k, False, str(exc))
        try:
            if cfg.variant == "R":
                x_next = dykstra_project([p.feasible, *cut], x, cfg.projection_tol, cfg.max_cycles)
            else:
                members = [p.feasible, *cut, localization_halfspace(x, x0)]
                x_next = dykstra_project(members, x0, cfg.projection_tol, cfg.max_cycles)
        except ProjectionError as exc:
            record(k, x, res, None, U)
            return finish(Status.PROJECTION_FAILURE, x, k, False, str(exc))
        step = float(np.linalg.norm(x_next - x))
        record(k, x, res, step, U)
        log.debug("k=%d residual=%.3e step=%.3e", k, res, step)
        x = x_next
        if step <= cfg.step_tol:
            res = residual(p, x)
            record(k + 1, x, res, None)
            sound = is_solution(p, x, cfg.solution_tol)
            return finish(Status.STOPPED_BY_STEP, x, k + 1, sound, f"step {step:.3e}, residual {res:.3e}")
    res = residual(p, x)
    record(cfg.max_iter, x, res, None)
    return finish(Status.MAX_ITER, x, cfg.max_iter, is_solution(p, x, cfg.solution_tol),
                  f"residual {res:.3e}")


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    name: str
    applicable: bool = True
    passed: bool = True
    worst_slack: float = np.inf
    violations: List[int] = field(default_factory=list)
    message: str = ""

    def __bool__(self):
        return self.applicable and self.passed


TraceLike = Union[SolveResult, Sequence[IterationRecord]]


def _unpack(trace: TraceLike):
    if isinstance(trace, SolveResult):
        return list(trace.trace), trace.variant
    return list(trace), None


def fejer_audit(trace: TraceLike, x_ref, rel_tol: float = 1e-9) -> AuditReport:
    """Check ``||x_{k+1} - x*||^2 <= ||x_k - x*||^2 - ||x_{k+1} - x_k||^2`` along an R trace.

    The slack at step ``k`` is normalised by ``max(1, ||x_k - x*||^2)``; the
    audit fails when any normalised slack drops below ``-rel_tol``.
    """
    records, variant = _unpack(trace)
    report = AuditReport("fejer")
    if variant is not None and variant != "R":
        report.applicable = False
        report.message = f"Fejer inequality applies to variant R, trace is variant {variant}"
        return report
    x_ref = np.asarray(x_ref, dtype=float)
    for cur, nxt in zip(records, records[1:]):
        d_cur = float(np.sum((cur.x - x_ref) ** 2))
        d_next = float(np.sum((nxt.x - x_ref) ** 2))
        step2 = float(np.sum((nxt.x - cur.x) ** 2))
        slack = (d_cur - step2 - d_next) / max(1.0, d_cur)
        report.worst_slack = min(report.worst_slack, slack)
        if slack < -rel_tol:
            report.violations.append(cur.k)
    report.passed = not report.violations
    return report


def s_monotonicity_audit(trace: TraceLike, x0, x_ref=None, mono_tol: float = 1e-10,
                         ball_tol: float = 1e-8) -> AuditReport:
    """Check an S trace: ``||x_k - x0||`` nondecreasing, iterates inside the half-distance ball.

    With ``x_ref`` the projection of ``x0`` onto the solution set, every
    iterate must lie in ``B[(x0 + x_ref)/2, ||x0 - x_ref||/2]``.
    """
    records, variant = _unpack(trace)
    report = AuditReport("s_monotonicity")
    if variant is not None and variant != "S":
        report.applicable = False
        report.message = f"monotonicity audit applies to variant S, trace is variant {variant}"
        return report
    x0 = np.asarray(x0, dtype=float)
    dists = [float(np.linalg.norm(r.x - x0)) for r in records]
    for i in range(1, len(dists)):
        slack = dists[i] - dists[i - 1]
        report.worst_slack = min(report.worst_slack, slack)
        if slack < -mono_tol:
            report.violations.append(records[i].k)
    if x_ref is not None:
        x_ref = np.asarray(x_ref, dtype=float)
        center = 0.5 * (x0 + x_ref)
        radius = 0.5 * float(np.linalg.norm(x0 - x_ref))
        for r in records:
            excess = float(np.linalg.norm(r.x - center)) - radius
            if excess > ball_tol:
                report.violations.append(r.k)
                report.message = "iterate outside the localisation ball"
    report.passed = not report.violations
    return report


def residual_bound_audit(trace: TraceLike, factor: float = 1.0 + 1e-6) -> AuditReport:
    """Check ``residual(x_k) <= factor * L * step_norm(k)`` with ``L = max ||U_k||``.

    Only records with a step are tested. Reported slack is
    ``factor * L * step - residual``.
    """
    records, _ = _unpack(trace)
    report = AuditReport("residual_bound")
    if all(r.step_norm is None for r in records):
        report.message = "no steps to check"
        return report
    norms = [r.subgrad_norm for r in records if r.subgrad_norm is not None]
    if not norms:
        report.applicable = False
        report.message = "trace carries no subgradient norms"
        return report
    L = max(norms)
    for r in records:
        if r.step_norm is None:
            continue
        slack = factor * L * r.step_norm - r.residual
        report.worst_slack = min(report.worst_slack, slack)
        if slack < 0:
            report.violations.append(r.k)
    report.passed = not report.violations
    return report
