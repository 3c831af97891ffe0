"""Batch front-end: load a JSON run spec, solve, write a trace CSV and a summary.

Example spec::

    {
      "problem": {"family": "affine_orthant", "A": [[1, 0], [0, 1]], "b": [0, 0]},
      "feasible_set": {"type": "box", "lo": [-3, -3], "hi": [3, 3]},
      "variant": "S",
      "x0": [2.0, 3.0],
      "tolerances": {"step_tol": 1e-9, "residual_tol": 1e-12},
      "max_iter": 1000,
      "output": {"trace": "trace.csv", "summary": "summary.json"}
    }

Families: ``paper_remark`` (optional ``scale``, ``shift``) and
``affine_orthant`` (``A``, ``b``). Set types: ``whole_space``, ``box``,
``ball``, ``halfspace``, ``polyhedron``, ``intersection``. Arbitrary
functions enter only through the Python API.

Exit codes: 0 for a sound solution, 1 for solver failure statuses, 2 for
unreadable or inconsistent specs. ``VARINEQ_LOG_LEVEL`` sets log verbosity.
"""

import argparse
import copy
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .errors import DimensionError
from .problems import ProblemInstance, affine_orthant, paper_remark, residual, solution_halfspaces
from .sets import Ball, Box, FeasibleSet, Halfspace, Intersection, Polyhedron, WholeSpace, project_qp_oracle
from .solver import SolveResult, SolverConfig, solve

log = logging.getLogger("varineq")

FAMILIES = ("paper_remark", "affine_orthant")
TOLERANCE_KEYS = ("step_tol", "residual_tol", "projection_tol", "solution_tol")
QP_ORACLE_MAX_ROWS = 14


class SpecError(ValueError):
    """The run spec cannot be parsed or is inconsistent."""


@dataclass
class RunSpec:
    problem: dict
    x0: list
    feasible_set: Optional[dict] = None
    variant: str = "R"
    tolerances: dict = field(default_factory=dict)
    max_iter: int = 1000
    known_solution: Optional[list] = None
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "problem": self.problem,
            "feasible_set": self.feasible_set,
            "variant": self.variant,
            "x0": self.x0,
            "tolerances": self.tolerances,
            "max_iter": self.max_iter,
            "output": self.output,
        }
        if self.known_solution is not None:
            out["known_solution"] = self.known_solution
        return copy.deepcopy(out)

    def config(self) -> SolverConfig:
        return SolverConfig(variant=self.variant, max_iter=self.max_iter, **self.tolerances)


def _float_list(value, what):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{what} must be numeric: {exc}") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise SpecError(f"{what} must be a flat list of finite numbers")
    return [float(v) for v in arr]


def parse_spec(data: dict) -> RunSpec:
    """Validate a decoded JSON document into a :class:`RunSpec`."""
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object")
    known_keys = {"problem", "feasible_set", "variant", "x0", "tolerances", "max_iter",
                  "known_solution", "output"}
    unknown = set(data) - known_keys
    if unknown:
        raise SpecError(f"unknown keys: {sorted(unknown)}")
    if "problem" not in data:
        raise SpecError("missing required key 'problem'")
    if "x0" not in data:
        raise SpecError("missing required key 'x0'")
    problem = data["problem"]
    if not isinstance(problem, dict) or problem.get("family") not in FAMILIES:
        raise SpecError(f"problem.family must be one of {FAMILIES}")
    variant = str(data.get("variant", "R")).upper()
    if variant not in ("R", "S"):
        raise SpecError("variant must be 'R' or 'S'")
    tolerances = data.get("tolerances", {}) or {}
    if not isinstance(tolerances, dict) or set(tolerances) - set(TOLERANCE_KEYS):
        raise SpecError(f"tolerances may only contain {TOLERANCE_KEYS}")
    for key, val in tolerances.items():
        if not isinstance(val, (int, float)) or not val > 0:
            raise SpecError(f"tolerance {key} must be a positive number")
    max_iter = data.get("max_iter", 1000)
    if not isinstance(max_iter, int) or isinstance(max_iter, bool) or max_iter < 1:
        raise SpecError("max_iter must be a positive integer")
    output = data.get("output", {}) or {}
    if not isinstance(output, dict) or set(output) - {"trace", "summary"}:
        raise SpecError("output may only contain 'trace' and 'summary'")
    spec = RunSpec(
        problem=copy.deepcopy(problem),
        x0=_float_list(data["x0"], "x0"),
        feasible_set=copy.deepcopy(data.get("feasible_set")),
        variant=variant,
        tolerances={k: float(v) for k, v in tolerances.items()},
        max_iter=max_iter,
        known_solution=None if data.get("known_solution") is None
        else _float_list(data["known_solution"], "known_solution"),
        output=dict(output),
    )
    return spec


def load_spec(path) -> RunSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from None
    return parse_spec(data)


def build_set(desc: Optional[dict], n: int) -> FeasibleSet:
    if desc is None:
        return WholeSpace(n)
    if not isinstance(desc, dict) or "type" not in desc:
        raise SpecError("feasible_set entries need a 'type'")
    kind = desc["type"]
    try:
        if kind == "whole_space":
            s = WholeSpace(n)
        elif kind == "box":
            s = Box(np.asarray(desc["lo"], dtype=float), np.asarray(desc["hi"], dtype=float))
        elif kind == "ball":
            s = Ball(np.asarray(desc["center"], dtype=float), float(desc["radius"]))
        elif kind == "halfspace":
            s = Halfspace(np.asarray(desc["a"], dtype=float), float(desc["b"]))
        elif kind == "polyhedron":
            s = Polyhedron([Halfspace(np.asarray(h["a"], dtype=float), float(h["b"]))
                            for h in desc["halfspaces"]], n)
        elif kind == "intersection":
            s = Intersection([build_set(d, n) for d in desc["members"]])
        else:
            raise SpecError(f"unknown feasible_set type {kind!r}")
    except KeyError as exc:
        raise SpecError(f"feasible_set of type {kind!r} is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"invalid feasible_set of type {kind!r}: {exc}") from None
    if s.dim != n:
        raise SpecError(f"feasible_set lives in R^{s.dim}, problem needs R^{n}")
    return s


def build_problem(spec: RunSpec) -> ProblemInstance:
    prob = spec.problem
    family = prob["family"]
    try:
        if family == "paper_remark":
            scale = float(prob.get("scale", 1.0))
            shift = float(prob.get("shift", 0.0))
            base = paper_remark(scale, shift)
            feasible = build_set(spec.feasible_set, 1)
            p = ProblemInstance(base.oracle, base.cone_map, feasible, base.name,
                                base.known_solution, base.params)
        else:
            A = np.asarray(prob["A"], dtype=float)
            if A.ndim != 2:
                raise SpecError("problem.A must be a matrix (list of rows)")
            b = np.asarray(prob["b"], dtype=float)
            feasible = build_set(spec.feasible_set, A.shape[1])
            p = affine_orthant(A, b, feasible)
    except KeyError as exc:
        raise SpecError(f"problem is missing {exc}") from None
    except (DimensionError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"inconsistent problem data: {exc}") from None
    if spec.known_solution is not None:
        p = ProblemInstance(p.oracle, p.cone_map, p.feasible, p.name,
                            np.asarray(spec.known_solution), p.params)
    if len(spec.x0) != p.n:
        raise SpecError(f"x0 has length {len(spec.x0)}, problem needs {p.n}")
    return p


def write_trace(result: SolveResult, path, n: int):
    """CSV columns: k, x_1..x_n, residual, step_norm, dist_to_known (17 significant digits)."""
    def fmt(v):
        return "" if v is None else f"{v:.17g}"

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k"] + [f"x_{i + 1}" for i in range(n)] + ["residual", "step_norm", "dist_to_known"])
        for r in result.trace:
            writer.writerow([r.k] + [fmt(float(v)) for v in r.x] + [fmt(r.residual), fmt(r.step_norm),
                                                                    fmt(r.dist_to_known)])


def summarize(p: ProblemInstance, spec: RunSpec, result: SolveResult) -> dict:
    summary = {
        "status": result.status.value,
        "ok": result.ok,
        "sound": result.sound,
        "variant": result.variant,
        "problem": p.name,
        "iterations": result.iterations,
        "final_x": [float(v) for v in result.final_x],
        "final_residual": residual(p, result.final_x),
        "x0": [float(v) for v in result.x0],
        "message": result.message,
        "notes": result.notes,
    }
    if p.known_solution is not None:
        summary["dist_to_known"] = float(np.linalg.norm(result.final_x - p.known_solution))
    if result.variant == "S" and "A" in p.params:
        try:
            rows = solution_halfspaces(p)
        except ValueError:
            rows = None
        if rows is not None and len(rows) <= QP_ORACLE_MAX_ROWS:
            ref = project_qp_oracle(rows, result.x0)
            summary["reference_projection"] = [float(v) for v in ref]
            summary["dist_to_reference_projection"] = float(np.linalg.norm(result.final_x - ref))
    return summary


def build_parser():
    parser = argparse.ArgumentParser(
        prog="varineq",
        description="Subgradient projection solver for variable-order inequality problems.",
    )
    parser.add_argument("--spec", required=True, help="JSON run spec")
    parser.add_argument("--variant", choices=["R", "S", "r", "s"], help="override the spec's variant")
    parser.add_argument("--max-iter", type=int, help="override max_iter")
    parser.add_argument("--step-tol", type=float, help="override tolerances.step_tol")
    parser.add_argument("--residual-tol", type=float, help="override tolerances.residual_tol")
    parser.add_argument("--trace", help="trace CSV path (overrides output.trace)")
    parser.add_argument("--summary", help="summary JSON path (overrides output.summary)")
    parser.add_argument("--dump-spec", action="store_true",
                        help="print the validated spec (with overrides) as JSON and exit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _apply_overrides(spec: RunSpec, args) -> RunSpec:
    data = spec.to_dict()
    if args.variant:
        data["variant"] = args.variant.upper()
    if args.max_iter is not None:
        data["max_iter"] = args.max_iter
    if args.step_tol is not None:
        data["tolerances"]["step_tol"] = args.step_tol
    if args.residual_tol is not None:
        data["tolerances"]["residual_tol"] = args.residual_tol
    if args.trace:
        data["output"]["trace"] = args.trace
    if args.summary:
        data["output"]["summary"] = args.summary
    return parse_spec(data)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _apply_overrides(load_spec(args.spec), args)
        if args.dump_spec:
            json.dump(spec.to_dict(), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
            return 0
        p = build_problem(spec)
        cfg = spec.config()
    except (SpecError, ValueError) as exc:
        print(f"varineq: spec error: {exc}", file=sys.stderr)
        return 2
    result = solve(p, np.asarray(spec.x0), cfg)
    summary = summarize(p, spec, result)
    if spec.output.get("trace"):
        write_trace(result, spec.output["trace"], p.n)
    if spec.output.get("summary"):
        with open(spec.output["summary"], "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    log.info("status %s, final_x %s", result.status.value, summary["final_x"])
    return 0 if result.ok else 1


def main(argv=None):
    level = os.environ.get("VARINEQ_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
