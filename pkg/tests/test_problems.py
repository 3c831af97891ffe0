import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from varineq.cones import ConeMap, PolyhedralCone, in_minus_cone, sector_cone
from varineq.errors import DimensionError, EmptyCutError
from varineq.problems import (
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
    random_affine_orthant,
    remark_theta,
    residual,
)
from varineq.sets import Box, Halfspace, WholeSpace
from varineq.solver import SolverConfig, solve

THETA_AT_ONE = 5 * math.pi / 8


# --- cone map of the quadratic example ---------------------------------------

def test_theta_values():
    assert remark_theta([1.0, 1.0]) == pytest.approx(3 * math.pi / 4 - math.atan(1.0) / 2)
    assert remark_theta([1.0, 1.0]) == pytest.approx(THETA_AT_ONE)
    assert remark_theta([0.0, 0.0]) == math.pi / 2
    assert remark_theta([0.0, 5.0]) == math.pi / 2
    # huge and tiny ratios stay finite and approach the y1 = 0 branch
    assert remark_theta([1e-200, 1.0]) == pytest.approx(math.pi / 2)
    assert remark_theta([1e200, 1.0]) == pytest.approx(3 * math.pi / 4)


# --- cut sets -----------------------------------------------------------------

def test_H_quadratic_at_one():
    p = paper_remark()
    cone = p.cone_at([1.0])
    np.testing.assert_allclose(
        cone.normals, [[0.0, 1.0], [math.sin(THETA_AT_ONE), -math.cos(THETA_AT_ONE)]], atol=1e-15
    )
    rows = build_H_halfspaces(p, [1.0], [[2.0], [1.0]])
    # F(1) + U (z - 1) = (2z - 1, z): first row z <= 0, second z <= sin t / (2 sin t - cos t)
    s, c = math.sin(THETA_AT_ONE), math.cos(THETA_AT_ONE)
    assert len(rows) == 2
    np.testing.assert_allclose([r.a[0] for r in rows], [1.0, 1.0])
    np.testing.assert_allclose([r.b for r in rows], [0.0, s / (2 * s - c)], atol=1e-15)
    assert min(r.b for r in rows) == pytest.approx(0.0, abs=1e-15)


def test_H_linear_identity_case():
    p = affine_orthant(np.eye(2), np.zeros(2))
    rows = build_H_halfspaces(p, [1.0, 1.0], np.eye(2))
    np.testing.assert_allclose([r.a for r in rows], np.eye(2))
    np.testing.assert_allclose([r.b for r in rows], 0.0, atol=1e-15)


@pytest.mark.parametrize("x", [[-1.0, -2.0], [0.0, -3.0], [-0.5, 0.0]])
def test_solution_lies_in_own_cut(x):
    p = affine_orthant([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0])
    assert in_minus_cone(p.cone_at(x), p.oracle.value(x))
    rows = build_H_halfspaces(p, x, p.oracle.subgradient(x))
    assert all(r.contains(x, 1e-12) for r in rows)


def test_degenerate_rows():
    # U^T u vanishes for the second facet: slack rows are dropped, violated rows are fatal
    p = affine_orthant([[1.0], [0.0]], [0.0, 1.0])
    assert len(build_H_halfspaces(p, [3.0], p.oracle.subgradient([3.0]))) == 1
    bad = affine_orthant([[1.0], [0.0]], [0.0, -1.0])
    with pytest.raises(EmptyCutError):
        build_H_halfspaces(bad, [3.0], bad.oracle.subgradient([3.0]))


def test_H_shape_check():
    with pytest.raises(DimensionError):
        build_H_halfspaces(paper_remark(), [1.0], np.ones((1, 2)))


def test_localization_halfspace():
    assert isinstance(localization_halfspace([1.0, 2.0], [1.0, 2.0]), WholeSpace)
    w = localization_halfspace([1.0, 0.0], [0.0, 0.0])
    assert isinstance(w, Halfspace)
    np.testing.assert_allclose(w.a, [-1.0, 0.0])
    assert w.b == pytest.approx(-1.0)
    w = localization_halfspace([0.0, 2.0], [0.0, 0.0])
    np.testing.assert_allclose(w.a, [0.0, -1.0])
    assert w.b == pytest.approx(-2.0)


# --- residual and solution test -------------------------------------------------

def test_residual_values():
    p = paper_remark()
    assert residual(p, [0.0]) == 0.0
    q = affine_orthant(np.eye(2), np.zeros(2))
    assert residual(q, [3.0, -2.0]) == 3.0


def test_residual_quadratic_at_one_against_ray_search():
    ref = oracles.minus_sector_distance([1.0, 1.0], 0.0, THETA_AT_ONE)
    assert ref == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert residual(paper_remark(), [1.0]) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("x", [-2.0, -0.3, 0.2, 1.7])
def test_residual_matches_ray_search(x):
    p = paper_remark()
    y = p.oracle.value([x])
    ref = oracles.minus_sector_distance(y, 0.0, remark_theta(y), phis=200001)
    assert residual(p, [x]) == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_is_solution_quadratic():
    p = paper_remark()
    assert is_solution(p, [0.0], 1e-10)
    assert not is_solution(p, [0.5], 1e-6)


def test_is_solution_polyhedron_vertex():
    A = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]])
    b = np.array([1.0, 0.0, 0.0])
    p = affine_orthant(A, b)
    vertex = np.linalg.solve(A[:2], b[:2])
    assert is_solution(p, vertex, 1e-12)
    assert not is_solution(p, vertex + [0.1, 0.0], 1e-6)


def test_is_solution_requires_feasibility():
    p = affine_orthant(np.eye(1), [5.0], Box([0.0], [1.0]))
    assert not is_solution(p, [2.0], 1e-8)
    assert is_solution(p, [0.5], 1e-8)


# --- checkers -------------------------------------------------------------------

def test_subgradient_validity_affine():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 2))
    p = affine_orthant(A, rng.normal(size=3))
    rep = check_subgradient_validity(p, [0.3, -0.2], A, rng.normal(size=(50, 2)) * 4)
    assert rep.ok and rep.checked == 50


def test_subgradient_validity_quadratic_grid():
    p = paper_remark()
    grid = np.linspace(-3, 3, 61)[:, None]
    for xb in (-2.0, -0.5, 0.0, 0.7, 2.5):
        rep = check_subgradient_validity(p, [xb], [[2 * xb], [1.0]], grid)
        assert rep.ok, rep.violations[:1]


def test_subgradient_validity_violation():
    p = paper_remark()
    rep = check_subgradient_validity(p, [0.0], [[5.0], [1.0]], [[1.0], [-1.0]])
    assert not rep.ok
    np.testing.assert_allclose(rep.violations[0]["vector"], [-4.0, 0.0])


def test_k_convexity_affine_any_map():
    A = np.array([[1.0, -2.0], [0.5, 1.0]])
    base = affine_orthant(A, [0.3, -0.1])
    p = ProblemInstance(base.oracle, ConeMap(lambda y: sector_cone(0.1, 1.0 + 0.5 * np.tanh(y[0])), 2),
                        WholeSpace(2))
    rng = np.random.default_rng(1)
    pairs = [(rng.normal(size=2), rng.normal(size=2)) for _ in range(20)]
    assert check_k_convexity(p, pairs, np.linspace(0, 1, 7)).ok


def test_k_convexity_quadratic():
    grid = np.linspace(-3, 3, 10)
    pairs = [([a], [b]) for a in grid for b in grid]
    rep = check_k_convexity(paper_remark(), pairs, np.linspace(0, 1, 11))
    assert rep.ok and rep.checked == 1100


def test_k_convexity_counterexample_fails():
    p = example_3_2()
    pairs = [([0.0, 0.0], [1.0, 1.0]), ([0.2, 0.9], [0.8, 0.1])]
    rep = check_k_convexity(p, pairs, [0.25, 0.5, 0.75])
    assert not rep.ok
    # K(F(x)) is -R^2_+ on the whole domain
    assert p.cone_at([0.5, 0.5]).same_as(PolyhedralCone(-np.eye(2)))


def test_A4_constant_map():
    p = affine_orthant(np.eye(2), np.zeros(2))
    assert check_A4(p, [0.0, 0.0], np.random.default_rng(0).normal(size=(20, 2))).ok


def test_A4_quadratic():
    rep = check_A4(paper_remark(), [0.0], np.linspace(-3, 3, 121)[:, None])
    assert rep.ok and rep.checked == 121


def test_A4_adversarial_shrinking_map():
    def shrinking(y):
        return sector_cone(0.0, math.pi / 2 - 0.5 * min(1.0, float(np.linalg.norm(y))))

    base = affine_orthant(np.eye(2), np.zeros(2))
    p = ProblemInstance(base.oracle, ConeMap(shrinking, 2, "shrinking"), WholeSpace(2))
    rep = check_A4(p, [0.0, 0.0], [[0.0, 0.0], [1.0, 1.0], [-2.0, 0.5]])
    assert not rep.ok
    assert len(rep.violations) == 2


# --- properties over built-in problems -----------------------------------------

def _builtin_runs():
    rng = np.random.default_rng(5)
    runs = [(paper_remark(), [x0], "R") for x0 in (-3.0, -1.0, 0.4, 2.0)]
    runs += [(paper_remark(2.0, 0.7), [x0], v) for x0 in (-2.0, 3.0) for v in "RS"]
    for _ in range(5):
        p = random_affine_orthant(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        runs.append((p, rng.uniform(-3, 3, p.n), "R"))
    return runs


@pytest.mark.parametrize("p,x0,variant", _builtin_runs())
def test_known_solution_in_every_cut(p, x0, variant):
    res = solve(p, x0, SolverConfig(variant=variant))
    for rec in res.trace:
        x = rec.x
        rows = build_H_halfspaces(p, x, p.oracle.subgradient(x))
        assert all(r.violation(p.known_solution) <= 1e-8 for r in rows)
        if not is_solution(p, x, 1e-9):
            assert any(r.violation(x) > 0 for r in rows)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.2, 3.0), st.floats(-2, 2))
def test_residual_zero_iff_in_minus_cone(x, scale, shift):
    p = paper_remark(scale, shift)
    y = p.oracle.value([x])
    assert (residual(p, [x]) <= 1e-12 * max(1.0, np.linalg.norm(y))) == in_minus_cone(p.cone_at([x]), y, 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.floats(0, 1))
def test_affine_never_violates_k_convexity(vals, alpha):
    A = np.array(vals[:4]).reshape(2, 2)
    p = affine_orthant(A, np.array(vals[4:]))
    pairs = [(np.array(vals[:2]), np.array(vals[2:4]))]
    assert check_k_convexity(p, pairs, [alpha]).ok


def test_oracle_shape_checks():
    bad = VectorFunctionOracle(1, 2, lambda x: np.zeros(3), lambda x: np.zeros((2, 1)))
    with pytest.raises(DimensionError):
        bad.value([0.0])
    with pytest.raises(DimensionError):
        ProblemInstance(bad, ConeMap.constant(PolyhedralCone.orthant(2)), WholeSpace(3))
