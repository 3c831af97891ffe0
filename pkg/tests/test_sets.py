import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from varineq.errors import DimensionError, InfeasibleSetError, ProjectionError
from varineq.sets import (
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


def test_halfspace_normalised():
    h = Halfspace([3.0, 4.0], 10.0)
    np.testing.assert_allclose(h.a, [0.6, 0.8])
    assert h.b == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Halfspace([0.0, 0.0], 1.0)


def test_box_validation():
    with pytest.raises(ValueError):
        Box([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(DimensionError):
        Box([0.0, 0.0], [1.0])


def test_intersection_dimensions():
    with pytest.raises(DimensionError):
        Intersection([WholeSpace(2), WholeSpace(3)])


def test_closed_forms():
    np.testing.assert_array_equal(project_set(Ball(np.zeros(2), 1.0), [2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_array_equal(project_set(Halfspace([1.0, 0.0], 0.0), [1.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(project_set(Box([0, 0], [1, 1]), [2.0, -1.0]), [1.0, 0.0])
    np.testing.assert_array_equal(project_set(WholeSpace(2), [2.0, -1.0]), [2.0, -1.0])


def test_polyhedron_quadrant():
    poly = Polyhedron([Halfspace([1.0, 0.0], 0.0), Halfspace([0.0, 1.0], 0.0)])
    expected = project_qp_oracle(poly.halfspaces, [1.0, 2.0])
    np.testing.assert_allclose(expected, [0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(project_set(poly, [1.0, 2.0]), expected, atol=1e-12)


def test_dykstra_single_member_matches_closed_form():
    ball = Ball(np.array([1.0, -1.0]), 0.5)
    x = np.array([3.0, 2.0])
    np.testing.assert_array_equal(dykstra_project([ball], x), project_set(ball, x))


def test_dykstra_orthogonal_halfspaces():
    hs = [Halfspace([1.0, 0.0], 0.0), Halfspace([0.0, 1.0], 0.0)]
    np.testing.assert_allclose(dykstra_project(hs, [1.0, 1.0]), [0.0, 0.0], atol=1e-14)


@pytest.mark.parametrize(
    "x,expected",
    [
        # frozen from oracles.nearest_feasible_grid_polish (grid + local refinement)
        ((1.0, 0.0), (-0.5, 0.0)),
        ((1.0, 2.0), (-0.5, 0.8660254037844386)),
    ],
)
def test_dykstra_ball_halfspace(x, expected):
    ball_half = oracles.vectorized(lambda P: (np.sum(P ** 2, axis=1) <= 1.0) & (P[:, 0] <= -0.5))
    ref = oracles.nearest_feasible_grid_polish(ball_half, x, [-1, -1], [1, 1])
    np.testing.assert_allclose(ref, expected, atol=1e-7)
    got = dykstra_project([Ball(np.zeros(2), 1.0), Halfspace([1.0, 0.0], -0.5)], x)
    np.testing.assert_allclose(got, expected, atol=1e-7)


def test_qp_oracle_examples():
    np.testing.assert_array_equal(project_qp_oracle([], [1.0, 2.0]), [1.0, 2.0])
    np.testing.assert_allclose(project_qp_oracle([Halfspace([1.0, 0.0], 0.0)], [1.0, 1.0]), [0.0, 1.0])
    hs = [Halfspace([1.0, 1.0], 0.0), Halfspace([1.0, -1.0], 0.0)]
    np.testing.assert_allclose(project_qp_oracle(hs, [1.0, 0.0]), [0.0, 0.0], atol=1e-14)


def test_qp_oracle_rank_deficient_active_set():
    # duplicated row: the pair is rank deficient and must not break the enumeration
    hs = [Halfspace([1.0, 0.0], 0.0), Halfspace([2.0, 0.0], 0.0), Halfspace([0.0, 1.0], 1.0)]
    np.testing.assert_allclose(project_qp_oracle(hs, [2.0, 3.0]), [0.0, 1.0], atol=1e-12)


def test_qp_oracle_infeasible():
    with pytest.raises(InfeasibleSetError):
        project_qp_oracle([Halfspace([1.0], -1.0), Halfspace([-1.0], -1.0)], [0.0])


def test_dykstra_infeasible_detected():
    hs = [Halfspace([1.0, 0.0], -1.0), Halfspace([-1.0, 0.0], -1.0)]
    with pytest.raises(InfeasibleSetError):
        dykstra_project(hs, [0.0, 0.0], max_cycles=2000)


def test_dykstra_cap_reports_last_iterate():
    # narrow wedge: alternating projections zigzag slowly towards the apex
    hs = [Halfspace([0.0, 1.0], 0.0), Halfspace([-0.01, -1.0], 0.0)]
    with pytest.raises(ProjectionError) as info:
        dykstra_project(hs, [-100.0, 1.0], max_cycles=3, polish=False)
    assert info.value.last_iterate is not None
    assert info.value.displacement > 0


def random_instance(rng, n, k):
    x_feas = rng.uniform(-1, 1, n)
    hs = []
    for _ in range(k):
        a = rng.normal(size=n)
        hs.append(Halfspace(a, a @ x_feas + rng.uniform(0, 1)))
    return hs


def test_dykstra_matches_qp_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        hs = random_instance(rng, n, int(rng.integers(1, 7)))
        x = rng.normal(size=n) * 4
        assert np.linalg.norm(dykstra_project(hs, x) - project_qp_oracle(hs, x)) <= 1e-6


sets_2d = st.sampled_from([
    Ball(np.array([0.5, -0.5]), 1.5),
    Box(np.array([-1.0, 0.0]), np.array([2.0, 1.0])),
    Polyhedron([Halfspace([1.0, 2.0], 1.0), Halfspace([-1.0, 0.5], 0.5), Halfspace([0.0, -1.0], 2.0)]),
    Intersection([Ball(np.zeros(2), 2.0), Halfspace([1.0, 1.0], 0.5)]),
])
points_2d = st.tuples(st.floats(-20, 20), st.floats(-20, 20)).map(np.array)


@settings(max_examples=150, deadline=None)
@given(sets_2d, points_2d)
def test_idempotent(s, x):
    p = project_set(s, x)
    assert np.linalg.norm(project_set(s, p) - p) <= 1e-10


@settings(max_examples=150, deadline=None)
@given(sets_2d, points_2d, points_2d)
def test_nonexpansive(s, x, y):
    assert np.linalg.norm(project_set(s, x) - project_set(s, y)) <= np.linalg.norm(x - y) + 1e-10


@settings(max_examples=100, deadline=None)
@given(sets_2d, points_2d)
def test_variational_inequality(s, x):
    p = project_set(s, x)
    rng = np.random.default_rng(0)
    zs = [project_set(s, z) for z in rng.uniform(-3, 3, size=(30, 2))]
    assert max((z - p) @ (x - p) for z in zs) <= 1e-8 * max(1.0, np.linalg.norm(x))


def test_narrow_wedge_is_polished_to_exact_answer():
    # the facet lines meet at ~0.6 degrees; plain Dykstra would need far more cycles
    hs = [Halfspace([0.0, 1.0], 0.0), Halfspace([-0.01, -1.0], 0.0)]
    x = [-100.0, 1.0]
    with pytest.raises(ProjectionError):
        dykstra_project(hs, x, max_cycles=50, polish=False)
    got = dykstra_project(hs, x, max_cycles=50)
    np.testing.assert_allclose(got, project_qp_oracle(hs, x), atol=1e-12)


def test_polish_refuses_empty_intersection():
    from varineq._activeset import polish_projection

    A = np.array([[1.0, 0.0], [-1.0, 0.0]])
    b = np.array([-1.0, -1.0])
    assert polish_projection(A, b, np.zeros(2), np.zeros(2)) is None
    with pytest.raises(InfeasibleSetError):
        dykstra_project([Halfspace(a, bi) for a, bi in zip(A, b)], [0.0, 0.0], max_cycles=2000)


def test_polish_rejects_wrong_sign_active_set():
    from varineq._activeset import polish_projection

    # x is interior; a seed on the facet gives a negative multiplier, so no certificate
    A = np.array([[1.0, 0.0]])
    got = polish_projection(A, np.array([1.0]), np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    assert got is None
