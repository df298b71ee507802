import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tavopt import (
    AffineConstraint,
    ExplicitPoints,
    ExtendedBox,
    GridProduct,
    LinearPiece,
    PiecewiseLinearPiece,
    ProblemSpec,
    QuadraticPiece,
    SeparableConvexObjective,
    evaluate_constraints,
    evaluate_objective,
    lipschitz_bound,
    squared_norm_bound,
    tight_box,
)
from tavopt.problem import EPS_C

from conftest import build_instance

finite_floats = st.floats(-10.0, 10.0, allow_nan=False)


def scan_min(piece, c, lo, hi, n=4001):
    ys = np.linspace(lo, hi, n)
    vals = piece.values(ys) + c * ys
    return float(np.min(vals))


def shifted_value(piece, c, y):
    return piece.value(y) + c * y


# ---------------------------------------------------------------------------
# Pieces
# ---------------------------------------------------------------------------

@given(slope=finite_floats, c=finite_floats,
       lo=st.floats(-5.0, 4.0), width=st.floats(0.01, 8.0))
def test_linear_piece_argmin_matches_scan(slope, c, lo, width):
    piece = LinearPiece(slope=slope)
    hi = lo + width
    y = piece.argmin_shifted(c, lo, hi)
    assert lo <= y <= hi
    assert shifted_value(piece, c, y) <= scan_min(piece, c, lo, hi) + 1e-9


@given(curv=st.floats(0.0, 5.0), slope=finite_floats, c=finite_floats,
       lo=st.floats(-5.0, 4.0), width=st.floats(0.01, 8.0))
def test_quadratic_piece_argmin_matches_scan(curv, slope, c, lo, width):
    piece = QuadraticPiece(curvature=curv, slope=slope)
    hi = lo + width
    y = piece.argmin_shifted(c, lo, hi)
    assert lo <= y <= hi
    assert shifted_value(piece, c, y) <= scan_min(piece, c, lo, hi) + 1e-9


@st.composite
def pwl_pieces(draw):
    n_bp = draw(st.integers(0, 4))
    bps = sorted(draw(st.lists(st.floats(-4.0, 4.0), min_size=n_bp, max_size=n_bp,
                               unique=True)))
    s0 = draw(st.floats(-5.0, 5.0))
    deltas = draw(st.lists(st.floats(0.0, 3.0), min_size=n_bp, max_size=n_bp))
    slopes = [s0]
    for d in deltas:
        slopes.append(slopes[-1] + d)
    return PiecewiseLinearPiece(breakpoints=tuple(bps), slopes=tuple(slopes))


@settings(max_examples=200)
@given(piece=pwl_pieces(), c=finite_floats,
       lo=st.floats(-5.0, 4.0), width=st.floats(0.01, 8.0))
def test_pwl_piece_argmin_matches_scan(piece, c, lo, width):
    hi = lo + width
    y = piece.argmin_shifted(c, lo, hi)
    assert lo <= y <= hi
    assert shifted_value(piece, c, y) <= scan_min(piece, c, lo, hi) + 1e-9


@given(piece=pwl_pieces())
def test_pwl_vectorized_values_match_scalar(piece):
    ys = np.linspace(-6.0, 6.0, 101)
    expected = np.array([piece.value(float(y)) for y in ys])
    np.testing.assert_allclose(piece.values(ys), expected, atol=1e-10)


def test_pwl_hand_values():
    piece = PiecewiseLinearPiece(breakpoints=(0.0,), slopes=(-1.0, 2.0))
    assert piece.value(0.0) == 0.0
    assert piece.value(1.0) == 2.0
    assert piece.value(-1.0) == 1.0
    assert piece.max_abs_derivative(-1.0, 1.0) == 2.0
    # right slope applies when the interval starts exactly at the kink
    assert piece.argmin_shifted(0.0, 0.0, 1.0) == 0.0
    assert piece.max_abs_derivative(0.0, 1.0) == 2.0


@pytest.mark.parametrize("bad", [
    lambda: QuadraticPiece(curvature=-0.5, slope=0.0),
    lambda: PiecewiseLinearPiece(breakpoints=(0.0,), slopes=(2.0, 1.0)),
    lambda: PiecewiseLinearPiece(breakpoints=(1.0, 1.0), slopes=(0.0, 1.0, 2.0)),
    lambda: PiecewiseLinearPiece(breakpoints=(0.0,), slopes=(1.0,)),
])
def test_nonconvex_pieces_rejected(bad):
    with pytest.raises(ValueError):
        bad()


# ---------------------------------------------------------------------------
# Objective and constraint evaluation
# ---------------------------------------------------------------------------

def test_objective_examples():
    poly = build_instance("polyhedral")
    smooth = build_instance("smooth")
    assert evaluate_objective(poly, (0.5, 0.5)) == pytest.approx(1.25, abs=1e-12)
    assert evaluate_objective(smooth, (0.0, 0.0)) == 0.0
    assert evaluate_objective(smooth, (0.5, 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_constraint_examples():
    poly = build_instance("polyhedral")
    g = evaluate_constraints(poly, (0.5, 0.5))
    assert g[0] == pytest.approx(0.0, abs=1e-12)
    g0 = evaluate_constraints(poly, (0.0, 0.0))
    assert g0[0] == pytest.approx(1.5, abs=1e-12)
    g3 = evaluate_constraints(poly, (3.0, 3.0))
    assert g3[1] == pytest.approx(-7.5, abs=1e-12)


def test_points_outside_box_rejected():
    poly = build_instance("polyhedral")
    with pytest.raises(ValueError):
        evaluate_objective(poly, (4.0, 0.0))
    with pytest.raises(ValueError):
        evaluate_constraints(poly, (-1.0, 0.0))


# ---------------------------------------------------------------------------
# Lipschitz constant
# ---------------------------------------------------------------------------

def test_lipschitz_examples():
    poly = build_instance("polyhedral")
    assert lipschitz_bound(poly) == pytest.approx(math.sqrt(5.0), abs=1e-12)

    grid = GridProduct(values=((0.0, 1.0),))
    flat = ProblemSpec(
        decision_set=grid, box=tight_box(grid),
        objective=SeparableConvexObjective(pieces=(LinearPiece(0.0),)),
        constraints=(AffineConstraint(coeffs=(1.0,), offset=0.0),))
    assert lipschitz_bound(flat) == 1.0

    smooth = build_instance("smooth")
    assert lipschitz_bound(smooth) == pytest.approx(6.0 * math.sqrt(2.0), abs=1e-12)


@pytest.mark.parametrize("name", ["polyhedral", "smooth"])
def test_lipschitz_probe(name):
    spec = build_instance(name)
    m = lipschitz_bound(spec)
    rng = np.random.default_rng(7)
    xs = rng.uniform(spec.box.lower, spec.box.upper, size=(1000, spec.dimension))
    ys = rng.uniform(spec.box.lower, spec.box.upper, size=(1000, spec.dimension))
    dist = np.linalg.norm(xs - ys, axis=1)
    fx = spec.objective.values(xs)
    fy = spec.objective.values(ys)
    assert np.all(np.abs(fx - fy) <= m * dist + 1e-9)
    A, b = spec.constraint_matrix()
    gx = xs @ A.T + b
    gy = ys @ A.T + b
    assert np.all(np.abs(gx - gy) <= (m * dist + 1e-9)[:, None])


@pytest.mark.parametrize("name", ["polyhedral", "smooth"])
def test_convexity_probe(name):
    spec = build_instance(name)
    rng = np.random.default_rng(11)
    xs = rng.uniform(spec.box.lower, spec.box.upper, size=(1000, spec.dimension))
    ys = rng.uniform(spec.box.lower, spec.box.upper, size=(1000, spec.dimension))
    ts = rng.uniform(0.0, 1.0, size=1000)
    mid = ts[:, None] * xs + (1.0 - ts[:, None]) * ys
    f_mid = spec.objective.values(mid)
    f_cvx = ts * spec.objective.values(xs) + (1.0 - ts) * spec.objective.values(ys)
    assert np.all(f_mid <= f_cvx + 1e-9)
    A, b = spec.constraint_matrix()
    g_mid = mid @ A.T + b
    g_cvx = ts[:, None] * (xs @ A.T + b) + (1.0 - ts)[:, None] * (ys @ A.T + b)
    assert np.all(g_mid <= g_cvx + 1e-9)


def test_convexity_probe_pwl_objective():
    grid = GridProduct(values=((0.0, 1.0, 2.0, 3.0),))
    piece = PiecewiseLinearPiece(breakpoints=(1.0, 2.0), slopes=(-2.0, 0.5, 3.0))
    spec = ProblemSpec(decision_set=grid, box=tight_box(grid),
                       objective=SeparableConvexObjective(pieces=(piece,)))
    m = lipschitz_bound(spec)
    assert m == 3.0
    rng = np.random.default_rng(3)
    xs = rng.uniform(0.0, 3.0, size=1000)
    ys = rng.uniform(0.0, 3.0, size=1000)
    ts = rng.uniform(0.0, 1.0, size=1000)
    f = piece.values
    assert np.all(f(ts * xs + (1 - ts) * ys) <= ts * f(xs) + (1 - ts) * f(ys) + 1e-9)
    assert np.all(np.abs(f(xs) - f(ys)) <= m * np.abs(xs - ys) + 1e-9)


# ---------------------------------------------------------------------------
# Squared-norm constant
# ---------------------------------------------------------------------------

def test_squared_norm_bound_no_constraints():
    grid = GridProduct(values=((0.0, 1.0, 2.0, 3.0), (0.0, 1.0, 2.0, 3.0)))
    spec = ProblemSpec(
        decision_set=grid, box=tight_box(grid),
        objective=SeparableConvexObjective(pieces=(LinearPiece(1.0), LinearPiece(1.0))))
    assert squared_norm_bound(spec) == pytest.approx(18.0, abs=1e-12)


def test_squared_norm_bound_degenerate_floor():
    grid = GridProduct(values=((1.0,), (1.0,)))
    spec = ProblemSpec(
        decision_set=grid,
        box=ExtendedBox(lower=(1.0, 1.0), upper=(1.0, 1.0)),
        objective=SeparableConvexObjective(pieces=(LinearPiece(0.0), LinearPiece(0.0))))
    assert squared_norm_bound(spec) == EPS_C


def test_squared_norm_bound_matches_grid_sampling_oracle():
    spec = build_instance("polyhedral")
    c = squared_norm_bound(spec)
    assert c == pytest.approx(112.5, abs=1e-12)
    ys = np.linspace(0.0, 3.0, 201)
    mesh = np.column_stack([g.ravel() for g in np.meshgrid(ys, ys)])
    A, b = spec.constraint_matrix()
    g = mesh @ A.T + b
    sampled_sup_g = np.max(np.sum(g * g, axis=1))
    corners = np.array([[0.0, 0.0], [0.0, 3.0], [3.0, 0.0], [3.0, 3.0]])
    diff = corners[:, None, :] - mesh[None, :, :]
    sampled_sup_dist = np.max(np.sum(diff * diff, axis=2))
    assert abs(c - max(sampled_sup_g, sampled_sup_dist)) <= 1e-9


@pytest.mark.parametrize("name", ["polyhedral", "smooth-extra"])
def test_squared_norm_bound_probe(name):
    spec = build_instance(name)
    c = squared_norm_bound(spec)
    rng = np.random.default_rng(5)
    points = list(spec.decision_set.iter_points())
    xs = np.array([points[k] for k in rng.integers(0, len(points), size=1000)])
    ys = rng.uniform(spec.box.lower, spec.box.upper, size=(1000, spec.dimension))
    A, b = spec.constraint_matrix()
    g = ys @ A.T + b
    assert np.all(np.sum(g * g, axis=1) <= c + 1e-9)
    assert np.all(np.sum((xs - ys) ** 2, axis=1) <= c + 1e-9)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_grid_product_validation():
    with pytest.raises(ValueError):
        GridProduct(values=())
    with pytest.raises(ValueError):
        GridProduct(values=((),))
    with pytest.raises(ValueError):
        GridProduct(values=((1.0, 1.0),))
    with pytest.raises(ValueError):
        GridProduct(values=((2.0, 1.0),))


def test_explicit_points_validation_and_ordering():
    with pytest.raises(ValueError):
        ExplicitPoints(points=np.zeros((0, 2)))
    pts = ExplicitPoints(points=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.5]])
    np.testing.assert_array_equal(pts.points[0], [0.0, 0.5])
    np.testing.assert_array_equal(pts.points[-1], [1.0, 0.0])


def test_box_validation():
    with pytest.raises(ValueError):
        ExtendedBox(lower=(1.0,), upper=(0.0,))
    with pytest.raises(ValueError):
        ExtendedBox(lower=(0.0, 0.0), upper=(1.0,))


def test_spec_requires_decision_set_in_box():
    grid = GridProduct(values=((0.0, 5.0),))
    with pytest.raises(ValueError):
        ProblemSpec(decision_set=grid,
                    box=ExtendedBox(lower=(0.0,), upper=(3.0,)),
                    objective=SeparableConvexObjective(pieces=(LinearPiece(1.0),)))


def test_constraint_validation():
    with pytest.raises(ValueError):
        AffineConstraint(coeffs=(0.0, 0.0), offset=1.0)
    with pytest.raises(ValueError):
        AffineConstraint(coeffs=(np.inf, 1.0), offset=0.0)


def test_spec_dimension_mismatches():
    grid = GridProduct(values=((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        ProblemSpec(decision_set=grid, box=tight_box(grid),
                    objective=SeparableConvexObjective(pieces=(LinearPiece(1.0),)))
    with pytest.raises(ValueError):
        ProblemSpec(decision_set=grid, box=tight_box(grid),
                    objective=SeparableConvexObjective(
                        pieces=(LinearPiece(1.0), LinearPiece(1.0))),
                    constraints=(AffineConstraint(coeffs=(1.0,), offset=0.0),))
