"""Problem instances: discrete decision sets, separable convex objectives,
affine constraints, and the structural constants used by the solver.

A problem asks for a sequence of decisions drawn from a finite set whose
long-run average minimizes a convex objective subject to affine inequality
constraints on that average.  All data is validated and frozen at
construction; a :class:`ProblemSpec` is safe to share across concurrent runs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "LinearPiece",
    "QuadraticPiece",
    "PiecewiseLinearPiece",
    "SeparableConvexObjective",
    "GridProduct",
    "ExplicitPoints",
    "DecisionSet",
    "ExtendedBox",
    "AffineConstraint",
    "ProblemSpec",
    "tight_box",
    "evaluate_objective",
    "evaluate_constraints",
    "lipschitz_bound",
    "squared_norm_bound",
    "EPS_C",
]

# Floor on the squared-norm constant for degenerate single-point problems,
# so that sqrt(2C)/V stays well defined.
EPS_C = 1e-12

_BOX_ATOL = 1e-9


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Objective pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearPiece:
    """Scalar piece s*y."""

    slope: float

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ValueError("linear piece slope must be finite")

    def value(self, y: float) -> float:
        return self.slope * y

    def values(self, ys: np.ndarray) -> np.ndarray:
        return self.slope * ys

    def max_abs_derivative(self, lo: float, hi: float) -> float:
        return abs(self.slope)

    def argmin_shifted(self, c: float, lo: float, hi: float) -> float:
        """Minimizer of s*y + c*y over [lo, hi]; ties go to the lower end."""
        return lo if self.slope + c >= 0.0 else hi


@dataclass(frozen=True)
class QuadraticPiece:
    """Scalar piece a*y**2 + s*y with a >= 0."""

    curvature: float
    slope: float

    def __post_init__(self):
        if not (math.isfinite(self.curvature) and math.isfinite(self.slope)):
            raise ValueError("quadratic piece parameters must be finite")
        if self.curvature < 0.0:
            raise ValueError("non-convex piece: quadratic curvature must be >= 0")

    def value(self, y: float) -> float:
        return self.curvature * y * y + self.slope * y

    def values(self, ys: np.ndarray) -> np.ndarray:
        return self.curvature * ys * ys + self.slope * ys

    def max_abs_derivative(self, lo: float, hi: float) -> float:
        # derivative 2a*y + s is affine, so its extremes sit at the endpoints
        return max(abs(2.0 * self.curvature * lo + self.slope),
                   abs(2.0 * self.curvature * hi + self.slope))

    def argmin_shifted(self, c: float, lo: float, hi: float) -> float:
        if self.curvature == 0.0:
            return lo if self.slope + c >= 0.0 else hi
        vertex = -(self.slope + c) / (2.0 * self.curvature)
        if vertex < lo:
            return lo
        if vertex > hi:
            return hi
        return vertex


@dataclass(frozen=True)
class PiecewiseLinearPiece:
    """Convex piecewise-linear scalar piece.

    ``slopes[k]`` applies on the k-th segment; segments are separated by the
    strictly increasing interior ``breakpoints`` (so ``len(slopes) ==
    len(breakpoints) + 1``).  Convexity requires nondecreasing slopes.  The
    piece is anchored at value 0 at y = 0.
    """

    breakpoints: tuple
    slopes: tuple

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        sls = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", sls)
        if len(sls) != len(bps) + 1:
            raise ValueError("need one slope per segment: len(slopes) == len(breakpoints) + 1")
        if not all(math.isfinite(v) for v in bps + sls):
            raise ValueError("piecewise-linear parameters must be finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(s2 < s1 for s1, s2 in zip(sls, sls[1:])):
            raise ValueError("non-convex piece: slopes must be nondecreasing")

    def _slope_right_of(self, y: float) -> float:
        k = 0
        for b in self.breakpoints:
            if b <= y:
                k += 1
            else:
                break
        return self.slopes[k]

    def _slope_left_of(self, y: float) -> float:
        k = 0
        for b in self.breakpoints:
            if b < y:
                k += 1
            else:
                break
        return self.slopes[k]

    def value(self, y: float) -> float:
        # integral of the slope function from 0 to y
        nodes = (-math.inf,) + self.breakpoints + (math.inf,)
        total = 0.0
        a, b = (0.0, y) if y >= 0.0 else (y, 0.0)
        sign = 1.0 if y >= 0.0 else -1.0
        for k, s in enumerate(self.slopes):
            seg_lo = max(a, nodes[k])
            seg_hi = min(b, nodes[k + 1])
            if seg_hi > seg_lo:
                total += s * (seg_hi - seg_lo)
        return sign * total

    def values(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if not self.breakpoints:
            return self.slopes[0] * ys
        bps = np.array(self.breakpoints)
        anchors = np.array([self.value(b) for b in self.breakpoints])
        slopes = np.array(self.slopes)
        seg = np.searchsorted(bps, ys, side="right")
        node_idx = np.clip(seg - 1, 0, len(bps) - 1)
        return anchors[node_idx] + slopes[seg] * (ys - bps[node_idx])

    def max_abs_derivative(self, lo: float, hi: float) -> float:
        # slopes are monotone, so the extremes sit at the interval ends
        return max(abs(self._slope_right_of(lo)), abs(self._slope_left_of(hi)))

    def argmin_shifted(self, c: float, lo: float, hi: float) -> float:
        # shifted slopes are nondecreasing: stop at the first nonnegative one
        if self._slope_right_of(lo) + c >= 0.0:
            return lo
        for k, b in enumerate(self.breakpoints):
            if b >= hi:
                break
            if b > lo and self.slopes[k + 1] + c >= 0.0:
                return b
        return hi


@dataclass(frozen=True)
class SeparableConvexObjective:
    """Sum of independent convex scalar pieces, one per coordinate."""

    pieces: tuple

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ValueError("objective needs at least one piece")
        for p in self.pieces:
            if not isinstance(p, (LinearPiece, QuadraticPiece, PiecewiseLinearPiece)):
                raise ValueError(f"unsupported objective piece {type(p).__name__}")

    @property
    def dimension(self) -> int:
        return len(self.pieces)

    def value(self, x) -> float:
        return float(sum(p.value(float(v)) for p, v in zip(self.pieces, x)))

    def values(self, points: np.ndarray) -> np.ndarray:
        """Objective at each row of an (n, dimension) array."""
        points = np.asarray(points, dtype=float)
        total = np.zeros(points.shape[0])
        for i, p in enumerate(self.pieces):
            total += p.values(points[:, i])
        return total

    def max_gradient_norm(self, lower: np.ndarray, upper: np.ndarray) -> float:
        """Supremum of the gradient norm over the box (coordinates decouple)."""
        return math.sqrt(sum(p.max_abs_derivative(lo, hi) ** 2
                             for p, lo, hi in zip(self.pieces, lower, upper)))


# ---------------------------------------------------------------------------
# Decision sets and the extended box
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridProduct:
    """Finite product set: one strictly increasing list of values per coordinate."""

    values: tuple

    def __post_init__(self):
        vals = tuple(tuple(float(v) for v in vs) for vs in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("decision set must have at least one coordinate")
        for i, vs in enumerate(vals):
            if not vs:
                raise ValueError(f"coordinate {i} has an empty value list")
            if not all(math.isfinite(v) for v in vs):
                raise ValueError(f"coordinate {i} has non-finite values")
            if any(b <= a for a, b in zip(vs, vs[1:])):
                raise ValueError(f"coordinate {i} values must be strictly increasing")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def hull_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([vs[0] for vs in self.values])
        hi = np.array([vs[-1] for vs in self.values])
        return lo, hi

    def hull_vertices(self) -> np.ndarray:
        """Vertices of the convex hull (corners of the per-coordinate extremes)."""
        lo, hi = self.hull_bounds()
        if self.dimension > 16:
            raise ValueError("hull vertex enumeration limited to dimension <= 16")
        corners = itertools.product(*[(l, h) if l != h else (l,)
                                      for l, h in zip(lo, hi)])
        return np.array(list(corners), dtype=float)

    def linear_argmin(self, weights) -> np.ndarray:
        """Point of the set minimizing weights . x; ties pick the smallest value."""
        out = np.empty(self.dimension)
        for i, vs in enumerate(self.values):
            out[i] = vs[0] if weights[i] >= 0.0 else vs[-1]
        return out

    def iter_points(self):
        for combo in itertools.product(*self.values):
            yield np.array(combo, dtype=float)


@dataclass(frozen=True)
class ExplicitPoints:
    """Finite decision set given as an explicit list of vectors."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("points must form a nonempty 2-d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        # canonical lexicographic order makes tie-breaking deterministic
        order = np.lexsort(pts.T[::-1])
        pts = pts[order].copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])

    def hull_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def hull_vertices(self) -> np.ndarray:
        # every extreme point of the hull is one of the stored points
        return self.points

    def linear_argmin(self, weights) -> np.ndarray:
        scores = self.points @ np.asarray(weights, dtype=float)
        # points are stored lexicographically sorted, so the first minimum
        # is the lexicographically smallest tie
        return self.points[int(np.argmin(scores))].copy()

    def iter_points(self):
        for p in self.points:
            yield p.copy()


DecisionSet = Union[GridProduct, ExplicitPoints]


@dataclass(frozen=True)
class ExtendedBox:
    """Closed hyper-rectangle over which the auxiliary minimization runs."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_float_vector(self.lower, "box lower")
        hi = _as_float_vector(self.upper, "box upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape:
            raise ValueError("box lower/upper must have the same dimension")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])

    def contains(self, x, atol: float = _BOX_ATOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def vertices(self) -> np.ndarray:
        if self.dimension > 16:
            raise ValueError("box vertex enumeration limited to dimension <= 16")
        corners = itertools.product(*[(l, h) if l != h else (l,)
                                      for l, h in zip(self.lower, self.upper)])
        return np.array(list(corners), dtype=float)


def tight_box(decision_set: DecisionSet) -> ExtendedBox:
    """Smallest hyper-rectangle containing the decision set (the default box)."""
    lo, hi = decision_set.hull_bounds()
    return ExtendedBox(lo, hi)


# ---------------------------------------------------------------------------
# Constraints and the assembled problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineConstraint:
    """Inequality coeffs . x + offset <= 0."""

    coeffs: np.ndarray
    offset: float

    def __post_init__(self):
        c = _as_float_vector(self.coeffs, "constraint coeffs")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "offset", float(self.offset))
        if not math.isfinite(self.offset):
            raise ValueError("constraint offset must be finite")
        if not np.any(c != 0.0):
            raise ValueError("constraint needs at least one nonzero coefficient")

    def value(self, x) -> float:
        return float(np.dot(self.coeffs, x) + self.offset)

    def gradient_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem instance.

    Holds the decision set, the extended box, the separable convex objective
    and the affine constraints, all with mutually consistent dimensions.
    """

    decision_set: DecisionSet
    box: ExtendedBox
    objective: SeparableConvexObjective
    constraints: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        I = self.box.dimension
        if self.decision_set.dimension != I:
            raise ValueError("decision set dimension does not match box")
        if self.objective.dimension != I:
            raise ValueError("objective dimension does not match box")
        for j, g in enumerate(self.constraints):
            if not isinstance(g, AffineConstraint):
                raise ValueError(f"constraint {j} is not an AffineConstraint")
            if g.coeffs.shape[0] != I:
                raise ValueError(f"constraint {j} dimension does not match box")
        lo, hi = self.decision_set.hull_bounds()
        if np.any(lo < self.box.lower - _BOX_ATOL) or np.any(hi > self.box.upper + _BOX_ATOL):
            raise ValueError("decision set is not contained in the box")

    @property
    def dimension(self) -> int:
        return self.box.dimension

    @property
    def constraint_count(self) -> int:
        return len(self.constraints)

    def constraint_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with constraint values A @ x + b."""
        I = self.dimension
        if not self.constraints:
            return np.zeros((0, I)), np.zeros(0)
        A = np.array([g.coeffs for g in self.constraints], dtype=float)
        b = np.array([g.offset for g in self.constraints], dtype=float)
        return A, b


def _require_in_box(spec: ProblemSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dimension,):
        raise ValueError(f"point has shape {x.shape}, expected ({spec.dimension},)")
    if not spec.box.contains(x):
        raise ValueError(f"point {x.tolist()} lies outside the extended box")
    return x


def evaluate_objective(spec: ProblemSpec, x) -> float:
    """Objective value at a point of the extended box."""
    return spec.objective.value(_require_in_box(spec, x))


def evaluate_constraints(spec: ProblemSpec, x) -> np.ndarray:
    """All constraint values at a point of the extended box (g <= 0 is feasible)."""
    x = _require_in_box(spec, x)
    A, b = spec.constraint_matrix()
    return A @ x + b


def lipschitz_bound(spec: ProblemSpec) -> float:
    """Common Lipschitz constant of the objective and every constraint on the box.

    For the separable objective the supremum gradient norm decouples per
    coordinate and is attained at box endpoints; for an affine constraint it
    is the coefficient norm.
    """
    m = spec.objective.max_gradient_norm(spec.box.lower, spec.box.upper)
    for g in spec.constraints:
        m = max(m, g.gradient_norm())
    return m


def squared_norm_bound(spec: ProblemSpec) -> float:
    """Constant C with ||g(y)||^2 <= C and ||x - y||^2 <= C on the hull and box.

    Both suprema are maxima of convex functions, hence attained at vertices:
    the box vertices for ||g(y)||^2, and hull-vertex/box-vertex pairs for
    ||x - y||^2.  Floored at EPS_C for degenerate single-point problems.
    """
    box_verts = spec.box.vertices()
    A, b = spec.constraint_matrix()
    sup_g = 0.0
    if len(spec.constraints) > 0:
        gv = box_verts @ A.T + b
        sup_g = float(np.max(np.sum(gv * gv, axis=1)))
    hull_verts = spec.decision_set.hull_vertices()
    diff = hull_verts[:, None, :] - box_verts[None, :, :]
    sup_dist = float(np.max(np.sum(diff * diff, axis=2)))
    return max(sup_g, sup_dist, EPS_C)
