"""Command-line front end.

Modes: solve (one run, trace CSV + summary), sweep (iterations-to-accuracy
over a list of V values), diagnose (multiplier estimate, region geometry,
per-step certificates), and reproduce (the bundled demo instances with both
plain and staggered averages, emitted per figure).

Problem instances are JSON files; see parse_problem_config for the schema.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis
from .engine import (NumericError, RunTrace, SolverConfig, format_trace_float,
                     run, write_trace_csv)
from .oracle import solve_reference, solve_reference_lp
from .problem import (
    AffineConstraint,
    ExplicitPoints,
    ExtendedBox,
    GridProduct,
    LinearPiece,
    PiecewiseLinearPiece,
    ProblemSpec,
    QuadraticPiece,
    SeparableConvexObjective,
    lipschitz_bound,
    squared_norm_bound,
    tight_box,
)

__all__ = [
    "ParseError",
    "ExperimentConfig",
    "parse_problem_config",
    "serialize_problem_config",
    "reference_instance",
    "FIGURE_SETUPS",
    "run_cli",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_CHECK_FAILED = 3


class ParseError(ValueError):
    """Problem config rejected; carries the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# Problem config (JSON)
# ---------------------------------------------------------------------------

_PIECE_KEYS = {
    "linear": {"kind", "slope"},
    "quadratic": {"kind", "curvature", "slope"},
    "piecewise_linear": {"kind", "breakpoints", "slopes"},
}


def _parse_piece(raw, where: str):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ParseError(where, "piece must be an object with a 'kind'")
    kind = raw["kind"]
    allowed = _PIECE_KEYS.get(kind)
    if allowed is None:
        raise ParseError(f"{where}.kind", f"unknown piece kind {kind!r}")
    extra = set(raw) - allowed
    if extra:
        raise ParseError(f"{where}.{sorted(extra)[0]}", "unknown key")
    try:
        if kind == "linear":
            return LinearPiece(slope=float(raw.get("slope", 0.0)))
        if kind == "quadratic":
            return QuadraticPiece(curvature=float(raw.get("curvature", 0.0)),
                                  slope=float(raw.get("slope", 0.0)))
        return PiecewiseLinearPiece(breakpoints=tuple(raw.get("breakpoints", ())),
                                    slopes=tuple(raw["slopes"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(where, str(exc)) from exc


def parse_problem_config(text: str) -> ProblemSpec:
    """Build a ProblemSpec from JSON text.

    Schema: dimension (int); decision_set with either "grid" (per-coordinate
    value lists) or "points" (list of vectors); optional box
    {lower, upper} (defaults to the tight hull box); objective (list of
    pieces, one per coordinate); optional constraints (list of
    {coeffs, offset, sense}) with sense "<=" or ">=" relative to
    coeffs . x <sense> offset, normalized internally to g(x) <= 0.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<json>", str(exc)) from exc
    if not isinstance(raw, dict):
        raise ParseError("<root>", "config must be a JSON object")
    known = {"dimension", "decision_set", "box", "objective", "constraints"}
    extra = set(raw) - known
    if extra:
        raise ParseError(sorted(extra)[0], "unknown key")
    for key in ("dimension", "decision_set", "objective"):
        if key not in raw:
            raise ParseError(key, "missing required key")

    dim = raw["dimension"]
    if not isinstance(dim, int) or dim < 1:
        raise ParseError("dimension", "must be a positive integer")

    ds_raw = raw["decision_set"]
    if not isinstance(ds_raw, dict) or len(set(ds_raw) & {"grid", "points"}) != 1:
        raise ParseError("decision_set", "needs exactly one of 'grid' or 'points'")
    extra = set(ds_raw) - {"grid", "points"}
    if extra:
        raise ParseError(f"decision_set.{sorted(extra)[0]}", "unknown key")
    try:
        if "grid" in ds_raw:
            if len(ds_raw["grid"]) != dim:
                raise ValueError(f"expected {dim} coordinate value lists")
            decision = GridProduct(values=tuple(tuple(v) for v in ds_raw["grid"]))
        else:
            decision = ExplicitPoints(points=np.asarray(ds_raw["points"], dtype=float))
            if decision.dimension != dim:
                raise ValueError(f"points have dimension {decision.dimension}, expected {dim}")
    except (ValueError, TypeError) as exc:
        raise ParseError("decision_set", str(exc)) from exc

    if "box" in raw:
        box_raw = raw["box"]
        extra = set(box_raw) - {"lower", "upper"}
        if extra:
            raise ParseError(f"box.{sorted(extra)[0]}", "unknown key")
        try:
            box = ExtendedBox(lower=np.asarray(box_raw["lower"], dtype=float),
                              upper=np.asarray(box_raw["upper"], dtype=float))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError("box", str(exc)) from exc
        if box.dimension != dim:
            raise ParseError("box", f"has dimension {box.dimension}, expected {dim}")
    else:
        box = tight_box(decision)

    pieces_raw = raw["objective"]
    if not isinstance(pieces_raw, list) or len(pieces_raw) != dim:
        raise ParseError("objective", f"needs exactly {dim} pieces")
    pieces = tuple(_parse_piece(p, f"objective[{i}]") for i, p in enumerate(pieces_raw))

    constraints = []
    for j, c_raw in enumerate(raw.get("constraints", [])):
        where = f"constraints[{j}]"
        if not isinstance(c_raw, dict):
            raise ParseError(where, "must be an object")
        extra = set(c_raw) - {"coeffs", "offset", "sense"}
        if extra:
            raise ParseError(f"{where}.{sorted(extra)[0]}", "unknown key")
        sense = c_raw.get("sense", "<=")
        if sense not in ("<=", ">="):
            raise ParseError(f"{where}.sense", f"must be '<=' or '>=', got {sense!r}")
        try:
            coeffs = np.asarray(c_raw["coeffs"], dtype=float)
            offset = float(c_raw.get("offset", 0.0))
            if sense == ">=":
                constraints.append(AffineConstraint(coeffs=-coeffs, offset=offset))
            else:
                constraints.append(AffineConstraint(coeffs=coeffs, offset=-offset))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(where, str(exc)) from exc

    try:
        return ProblemSpec(decision_set=decision, box=box,
                           objective=SeparableConvexObjective(pieces=pieces),
                           constraints=tuple(constraints))
    except ValueError as exc:
        raise ParseError("decision_set", str(exc)) from exc


def _piece_dict(piece) -> dict:
    if isinstance(piece, LinearPiece):
        return {"kind": "linear", "slope": piece.slope}
    if isinstance(piece, QuadraticPiece):
        return {"kind": "quadratic", "curvature": piece.curvature, "slope": piece.slope}
    return {"kind": "piecewise_linear", "breakpoints": list(piece.breakpoints),
            "slopes": list(piece.slopes)}


def serialize_problem_config(spec: ProblemSpec) -> str:
    """Canonical JSON for a spec; parsing it reproduces the spec exactly."""
    if isinstance(spec.decision_set, GridProduct):
        ds = {"grid": [list(v) for v in spec.decision_set.values]}
    else:
        ds = {"points": spec.decision_set.points.tolist()}
    doc = {
        "dimension": spec.dimension,
        "decision_set": ds,
        "box": {"lower": spec.box.lower.tolist(), "upper": spec.box.upper.tolist()},
        "objective": [_piece_dict(p) for p in spec.objective.pieces],
        "constraints": [
            {"coeffs": g.coeffs.tolist(), "offset": -g.offset, "sense": "<="}
            for g in spec.constraints
        ],
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Bundled demo instances
# ---------------------------------------------------------------------------

def reference_instance(objective: str = "linear",
                       extra_constraint: bool = False) -> ProblemSpec:
    """Two-coordinate demo problem on the grid {0,1,2,3}^2.

    Averages must satisfy 2*x1 + x2 >= 1.5 and x1 + 2*x2 >= 1.5 (plus
    x1 + x2 >= 1 when extra_constraint is set, which makes the dual maximizer
    non-unique).  objective picks 1.5*x1 + x2 ("linear") or x1^2 + x2^2
    ("quadratic"); both are minimized at the average (0.5, 0.5).
    """
    grid = GridProduct(values=((0.0, 1.0, 2.0, 3.0), (0.0, 1.0, 2.0, 3.0)))
    if objective == "linear":
        pieces = (LinearPiece(slope=1.5), LinearPiece(slope=1.0))
    elif objective == "quadratic":
        pieces = (QuadraticPiece(curvature=1.0, slope=0.0),
                  QuadraticPiece(curvature=1.0, slope=0.0))
    else:
        raise ValueError(f"unknown objective {objective!r}")
    constraints = [AffineConstraint(coeffs=(-2.0, -1.0), offset=1.5),
                   AffineConstraint(coeffs=(-1.0, -2.0), offset=1.5)]
    if extra_constraint:
        constraints.append(AffineConstraint(coeffs=(-1.0, -1.0), offset=1.0))
    return ProblemSpec(decision_set=grid, box=tight_box(grid),
                       objective=SeparableConvexObjective(pieces=pieces),
                       constraints=tuple(constraints))


# figure id -> (objective, extra constraint, geometry, fixed staggered start)
FIGURE_SETUPS = {
    2: ("linear", False, "polyhedral", 2048),
    3: ("quadratic", False, "smooth", 8192),
    4: ("linear", True, "polyhedral", 2048),
    5: ("quadratic", True, "smooth", 8192),
}


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    out_dir: str
    problem_path: Optional[str] = None
    v_list: tuple = (100.0,)
    horizon: int = 200_000
    restart_base: Optional[int] = 2
    seed: int = 0
    figure: Optional[int] = None
    method: str = "grid-dual-max"
    geometry: str = "both"
    oracle_resolution: float = 0.01
    eps_anchor: float = 0.01
    v_anchor: float = 100.0
    log_every: int = 1

    def __post_init__(self):
        if self.mode not in ("solve", "sweep", "diagnose", "reproduce"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode != "reproduce" and self.problem_path is None:
            raise ValueError(f"mode {self.mode} needs a problem file")
        if self.mode == "solve" and len(self.v_list) != 1:
            raise ValueError("solve mode takes exactly one V")
        if self.mode == "sweep" and len(self.v_list) < 2:
            raise ValueError("sweep mode needs at least two V values")
        if not self.v_list or any(v < 1.0 for v in self.v_list):
            raise ValueError("V values must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


def _load_spec(cfg: ExperimentConfig) -> ProblemSpec:
    with open(cfg.problem_path) as fh:
        return parse_problem_config(fh.read())


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _write_lines(path: str, lines) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _do_solve(cfg: ExperimentConfig) -> int:
    spec = _load_spec(cfg)
    solver = SolverConfig(v=cfg.v_list[0], horizon=cfg.horizon,
                          restart_base=cfg.restart_base)
    trace = run(spec, solver)
    os.makedirs(cfg.out_dir, exist_ok=True)
    trace_path = os.path.join(cfg.out_dir, "trace.csv")
    rows = np.arange(0, len(trace.ts), cfg.log_every)
    if rows[-1] != len(trace.ts) - 1:
        rows = np.append(rows, len(trace.ts) - 1)
    write_trace_csv(trace, trace_path, rows=rows)
    xbar = trace.xbar[-1]
    A, b = spec.constraint_matrix()
    lines = [
        "mode: solve",
        f"problem: {cfg.problem_path}",
        f"V: {_fmt(trace.v)}",
        f"horizon: {trace.horizon}",
        f"restart_base: {cfg.restart_base}",
        f"trace_csv: {trace_path}",
        f"rows_written: {len(rows)}",
        f"f_xbar_final: {_fmt(spec.objective.value(xbar))}",
    ]
    g = A @ xbar + b if len(b) else np.zeros(0)
    for j, gv in enumerate(g):
        lines.append(f"g_{j + 1}_xbar_final: {_fmt(gv)}")
    _write_lines(os.path.join(cfg.out_dir, "summary.txt"), lines)
    return EXIT_OK


def _do_sweep(cfg: ExperimentConfig) -> int:
    spec = _load_spec(cfg)
    f_opt = solve_reference(spec, cfg.oracle_resolution).f_opt
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = ["V,eps,iterations_plain,iterations_staggered"]
    vs, hits_plain, hits_stag = [], [], []
    for v in cfg.v_list:
        eps = cfg.eps_anchor * cfg.v_anchor / v
        trace = run(spec, SolverConfig(v=v, horizon=cfg.horizon,
                                       restart_base=cfg.restart_base))
        plain, stag = analysis.iterations_to_accuracy(trace, f_opt, eps)
        rows.append(f"{_fmt(v)},{_fmt(eps)},"
                    f"{-1 if plain is None else plain},"
                    f"{-1 if stag is None else stag}")
        vs.append(v)
        hits_plain.append(plain)
        hits_stag.append(stag)
    _write_lines(os.path.join(cfg.out_dir, "sweep.csv"), rows)

    lines = [
        "mode: sweep",
        f"problem: {cfg.problem_path}",
        f"horizon: {cfg.horizon}",
        f"f_opt_oracle: {_fmt(f_opt)}",
        f"eps_per_V: {_fmt(cfg.eps_anchor)} * {_fmt(cfg.v_anchor)} / V",
    ]
    for label, hits in (("plain", hits_plain), ("staggered", hits_stag)):
        if all(h is not None for h in hits):
            slope = analysis.fit_loglog_slope(vs, hits)
            lines.append(f"slope_{label}: {_fmt(slope)}")
        else:
            lines.append(f"slope_{label}: unavailable (accuracy not reached)")
    _write_lines(os.path.join(cfg.out_dir, "summary.txt"), lines)
    return EXIT_OK


def _geometries(cfg: ExperimentConfig):
    return ("polyhedral", "smooth") if cfg.geometry == "both" else (cfg.geometry,)


def _do_diagnose(cfg: ExperimentConfig) -> int:
    spec = _load_spec(cfg)
    v = cfg.v_list[0]
    m = lipschitz_bound(spec)
    c = squared_norm_bound(spec)
    trace = run(spec, SolverConfig(v=v, horizon=cfg.horizon,
                                   restart_base=cfg.restart_base))
    estimate = analysis.estimate_multiplier(spec, cfg.method, v=v, seed=cfg.seed)
    drift = analysis.drift_certificate(trace, estimate.lam, v, c)

    os.makedirs(cfg.out_dir, exist_ok=True)
    lines = [
        "mode: diagnose",
        f"problem: {cfg.problem_path}",
        f"V: {_fmt(v)}",
        f"horizon: {cfg.horizon}",
        f"lipschitz_M: {_fmt(m)}",
        f"norm_bound_C: {_fmt(c)}",
        f"estimate_method: {estimate.method}",
        f"estimate_d: {_fmt(estimate.d_value)}",
        f"estimate_residual: {_fmt(estimate.residual)}",
        f"estimate_lambda: {[float(u) for u in estimate.lam]}",
        f"multiplier_possibly_nonunique: {estimate.possibly_nonunique}",
        f"drift_certificate_violations: {len(drift.violations)}",
        f"drift_certificate_max_slack: {_fmt(drift.max_slack)}",
    ]
    for geometry in _geometries(cfg):
        l_hat = analysis.estimate_sharpness(spec, estimate, geometry, seed=cfg.seed)
        bounds = _bounds_for(geometry, m, c, v, l_hat)
        report = analysis.phase_detect(trace, estimate, bounds, geometry)
        radius = bounds.radius_poly if geometry == "polyhedral" else bounds.radius_smooth
        lines += [
            f"{geometry}_decay_rate: {_fmt(l_hat)}",
            f"{geometry}_region_radius: {_fmt(radius)}",
            f"{geometry}_t_hit: {report.t_hit}",
            f"{geometry}_absorbed: {report.absorbed}",
            f"{geometry}_violations_after_hit: {report.violation_count}",
        ]
        start = report.t_hit if report.t_hit is not None else 0
        length = trace.horizon - start
        if length >= 1:
            obj_b, vio_b = analysis.convergence_bounds(
                trace, bounds, start, length, geometry, lambda_star=estimate)
            lines.append(f"{geometry}_steady_objective_bound: {_fmt(obj_b)}")
            lines.append(f"{geometry}_steady_violation_bound: {_fmt(float(np.max(vio_b)))}")
    gen_bounds = analysis.BoundSet(m=m, c=c, v=v)
    obj_b, vio_b = analysis.convergence_bounds(trace, gen_bounds, 0, trace.horizon,
                                               "general")
    lines.append(f"general_objective_bound: {_fmt(obj_b)}")
    if len(vio_b):
        lines.append(f"general_violation_bound: {_fmt(float(np.max(vio_b)))}")
    _write_lines(os.path.join(cfg.out_dir, "summary.txt"), lines)

    cert_path = os.path.join(cfg.out_dir, "certificates.csv")
    lam_all = np.vstack([trace.lambda_rows(), trace.lambda_final])
    dists = np.linalg.norm(lam_all - estimate.lam, axis=1)
    steps = np.linalg.norm(np.diff(lam_all, axis=0), axis=1)
    with open(cert_path, "w", newline="") as fh:
        fh.write("t,dist_to_estimate,step_norm,drift_slack\n")
        for k in range(len(trace.ts)):
            fh.write(f"{int(trace.ts[k])},{format_trace_float(dists[k])},"
                     f"{format_trace_float(steps[k])},{format_trace_float(drift.slack[k])}\n")
    return EXIT_OK


def _bounds_for(geometry: str, m: float, c: float, v: float, l_hat: float):
    if geometry == "polyhedral":
        return analysis.BoundSet(m=m, c=c, v=v, l_poly=l_hat)
    return analysis.BoundSet(m=m, c=c, v=v, l_smooth=l_hat)


def _window_average(csum: np.ndarray, start: int, end: int) -> np.ndarray:
    return (csum[end] - csum[start]) / (end - start)


def _do_reproduce(cfg: ExperimentConfig) -> int:
    figures = [cfg.figure] if cfg.figure else sorted(FIGURE_SETUPS)
    os.makedirs(cfg.out_dir, exist_ok=True)
    v = cfg.v_list[0]
    failed = []
    for fig in figures:
        objective, extra, geometry, fixed_start = FIGURE_SETUPS[fig]
        spec = reference_instance(objective, extra)
        trace = run(spec, SolverConfig(v=v, horizon=cfg.horizon, restart_base=2))
        grid_oracle = solve_reference(spec, cfg.oracle_resolution)
        f_opt = grid_oracle.f_opt
        lp_line = None
        if objective == "linear":
            lp = solve_reference_lp(spec)
            lp_line = lp.f_opt
            f_opt = lp.f_opt

        m = lipschitz_bound(spec)
        c = squared_norm_bound(spec)
        estimate = analysis.estimate_multiplier(spec, cfg.method, v=v, seed=cfg.seed)
        l_hat = analysis.estimate_sharpness(spec, estimate, geometry, seed=cfg.seed)
        bounds = _bounds_for(geometry, m, c, v, l_hat)
        report = analysis.phase_detect(trace, estimate, bounds, geometry)
        detected = report.t_hit if report.t_hit is not None else 0

        A, b = spec.constraint_matrix()
        csum = np.vstack([np.zeros(spec.dimension), np.cumsum(trace.x, axis=0)])
        marks = [1 << k for k in range(cfg.horizon.bit_length()) if (1 << k) <= cfg.horizon]
        if marks[-1] != cfg.horizon:
            marks.append(cfg.horizon)

        def stats(avg):
            return [spec.objective.value(avg)] + list(A @ avg + b)

        header = (["t", "f_plain"] + [f"g_{j + 1}_plain" for j in range(len(b))]
                  + ["f_staggered_fixed"] + [f"g_{j + 1}_staggered_fixed" for j in range(len(b))]
                  + ["f_staggered_detected"] + [f"g_{j + 1}_staggered_detected" for j in range(len(b))])
        rows = [",".join(header)]
        for t in marks:
            cells = [str(t)] + [format_trace_float(u) for u in stats(_window_average(csum, 0, t))]
            for start in (fixed_start, detected):
                if t > start:
                    cells += [format_trace_float(u) for u in stats(_window_average(csum, start, t))]
                else:
                    cells += ["nan"] * (1 + len(b))
            rows.append(",".join(cells))
        fig_csv = os.path.join(cfg.out_dir, f"figure{fig}.csv")
        _write_lines(fig_csv, rows)

        final_plain = _window_average(csum, 0, cfg.horizon)
        f_final = spec.objective.value(final_plain)
        g_final = A @ final_plain + b
        ok = abs(f_final - f_opt) <= 0.02 and (len(g_final) == 0 or np.max(g_final) <= 0.02)
        if not ok:
            failed.append(fig)

        lines = [
            f"figure: {fig}",
            f"objective: {objective}",
            f"extra_constraint: {extra}",
            f"geometry: {geometry}",
            f"V: {_fmt(v)}",
            f"horizon: {cfg.horizon}",
            f"fixed_staggered_start: {fixed_start}",
            f"detected_t_hit: {report.t_hit}",
            f"absorbed: {report.absorbed}",
            f"multiplier_possibly_nonunique: {estimate.possibly_nonunique}",
            f"f_opt_oracle_grid: {_fmt(grid_oracle.f_opt)}",
        ]
        if lp_line is not None:
            lines.append(f"f_opt_oracle_lp: {_fmt(lp_line)}")
        lines += [
            f"f_xbar_final: {_fmt(f_final)}",
            f"max_violation_final: {_fmt(float(np.max(g_final)) if len(g_final) else 0.0)}",
            f"csv: {fig_csv}",
            f"check: {'PASS' if ok else 'FAIL'}",
        ]
        _write_lines(os.path.join(cfg.out_dir, f"figure{fig}_summary.txt"), lines)
        print(f"figure {fig}: {'PASS' if ok else 'FAIL'} "
              f"(f_final={f_final:.4f}, f_opt={f_opt:.4f})")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tavopt",
        description="Time-average optimization solver and diagnostics")
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p, needs_problem: bool):
        if needs_problem:
            p.add_argument("--problem", required=True, help="problem config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--V", default="100",
                       help="V value (comma-separated list for sweep)")
        p.add_argument("--horizon", type=int, default=200_000)
        p.add_argument("--restart-base", type=int, default=2)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="one run, trace CSV + summary")
    common(p, True)
    p.add_argument("--log-every", type=int, default=1,
                   help="write every k-th trace row")

    p = sub.add_parser("sweep", help="iterations-to-accuracy over a V list")
    common(p, True)
    p.add_argument("--eps-anchor", type=float, default=0.01)
    p.add_argument("--v-anchor", type=float, default=100.0)
    p.add_argument("--oracle-resolution", type=float, default=0.01)

    p = sub.add_parser("diagnose", help="multiplier estimate and certificates")
    common(p, True)
    p.add_argument("--method", default="grid-dual-max",
                   choices=["grid-dual-max", "tail-average"])
    p.add_argument("--geometry", default="both",
                   choices=["polyhedral", "smooth", "both"])

    p = sub.add_parser("reproduce", help="bundled demo instances, per-figure CSVs")
    common(p, False)
    p.add_argument("--figure", type=int, choices=sorted(FIGURE_SETUPS))
    p.add_argument("--oracle-resolution", type=float, default=0.01)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    v_list = tuple(float(tok) for tok in str(args.V).split(",") if tok)
    return ExperimentConfig(
        mode=args.mode,
        out_dir=args.out,
        problem_path=getattr(args, "problem", None),
        v_list=v_list,
        horizon=args.horizon,
        restart_base=args.restart_base,
        seed=args.seed,
        figure=getattr(args, "figure", None),
        method=getattr(args, "method", "grid-dual-max"),
        geometry=getattr(args, "geometry", "both"),
        oracle_resolution=getattr(args, "oracle_resolution", 0.01),
        eps_anchor=getattr(args, "eps_anchor", 0.01),
        v_anchor=getattr(args, "v_anchor", 100.0),
        log_every=getattr(args, "log_every", 1),
    )


def run_cli(argv) -> int:
    """Parse arguments and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = _config_from_args(args)
        if cfg.mode == "solve":
            return _do_solve(cfg)
        if cfg.mode == "sweep":
            return _do_sweep(cfg)
        if cfg.mode == "diagnose":
            return _do_diagnose(cfg)
        return _do_reproduce(cfg)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, ValueError, OSError, analysis.EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
