"""Command-line entry point.

Subcommands: ``audit`` (end-to-end intervals/polygons from CSVs), ``check``
(solver vs brute-force oracle comparison), ``entropy`` (proxy informativeness
diagnostics), ``hull`` (3-class polygon sweep only).

Exit codes partition outcomes: 0 ok, 2 data errors, 3 solver errors,
4 enumeration budget exceeded, 5 verification mismatch. Structured
``event=...`` progress records go to stderr; reports stay clean and
byte-deterministic (identical inputs give identical report.json regardless
of --threads).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closed_form import (
    classification_interval_binary,
    dd_interval_binary,
    is_point_identified,
)
from .errors import (
    BudgetExceeded,
    DataError,
    DisparityBoundsError,
    SchemaError,
    SolverError,
)
from .geometry import (
    AuditReport,
    Diagnostics,
    MeasureRow,
    PolygonBlock,
    emit,
    polygon_from_support,
    sweep,
)
from .measures import CLASSIFICATION, DD_FAMILY, Measure, measure_from_name
from .oracle import OracleSpec, oracle_class, oracle_dd, oracle_hull
from .problem import (
    FULL,
    AlignmentWarning,
    CombinedProblem,
    ProxySchema,
    align,
    negative_entropy,
    read_aux_csv,
    read_main_csv,
)
from .smoothness import LipschitzSpec
from .support_class import GridSpec, class_interval
from .support_dd import dd_interval_lp, minimal_lipschitz

EXIT_OK = 0
EXIT_DATA = 2
EXIT_SOLVER = 3
EXIT_BUDGET = 4
EXIT_MISMATCH = 5

_SHRINK_ENV = "DISPARITY_BOUNDS_CHECK_SHRINK"  # test hook: corrupt solver output
_THREADS_ENV = "DISPARITY_BOUNDS_THREADS"


def _emit_event(name: str, **kv) -> None:
    fields = " ".join(f"{k}={v}" for k, v in kv.items())
    print(f"event={name}" + (f" {fields}" if fields else ""), file=sys.stderr)


@dataclass(frozen=True)
class AuditConfig:
    schema: ProxySchema
    measures: tuple[tuple[Measure, tuple[str, str]], ...]
    lipschitz: LipschitzSpec | None
    grid: GridSpec | None
    directions: int
    formats: tuple[str, ...]
    alignment: str

    @classmethod
    def load(cls, path: str) -> "AuditConfig":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        schema_ref = obj.get("schema")
        if schema_ref is None:
            raise SchemaError("config is missing the `schema` path")
        schema = ProxySchema.from_json(os.path.join(base, schema_ref))
        raw_measures = obj.get("measures", [])
        if not raw_measures:
            raise SchemaError("config declares no measures")
        measures = []
        for item in raw_measures:
            m = measure_from_name(item["measure"])
            pair = tuple(item["pair"])
            if len(pair) != 2 or pair[0] == pair[1]:
                raise SchemaError(f"bad pair {pair!r}")
            for name in pair:
                if name not in schema.classes:
                    raise SchemaError(f"pair references unknown class {name!r}")
            if schema.reference_class not in pair:
                raise SchemaError(
                    f"pair {pair!r} must contain the reference class "
                    f"{schema.reference_class!r}"
                )
            if pair[0] != schema.reference_class:
                pair = (schema.reference_class, pair[0])
            measures.append((m, pair))
        lip_cfg = obj.get("lipschitz", "off")
        if lip_cfg == "off":
            lip = None
        elif lip_cfg == "minimal":
            lip = LipschitzSpec(scale="minimal")
        elif isinstance(lip_cfg, dict) and "L" in lip_cfg:
            lip = LipschitzSpec(
                scale=float(lip_cfg["L"]),
                weights=tuple(lip_cfg["weights"]) if lip_cfg.get("weights") else None,
            )
        else:
            raise SchemaError(f"bad lipschitz config {lip_cfg!r}")
        grid = None
        if "grid" in obj:
            grid = GridSpec(
                resolution=int(obj["grid"].get("resolution", 101)),
                refine_rounds=int(obj["grid"].get("refine_rounds", 2)),
            )
        directions = int(obj.get("directions", 64))
        formats = tuple(obj.get("output", {}).get("formats", ["json", "csv", "svg"]))
        for f in formats:
            if f not in ("json", "csv", "svg"):
                raise SchemaError(f"unknown output format {f!r}")
        alignment = obj.get("alignment", "intersect")
        if alignment not in ("intersect", "error"):
            raise SchemaError(f"unknown alignment policy {alignment!r}")
        return cls(
            schema=schema,
            measures=tuple(measures),
            lipschitz=lip,
            grid=grid,
            directions=directions,
            formats=formats,
            alignment=alignment,
        )


def _load_problem(args, cfg: AuditConfig) -> CombinedProblem:
    main = read_main_csv(args.main, cfg.schema)
    _emit_event("ingest_main", cells=len(main.keys), mode=main.outcome.mode)
    aux = read_aux_csv(args.aux, cfg.schema)
    _emit_event("ingest_aux", cells=len(aux.keys))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AlignmentWarning)
        problem = align(main, aux, policy=cfg.alignment)
    _emit_event(
        "align", cells=problem.n_cells, dropped_mass=f"{problem.dropped_mass:.9g}"
    )
    return problem


def _require_modes(problem: CombinedProblem, cfg: AuditConfig) -> None:
    for m, pair in cfg.measures:
        if m.needs_full_mode and problem.mode != FULL:
            raise DataError(
                f"{m.name} needs true outcomes but the main dataset has no "
                "`y` column (decision-only mode)"
            )


def _interval_for(problem, measure, pair, cfg: AuditConfig, pool, l_min):
    lip = cfg.lipschitz
    if lip is not None and lip.minimal and l_min is not None:
        lip = LipschitzSpec(scale=l_min, weights=lip.weights)
    labels = problem.pair(*pair)
    if measure.family == DD_FAMILY:
        if problem.n_classes == 2 and lip is None:
            return dd_interval_binary(problem, labels)
        return dd_interval_lp(problem, labels, lip)
    if problem.n_classes == 2 and lip is None:
        return classification_interval_binary(problem, measure, labels)
    return class_interval(problem, measure, labels, grid=cfg.grid, lip=lip, pool=pool)


def _constraints_dict(cfg: AuditConfig, l_min) -> dict:
    if cfg.lipschitz is None:
        return {"lipschitz": None}
    scale = l_min if cfg.lipschitz.minimal else cfg.lipschitz.scale
    return {
        "lipschitz": {
            "L": scale,
            "minimal": cfg.lipschitz.minimal,
            "weights": list(cfg.lipschitz.weights) if cfg.lipschitz.weights else None,
        }
    }


def _build_report(problem: CombinedProblem, cfg: AuditConfig, pool) -> AuditReport:
    l_min = None
    if cfg.lipschitz is not None and cfg.lipschitz.minimal:
        l_min = minimal_lipschitz(problem, cfg.lipschitz)
        _emit_event("l_min", value=f"{l_min:.9g}")
    constraints = _constraints_dict(cfg, l_min)
    rows = []
    for measure, pair in cfg.measures:
        iv = _interval_for(problem, measure, pair, cfg, pool, l_min)
        rows.append(
            MeasureRow(
                measure=measure.name,
                pair=pair,
                lower=iv.lower,
                upper=iv.upper,
                method=iv.method,
                constraints=constraints,
                gap_hint=iv.gap_hint,
            )
        )
        _emit_event(
            "interval",
            measure=measure.name,
            pair=f"{pair[0]}:{pair[1]}",
            lower=f"{iv.lower:.9g}",
            upper=f"{iv.upper:.9g}",
        )
    polygons = []
    if problem.n_classes == 3:
        names = [lab.name for lab in problem.class_labels]
        seen = []
        for measure, _ in cfg.measures:
            if measure.name in seen:
                continue
            seen.append(measure.name)
            lip = cfg.lipschitz
            if lip is not None and lip.minimal and l_min is not None:
                lip = LipschitzSpec(scale=l_min, weights=lip.weights)
            profile = sweep(
                problem, measure, cfg.directions, lip=lip, grid=cfg.grid, pool=pool
            )
            poly = polygon_from_support(profile)
            polygons.append(
                PolygonBlock(
                    measure=measure.name,
                    pairs=((names[0], names[1]), (names[0], names[2])),
                    vertices=tuple((float(x), float(y)) for x, y in poly.vertices),
                    n_directions=cfg.directions,
                    constraints=constraints,
                )
            )
            _emit_event("polygon", measure=measure.name, vertices=len(poly.vertices))
    identified = {
        m.name: bool(is_point_identified(problem, m))
        for m, _ in dict.fromkeys(cfg.measures)
    }
    diagnostics = Diagnostics(
        entropy_class=negative_entropy(problem, "class"),
        entropy_outcome=negative_entropy(problem, "outcome"),
        identified=identified,
        dropped_mass=problem.dropped_mass,
        l_min=l_min,
    )
    return AuditReport(
        problem_digest=problem.digest(),
        measures=tuple(rows),
        polygons=tuple(polygons),
        diagnostics=diagnostics,
    )


def cmd_audit(args) -> int:
    cfg = AuditConfig.load(args.config)
    problem = _load_problem(args, cfg)
    _require_modes(problem, cfg)
    pool = ThreadPoolExecutor(args.threads) if args.threads > 1 else None
    try:
        report = _build_report(problem, cfg, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    for fmt in cfg.formats:
        for path in emit(report, fmt, args.out):
            _emit_event("emit", path=path)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = AuditConfig.load(args.config)
    problem = _load_problem(args, cfg)
    _require_modes(problem, cfg)
    spec = OracleSpec(
        per_cell_grid=args.grid,
        max_total_points=args.budget,
        seed=args.seed,
    )
    shrink = float(os.environ.get(_SHRINK_ENV, "0") or "0")
    bound = 2.0 / (args.grid - 1)
    header = f"{'measure':<8} {'solver interval':<28} {'oracle interval':<28} verdict"
    print(header)
    print("-" * len(header))
    failures = 0
    if problem.n_classes == 2:
        for measure, pair in cfg.measures:
            labels = problem.pair(*pair)
            if measure.family == DD_FAMILY:
                solver = dd_interval_binary(problem, labels)
                orac = oracle_dd(problem, spec, labels)
            else:
                solver = classification_interval_binary(problem, measure, labels)
                orac = oracle_class(problem, measure, spec, labels)
            lo, hi = solver.lower + shrink, solver.upper - shrink
            contained = lo - 1e-9 <= orac.lower and orac.upper <= hi + 1e-9
            gaps_ok = (orac.lower - lo) <= bound and (hi - orac.upper) <= bound
            ok = contained and gaps_ok
            failures += 0 if ok else 1
            print(
                f"{measure.name:<8} [{lo:+.6f}, {hi:+.6f}]   "
                f"[{orac.lower:+.6f}, {orac.upper:+.6f}]   "
                + ("ok" if ok else "MISMATCH")
            )
    elif problem.n_classes == 3:
        seen = set()
        for measure, _ in cfg.measures:
            if measure.family != DD_FAMILY or measure.name in seen:
                continue
            seen.add(measure.name)
            profile = sweep(problem, measure, args.directions, pool=None)
            poly = polygon_from_support(profile)
            cloud = oracle_hull(problem, measure, spec)
            ok = all(poly.contains(pt, slack=1e-6 - shrink) for pt in cloud)
            failures += 0 if ok else 1
            print(
                f"{measure.name:<8} polygon({len(poly.vertices)} vertices)        "
                f"cloud({len(cloud)} points)          " + ("ok" if ok else "MISMATCH")
            )
    else:
        raise DataError("check supports 2- or 3-class problems")
    return EXIT_OK if failures == 0 else EXIT_MISMATCH


def cmd_entropy(args) -> int:
    cfg = AuditConfig.load(args.config)
    problem = _load_problem(args, cfg)
    out = {
        "entropy_class": negative_entropy(problem, "class"),
        "entropy_outcome": negative_entropy(problem, "outcome"),
        "dropped_mass": problem.dropped_mass,
        "identified": {
            m.name: bool(is_point_identified(problem, m))
            for m, _ in dict.fromkeys(cfg.measures)
        },
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_hull(args) -> int:
    cfg = AuditConfig.load(args.config)
    problem = _load_problem(args, cfg)
    _require_modes(problem, cfg)
    if problem.n_classes != 3:
        raise DataError("hull needs exactly 3 classes")
    pool = ThreadPoolExecutor(args.threads) if args.threads > 1 else None
    try:
        cfg2 = AuditConfig(
            schema=cfg.schema,
            measures=cfg.measures,
            lipschitz=cfg.lipschitz,
            grid=cfg.grid,
            directions=args.directions or cfg.directions,
            formats=cfg.formats,
            alignment=cfg.alignment,
        )
        report = _build_report(problem, cfg2, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    report = AuditReport(
        problem_digest=report.problem_digest,
        measures=(),
        polygons=report.polygons,
        diagnostics=report.diagnostics,
    )
    for fmt in cfg.formats:
        if fmt == "csv" and not report.measures and not report.polygons:
            continue
        for path in emit(report, fmt, args.out):
            _emit_event("emit", path=path)
    return EXIT_OK


def _threads_default() -> int:
    env = os.environ.get(_THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="disparity-bounds",
        description="Partial-identification bounds for disparity measures "
        "from two separate datasets.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_out: bool):
        p.add_argument("--main", required=True, help="decision-side CSV")
        p.add_argument("--aux", required=True, help="class-side CSV")
        p.add_argument("--config", required=True, help="audit config JSON")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=_threads_default())
        p.add_argument("--seed", type=int, default=0)

    pa = sub.add_parser("audit", help="compute intervals/polygons and emit reports")
    common(pa, needs_out=True)
    pa.set_defaults(func=cmd_audit)

    pc = sub.add_parser("check", help="certify solver results against the oracle")
    common(pc, needs_out=False)
    pc.add_argument("--grid", type=int, default=51, help="oracle per-cell grid")
    pc.add_argument("--budget", type=float, default=1e7)
    pc.add_argument("--directions", type=int, default=64)
    pc.set_defaults(func=cmd_check)

    pe = sub.add_parser("entropy", help="print proxy informativeness diagnostics")
    common(pe, needs_out=False)
    pe.set_defaults(func=cmd_entropy)

    ph = sub.add_parser("hull", help="emit 3-class disparity polygons only")
    common(ph, needs_out=True)
    ph.add_argument("--directions", type=int, default=None)
    ph.set_defaults(func=cmd_hull)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        _emit_event("error", kind="BudgetExceeded", message=repr(str(exc)))
        return EXIT_BUDGET
    except (DataError, OSError) as exc:
        _emit_event("error", kind=type(exc).__name__, message=repr(str(exc)))
        return EXIT_DATA
    except SolverError as exc:
        _emit_event("error", kind=type(exc).__name__, message=repr(str(exc)))
        return EXIT_SOLVER
    except DisparityBoundsError as exc:  # residual library errors are data-ish
        _emit_event("error", kind=type(exc).__name__, message=repr(str(exc)))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
