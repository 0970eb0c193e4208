"""Direction sweeps, hull polygons, and report artifacts.

For three protected classes the simultaneous pair disparities
(delta(a, b1), delta(a, b2)) form a convex-hull-characterizable planar set:
evaluating the support function h(rho) on a circle of directions and
intersecting the halfplanes rho . x <= h(rho) yields a safe outer polygon.
Reports serialize to JSON (machine-readable, round-trips exactly), CSV
(interval rows and polygon vertices) and deterministic SVG plots.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._pool import pmap
from .errors import DataError, DegenerateProfile, EmptyReport, WrongClassCount
from .measures import CLASSIFICATION, DD_FAMILY, Measure
from .problem import CombinedProblem
from .smoothness import LipschitzSpec
from .support_class import GridSpec, class_support
from .support_dd import Direction, dd_support, minimal_lipschitz

_HALFPLANE_TOL = 1e-9
_VERTEX_DEDUP = 1e-12


@dataclass(frozen=True)
class SupportProfile:
    directions: np.ndarray  # (n, 2) unit vectors
    values: np.ndarray  # (n,)
    measure: Measure
    constraints: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.ndim != 2 or d.shape[1] != 2 or d.shape[0] != v.shape[0]:
            raise DataError("profile needs matching (n,2) directions and n values")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(v))):
            raise DataError("profile entries must be finite")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class HullPolygon:
    vertices: np.ndarray  # (k, 2) in counterclockwise order
    halfplanes: tuple[tuple[float, float, float], ...]  # (rho_x, rho_y, h)

    @property
    def diameter(self) -> float:
        if len(self.vertices) < 2:
            return 0.0
        v = self.vertices
        d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)
        return float(d.max())

    def area(self) -> float:
        """Shoelace area; 0 for degenerate polygons."""
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(
            np.abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        )

    def contains(self, point, slack: float = 0.0) -> bool:
        x, y = float(point[0]), float(point[1])
        return all(rx * x + ry * y <= h + slack for rx, ry, h in self.halfplanes)


def circle_directions(n: int) -> np.ndarray:
    theta = 2.0 * math.pi * np.arange(n) / n
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


def sweep(
    problem: CombinedProblem,
    measure: Measure,
    n_directions: int = 64,
    lip: LipschitzSpec | None = None,
    grid: GridSpec | None = None,
    pool=None,
) -> SupportProfile:
    """Evaluate the support function on evenly spaced circle directions."""
    if problem.n_classes != 3:
        raise WrongClassCount("2-D sweeps need exactly 3 classes")
    if n_directions < 8:
        raise DataError("need at least 8 directions")
    dirs = circle_directions(n_directions)
    constraints: dict = {"lipschitz": None}
    if lip is not None and measure.family == DD_FAMILY and lip.minimal:
        lip = LipschitzSpec(scale=minimal_lipschitz(problem, lip), weights=lip.weights)
    if lip is not None:
        constraints["lipschitz"] = {"L": lip.scale, "weights": lip.weights}

    if measure.family == DD_FAMILY:
        def h(rho) -> float:
            return dd_support(problem, Direction(rho), lip).value

        values = pmap(h, list(dirs), pool)
    else:
        gspec = grid if grid is not None else GridSpec.default_for(problem.n_classes)
        constraints["grid"] = {
            "resolution": gspec.resolution,
            "refine_rounds": gspec.refine_rounds,
        }

        def h(rho) -> float:
            return class_support(problem, measure, Direction(rho), gspec, lip).value

        values = pmap(h, list(dirs), pool)
    return SupportProfile(
        directions=dirs,
        values=np.array(values, dtype=float),
        measure=measure,
        constraints=constraints,
    )


def polygon_from_support(profile: SupportProfile) -> HullPolygon:
    """Outer polygon from the halfplanes rho . x <= h(rho).

    Adjacent (by angle) supporting lines are intersected; vertices violating
    any halfplane beyond 1e-9 are pruned. The [-1,1]^2 box is added
    implicitly since disparities always lie inside it.
    """
    dirs = [np.asarray(d, dtype=float) for d in profile.directions]
    vals = [float(v) for v in profile.values]
    for bx, by in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
        dirs.append(np.array([bx, by]))
        vals.append(1.0)
    # dedupe by angle, keeping the tightest halfplane
    by_angle: dict[float, tuple[np.ndarray, float]] = {}
    for d, v in zip(dirs, vals):
        norm = float(np.hypot(d[0], d[1]))
        if norm <= 0.0:
            raise DataError("zero direction in profile")
        u = d / norm
        hval = v / norm
        ang = round(math.atan2(u[1], u[0]) % (2.0 * math.pi), 12)
        cur = by_angle.get(ang)
        if cur is None or hval < cur[1]:
            by_angle[ang] = (u, hval)
    angles = sorted(by_angle)
    if len(angles) < 3:
        raise DegenerateProfile("fewer than 3 distinct directions")
    planes = [by_angle[a] for a in angles]
    # mutually inconsistent opposed halfplanes signal a solver failure
    for (u, h) in planes:
        for (w, g) in planes:
            if u @ w < -1.0 + 1e-9 and h + g < -_HALFPLANE_TOL:
                raise DegenerateProfile(
                    f"h({u}) + h({w}) = {h + g} < 0: empty support set"
                )
    m = len(planes)
    verts = []
    for i in range(m):
        (u1, h1) = planes[i]
        (u2, h2) = planes[(i + 1) % m]
        det = u1[0] * u2[1] - u1[1] * u2[0]
        if abs(det) < 1e-12:
            continue
        x = (h1 * u2[1] - h2 * u1[1]) / det
        y = (u1[0] * h2 - u2[0] * h1) / det
        v = np.array([x, y])
        if all(u @ v <= h + _HALFPLANE_TOL for u, h in planes):
            verts.append(v)
    if not verts:
        raise DegenerateProfile("halfplane intersection produced no vertices")
    # drop consecutive duplicates (kinks where three planes meet)
    dedup = []
    for v in verts:
        if not dedup or np.linalg.norm(v - dedup[-1]) > _VERTEX_DEDUP:
            dedup.append(v)
    if len(dedup) > 1 and np.linalg.norm(dedup[0] - dedup[-1]) <= _VERTEX_DEDUP:
        dedup.pop()
    halfplanes = tuple(
        (float(u[0]), float(u[1]), float(h)) for u, h in planes
    )
    return HullPolygon(vertices=np.array(dedup), halfplanes=halfplanes)


# ---------------------------------------------------------------------------
# report model


@dataclass(frozen=True)
class MeasureRow:
    measure: str
    pair: tuple[str, str]
    lower: float
    upper: float
    method: str
    constraints: dict
    gap_hint: float | None = None


@dataclass(frozen=True)
class PolygonBlock:
    measure: str
    pairs: tuple[tuple[str, str], tuple[str, str]]
    vertices: tuple[tuple[float, float], ...]
    n_directions: int
    constraints: dict


@dataclass(frozen=True)
class Diagnostics:
    entropy_class: float
    entropy_outcome: float
    identified: dict
    dropped_mass: float
    l_min: float | None = None


@dataclass(frozen=True)
class AuditReport:
    problem_digest: str
    measures: tuple[MeasureRow, ...]
    polygons: tuple[PolygonBlock, ...]
    diagnostics: Diagnostics

    def to_dict(self) -> dict:
        return {
            "problem_digest": self.problem_digest,
            "measures": [
                {
                    "measure": m.measure,
                    "pair": list(m.pair),
                    "lower": m.lower,
                    "upper": m.upper,
                    "method": m.method,
                    "constraints": m.constraints,
                    "gap_hint": m.gap_hint,
                }
                for m in self.measures
            ],
            "polygons": [
                {
                    "measure": p.measure,
                    "pairs": [list(q) for q in p.pairs],
                    "vertices": [list(v) for v in p.vertices],
                    "n_directions": p.n_directions,
                    "constraints": p.constraints,
                }
                for p in self.polygons
            ],
            "diagnostics": {
                "entropy_class": self.diagnostics.entropy_class,
                "entropy_outcome": self.diagnostics.entropy_outcome,
                "identified": self.diagnostics.identified,
                "dropped_mass": self.diagnostics.dropped_mass,
                "L_min": self.diagnostics.l_min,
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AuditReport":
        diags = obj["diagnostics"]
        return cls(
            problem_digest=obj["problem_digest"],
            measures=tuple(
                MeasureRow(
                    measure=m["measure"],
                    pair=tuple(m["pair"]),
                    lower=m["lower"],
                    upper=m["upper"],
                    method=m["method"],
                    constraints=m["constraints"],
                    gap_hint=m["gap_hint"],
                )
                for m in obj["measures"]
            ),
            polygons=tuple(
                PolygonBlock(
                    measure=p["measure"],
                    pairs=tuple(tuple(q) for q in p["pairs"]),
                    vertices=tuple(tuple(v) for v in p["vertices"]),
                    n_directions=p["n_directions"],
                    constraints=p["constraints"],
                )
                for p in obj["polygons"]
            ),
            diagnostics=Diagnostics(
                entropy_class=diags["entropy_class"],
                entropy_outcome=diags["entropy_outcome"],
                identified=diags["identified"],
                dropped_mass=diags["dropped_mass"],
                l_min=diags["L_min"],
            ),
        )


def report_json_bytes(report: AuditReport) -> bytes:
    return (json.dumps(report.to_dict(), indent=2) + "\n").encode("utf-8")


def load_report(path) -> AuditReport:
    with open(path, "r", encoding="utf-8") as fh:
        return AuditReport.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# emission


def emit(report: AuditReport, fmt: str, outdir) -> list[str]:
    """Write the report in one format into ``outdir``; returns written paths."""
    if not report.measures and not report.polygons:
        raise EmptyReport("nothing to emit: no measures and no polygons")
    os.makedirs(outdir, exist_ok=True)
    written: list[str] = []
    if fmt == "json":
        path = os.path.join(outdir, "report.json")
        with open(path, "wb") as fh:
            fh.write(report_json_bytes(report))
        written.append(path)
    elif fmt == "csv":
        if report.measures:
            path = os.path.join(outdir, "intervals.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write("measure,pair,lower,upper,method\n")
                for m in report.measures:
                    fh.write(
                        f"{m.measure},{m.pair[0]}:{m.pair[1]},"
                        f"{m.lower!r},{m.upper!r},{m.method}\n"
                    )
            written.append(path)
        for i, p in enumerate(report.polygons):
            path = os.path.join(outdir, f"polygon_{p.measure}_{i}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write("x,y\n")
                for x, y in p.vertices:
                    fh.write(f"{x!r},{y!r}\n")
            written.append(path)
    elif fmt == "svg":
        by_measure: dict[str, list[PolygonBlock]] = {}
        for p in report.polygons:
            by_measure.setdefault(p.measure, []).append(p)
        for name, blocks in by_measure.items():
            path = os.path.join(outdir, f"polygon_{name}.svg")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(_render_svg(name, blocks))
            written.append(path)
    else:
        raise DataError(f"unknown emit format {fmt!r}")
    return written


_SVG_SIZE = 512


def _px(x: float) -> float:
    return (x + 1.0) / 2.0 * _SVG_SIZE


def _py(y: float) -> float:
    return (1.0 - y) / 2.0 * _SVG_SIZE


def _render_svg(measure_name: str, blocks: list[PolygonBlock]) -> str:
    """Fixed-style plot: [-1,1]^2 view box, 512 px, grid every 0.25."""
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<rect x="0" y="0" width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>',
    ]
    k = -1.0
    while k <= 1.0 + 1e-9:
        px = f"{_px(k):.2f}"
        py = f"{_py(k):.2f}"
        stroke = "#888888" if abs(k) < 1e-12 else "#dddddd"
        lines.append(
            f'<line x1="{px}" y1="0" x2="{px}" y2="{_SVG_SIZE}" '
            f'stroke="{stroke}" stroke-width="1"/>'
        )
        lines.append(
            f'<line x1="0" y1="{py}" x2="{_SVG_SIZE}" y2="{py}" '
            f'stroke="{stroke}" stroke-width="1"/>'
        )
        k += 0.25
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    for i, blk in enumerate(blocks):
        color = palette[i % len(palette)]
        pts = " ".join(f"{_px(x):.3f},{_py(y):.3f}" for x, y in blk.vertices)
        lines.append(
            f'<path d="M {pts} Z" fill="{color}" fill-opacity="0.15" '
            f'stroke="{color}" stroke-width="2"/>'
        )
    x_lab = blocks[0].pairs[0]
    y_lab = blocks[0].pairs[1]
    lines.append(
        f'<text x="{_SVG_SIZE - 6}" y="{_py(0.0) - 6:.2f}" text-anchor="end" '
        f'font-size="13" font-family="monospace">{measure_name}'
        f"({x_lab[0]},{x_lab[1]})</text>"
    )
    lines.append(
        f'<text x="{_px(0.0) + 6:.2f}" y="14" font-size="13" '
        f'font-family="monospace">{measure_name}({y_lab[0]},{y_lab[1]})</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
