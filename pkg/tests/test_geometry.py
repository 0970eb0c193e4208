"""Sweeps, polygons, and report round trips."""

import json
import os

import numpy as np
import pytest

from conftest import random_decision_problem
from disparity_bounds import measures as M
from disparity_bounds.errors import DataError, DegenerateProfile, EmptyReport, WrongClassCount
from disparity_bounds.geometry import (
    AuditReport,
    Diagnostics,
    MeasureRow,
    PolygonBlock,
    SupportProfile,
    circle_directions,
    emit,
    load_report,
    polygon_from_support,
    report_json_bytes,
    sweep,
)
from disparity_bounds.oracle import OracleSpec, oracle_hull
from disparity_bounds.problem import make_problem
from disparity_bounds.support_dd import dd_support


class TestPolygon:
    def test_unit_square(self):
        prof = SupportProfile(circle_directions(4), np.ones(4), M.DD)
        poly = polygon_from_support(prof)
        assert poly.area() == pytest.approx(4.0)
        got = np.array(sorted(map(tuple, poly.vertices)))
        want = np.array([(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)])
        assert np.allclose(got, want, atol=1e-12)

    def test_counterclockwise_and_convex(self):
        prof = SupportProfile(circle_directions(12), np.full(12, 0.5), M.DD)
        poly = polygon_from_support(prof)
        v = poly.vertices
        n = len(v)
        def cross2(p, q):
            return p[0] * q[1] - p[1] * q[0]

        crosses = [
            cross2(v[(i + 1) % n] - v[i], v[(i + 2) % n] - v[(i + 1) % n])
            for i in range(n)
        ]
        assert all(c >= -1e-12 for c in crosses)

    def test_singleton_profile(self):
        p0 = np.array([0.2, -0.3])
        dirs = circle_directions(16)
        poly = polygon_from_support(SupportProfile(dirs, dirs @ p0, M.DD))
        assert poly.diameter <= 1e-6
        assert np.allclose(poly.vertices.mean(axis=0), p0, atol=1e-9)

    def test_vertices_satisfy_halfplanes(self, rng):
        p = random_decision_problem(rng, max_cells=3, n_classes=3)
        prof = sweep(p, M.DD, 16)
        poly = polygon_from_support(prof)
        for rx, ry, h in poly.halfplanes:
            assert np.all(poly.vertices @ [rx, ry] <= h + 1e-7)

    def test_degenerate_profile_rejected(self):
        dirs = circle_directions(8)
        vals = -np.ones(8)  # h(rho) + h(-rho) = -2 < 0: impossible
        with pytest.raises(DegenerateProfile):
            polygon_from_support(SupportProfile(dirs, vals, M.DD))


class TestSweep:
    def test_class_count_guard(self, skew_cell_problem):
        with pytest.raises(WrongClassCount):
            sweep(skew_cell_problem, M.DD, 16)

    def test_direction_floor(self, rng):
        p = random_decision_problem(rng, max_cells=2, n_classes=3)
        with pytest.raises(DataError):
            sweep(p, M.DD, 4)

    def test_axis_directions_match_intervals(self, rng):
        from disparity_bounds.support_dd import dd_interval_lp

        p = random_decision_problem(rng, max_cells=3, n_classes=3)
        prof = sweep(p, M.DD, 16)  # includes the four axis directions
        poly = polygon_from_support(prof)
        labels = p.class_labels
        iv1 = dd_interval_lp(p, (labels[0], labels[1]))
        assert poly.vertices[:, 0].max() == pytest.approx(iv1.upper, abs=1e-7)
        assert poly.vertices[:, 0].min() == pytest.approx(iv1.lower, abs=1e-7)

    def test_homogeneity_spot_check(self, rng):
        p = random_decision_problem(rng, max_cells=3, n_classes=3)
        for _ in range(8):
            rho = rng.normal(size=2)
            if not np.any(rho):
                continue
            assert dd_support(p, 2 * rho).value == pytest.approx(
                2 * dd_support(p, rho).value, rel=1e-9, abs=1e-12
            )

    def test_perfect_prediction_collapses(self):
        p = make_problem(
            [0.3, 0.3, 0.4],
            [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            p_yhat=[[0.2, 0.8], [0.5, 0.5], [0.7, 0.3]],
        )
        poly = polygon_from_support(sweep(p, M.DD, 16))
        assert poly.diameter <= 1e-6

    def test_oracle_cloud_containment(self, rng):
        for _ in range(3):
            p = random_decision_problem(rng, max_cells=1, n_classes=3)
            poly = polygon_from_support(sweep(p, M.DD, 64))
            cloud = oracle_hull(p, M.DD, OracleSpec(per_cell_grid=41))
            assert all(poly.contains(pt, slack=1e-6) for pt in cloud)

    def test_doubling_directions_never_grows_area(self, rng):
        p = random_decision_problem(rng, max_cells=2, n_classes=3)
        a64 = polygon_from_support(sweep(p, M.DD, 64)).area()
        a128 = polygon_from_support(sweep(p, M.DD, 128)).area()
        assert a128 <= a64 + 1e-9


def _report():
    return AuditReport(
        problem_digest="ab" * 32,
        measures=(
            MeasureRow(
                measure="DD",
                pair=("a", "b"),
                lower=-0.5,
                upper=0.25,
                method="ClosedForm",
                constraints={"lipschitz": None},
                gap_hint=None,
            ),
        ),
        polygons=(
            PolygonBlock(
                measure="DD",
                pairs=(("a", "b"), ("a", "c")),
                vertices=((0.0, 0.0), (0.5, 0.0), (0.0, 0.5)),
                n_directions=64,
                constraints={"lipschitz": None},
            ),
        ),
        diagnostics=Diagnostics(
            entropy_class=-0.69,
            entropy_outcome=-1.38,
            identified={"DD": False},
            dropped_mass=0.0,
            l_min=None,
        ),
    )


class TestEmit:
    def test_json_round_trip(self, tmp_path):
        rep = _report()
        paths = emit(rep, "json", tmp_path)
        assert load_report(paths[0]) == rep

    def test_json_schema_keys(self):
        obj = json.loads(report_json_bytes(_report()))
        assert set(obj) == {"problem_digest", "measures", "polygons", "diagnostics"}
        assert set(obj["measures"][0]) == {
            "measure", "pair", "lower", "upper", "method", "constraints", "gap_hint",
        }
        assert set(obj["polygons"][0]) == {
            "measure", "pairs", "vertices", "n_directions", "constraints",
        }
        assert set(obj["diagnostics"]) == {
            "entropy_class", "entropy_outcome", "identified", "dropped_mass", "L_min",
        }

    def test_csv_contract(self, tmp_path):
        paths = emit(_report(), "csv", tmp_path)
        intervals = [p for p in paths if p.endswith("intervals.csv")][0]
        lines = open(intervals).read().splitlines()
        assert lines[0] == "measure,pair,lower,upper,method"
        assert lines[1].startswith("DD,a:b,")
        poly = [p for p in paths if "polygon" in p][0]
        assert open(poly).read().splitlines()[0] == "x,y"

    def test_svg_contract(self, tmp_path):
        paths = emit(_report(), "svg", tmp_path)
        text = open(paths[0]).read()
        assert text.count("<path") == 1  # one closed path per constraint config
        assert 'width="512"' in text
        assert "Z" in text

    def test_empty_report(self, tmp_path):
        rep = AuditReport(
            problem_digest="x", measures=(), polygons=(),
            diagnostics=_report().diagnostics,
        )
        with pytest.raises(EmptyReport):
            emit(rep, "json", tmp_path)

    def test_interval_only_csv(self, tmp_path):
        rep = AuditReport(
            problem_digest="x",
            measures=_report().measures,
            polygons=(),
            diagnostics=_report().diagnostics,
        )
        paths = emit(rep, "csv", tmp_path)
        assert len(paths) == 1 and paths[0].endswith("intervals.csv")
