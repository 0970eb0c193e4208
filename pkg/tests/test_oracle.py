"""Brute-force enumeration: containment, gaps, budgets, determinism."""

import numpy as np
import pytest

from conftest import random_full_problem
from disparity_bounds import measures as M
from disparity_bounds.closed_form import (
    classification_interval_binary,
    dd_interval_binary,
)
from disparity_bounds.errors import BudgetExceeded, SchemaError, WrongClassCount
from disparity_bounds.oracle import (
    EXHAUSTIVE,
    RANDOM_VERTEX_MIX,
    OracleSpec,
    oracle_class,
    oracle_dd,
    oracle_hull,
)
from disparity_bounds.problem import make_problem


class TestOracleDd:
    def test_skew_cell(self, skew_cell_problem):
        o = oracle_dd(skew_cell_problem, OracleSpec(per_cell_grid=101))
        cf = dd_interval_binary(skew_cell_problem)
        assert o.lower == pytest.approx(cf.lower, abs=1e-2)
        assert o.upper == pytest.approx(cf.upper, abs=1e-2)
        assert o.lower >= cf.lower - 1e-12
        assert o.upper <= cf.upper + 1e-12

    def test_perfect_prediction_exact(self, perfect_class_problem):
        for g in (3, 17, 51):
            o = oracle_dd(perfect_class_problem, OracleSpec(per_cell_grid=g))
            assert o.lower == pytest.approx(0.4, abs=1e-9)
            assert o.upper == pytest.approx(0.4, abs=1e-9)

    def test_budget(self):
        p = make_problem(
            np.ones(10) / 10,
            np.tile([[0.5, 0.5]], (10, 1)),
            p_yhat=np.tile([[0.5, 0.5]], (10, 1)),
        )
        with pytest.raises(BudgetExceeded):
            oracle_dd(p, OracleSpec(per_cell_grid=51))

    def test_refining_never_shrinks(self, rng):
        for _ in range(10):
            p = random_full_problem(rng, max_cells=2)
            coarse = oracle_dd(p, OracleSpec(per_cell_grid=11))
            fine = oracle_dd(p, OracleSpec(per_cell_grid=33))  # 3x refinement
            assert fine.lower <= coarse.lower + 1e-12
            assert fine.upper >= coarse.upper - 1e-12

    def test_random_vertex_mix_seeded(self, skew_cell_problem):
        spec = OracleSpec(sampling=RANDOM_VERTEX_MIX, n_samples=5000, seed=11)
        o1 = oracle_dd(skew_cell_problem, spec)
        o2 = oracle_dd(skew_cell_problem, spec)
        assert (o1.lower, o1.upper) == (o2.lower, o2.upper)
        cf = dd_interval_binary(skew_cell_problem)
        assert o1.lower >= cf.lower and o1.upper <= cf.upper


class TestOracleClass:
    def test_uniform_range(self, uniform_full_problem):
        o = oracle_class(uniform_full_problem, M.TPRD, OracleSpec(per_cell_grid=21))
        assert o.lower == pytest.approx(-1.0, abs=5e-2)
        assert o.upper == pytest.approx(1.0, abs=5e-2)

    def test_perfect_outcome_exact(self, perfect_outcome_problem):
        o = oracle_class(perfect_outcome_problem, M.TPRD, OracleSpec(per_cell_grid=5))
        assert o.lower == pytest.approx(0.2, abs=1e-9)
        assert o.upper == pytest.approx(0.2, abs=1e-9)

    def test_contained_with_bounded_gap(self, rng):
        g = 31
        for _ in range(30):
            p = random_full_problem(rng, max_cells=1, healthy=True)
            o = oracle_class(p, M.TPRD, OracleSpec(per_cell_grid=g))
            cf = classification_interval_binary(p, M.TPRD)
            assert o.lower >= cf.lower - 1e-9
            assert o.upper <= cf.upper + 1e-9
            # empirical Hausdorff constant from the spec'd invariant: C <= 4
            assert o.lower - cf.lower <= 4.0 / (g - 1) + 1e-9
            assert cf.upper - o.upper <= 4.0 / (g - 1) + 1e-9

    def test_containment_unrestricted(self, rng):
        for _ in range(20):
            p = random_full_problem(rng, max_cells=2, healthy=False)
            o = oracle_class(p, M.TPRD, OracleSpec(per_cell_grid=9))
            cf = classification_interval_binary(p, M.TPRD)
            assert o.lower >= cf.lower - 1e-9
            assert o.upper <= cf.upper + 1e-9

    def test_measure_validation(self, uniform_full_problem):
        with pytest.raises(SchemaError):
            oracle_class(uniform_full_problem, M.DD)


class TestOracleHull:
    def test_bounding_box_inside_pairwise_intervals(self):
        from disparity_bounds.support_dd import dd_interval_lp

        p = make_problem([1.0], [[0.5, 0.3, 0.2]], p_yhat=[[0.4, 0.6]])
        cloud = oracle_hull(p, M.DD, OracleSpec(per_cell_grid=31))
        labels = p.class_labels
        iv1 = dd_interval_lp(p, (labels[0], labels[1]))
        iv2 = dd_interval_lp(p, (labels[0], labels[2]))
        assert cloud[:, 0].min() >= iv1.lower - 1e-9
        assert cloud[:, 0].max() <= iv1.upper + 1e-9
        assert cloud[:, 1].min() >= iv2.lower - 1e-9
        assert cloud[:, 1].max() <= iv2.upper + 1e-9

    def test_singleton_instance(self):
        p = make_problem(
            [0.5, 0.5],
            [[1, 0, 0], [0, 0.5, 0.5]],
            p_yhat=[[0.0, 1.0], [1.0, 0.0]],
        )
        cloud = oracle_hull(p, M.DD, OracleSpec(per_cell_grid=9))
        assert np.ptp(cloud, axis=0).max() <= 1e-9

    def test_class_count(self, skew_cell_problem):
        with pytest.raises(WrongClassCount):
            oracle_hull(skew_cell_problem, M.DD)


class TestSpecValidation:
    def test_grid_floor(self):
        with pytest.raises(SchemaError):
            OracleSpec(per_cell_grid=2)

    def test_sampling_name(self):
        with pytest.raises(SchemaError):
            OracleSpec(sampling="bogus")
        assert OracleSpec(sampling=EXHAUSTIVE).sampling == EXHAUSTIVE
