"""Grid-search classification support: agreement, witnesses, monotonicity."""

import numpy as np
import pytest

from conftest import random_full_problem
from disparity_bounds import measures as M
from disparity_bounds.closed_form import classification_interval_binary
from disparity_bounds.errors import (
    AllGridPointsInfeasible,
    EmptyGrid,
    WrongMode,
    ZeroDenominatorRisk,
)
from disparity_bounds.problem import make_problem
from disparity_bounds.smoothness import LipschitzSpec
from disparity_bounds.support_class import (
    GridSpec,
    _FullTemplate,
    _ReducedTemplate,
    class_interval,
    class_support,
    r_bounds,
)


class TestRBounds:
    def test_uniform(self, uniform_full_problem):
        box = r_bounds(uniform_full_problem, M.TPRD)
        assert np.allclose(box, [[0.0, 0.5], [0.0, 0.5]])

    def test_perfect_class_prediction(self):
        p = make_problem(
            [0.5, 0.5], [[1, 0], [0, 1]],
            p_table=[[[0.2, 0.3], [0.1, 0.4]], [[0.25, 0.25], [0.3, 0.2]]],
        )
        box = r_bounds(p, M.TPRD)
        assert np.allclose(box[:, 0], box[:, 1])  # degenerate marginal collapses

    def test_skew(self):
        p = make_problem([1.0], [[0.9, 0.1]], p_table=[[[0.25, 0.25], [0.25, 0.25]]])
        box = r_bounds(p, M.TPRD)
        assert np.allclose(box[0], [0.4, 0.5])

    def test_needs_full_mode(self, skew_cell_problem):
        with pytest.raises(WrongMode):
            r_bounds(skew_cell_problem, M.TPRD)


class TestClassSupport:
    def test_uniform_upper(self, uniform_full_problem):
        res = class_support(uniform_full_problem, M.TPRD, [1.0])
        assert res.value == pytest.approx(1.0, abs=2e-3)
        assert res.witness.max_violation(uniform_full_problem, M.TPRD) <= 1e-6

    def test_perfect_outcome_prediction(self, perfect_outcome_problem):
        hi = class_support(perfect_outcome_problem, M.TPRD, [1.0])
        lo = class_support(perfect_outcome_problem, M.TPRD, [-1.0])
        assert hi.value == pytest.approx(0.2, abs=1e-6)
        assert lo.value == pytest.approx(-0.2, abs=1e-6)
        assert hi.value + lo.value <= 1e-6  # width

    def test_witness_invariants(self, rng):
        for _ in range(10):
            p = random_full_problem(rng, max_cells=3)
            res = class_support(p, M.TPRD, [1.0], grid=GridSpec(21, 1))
            assert res.witness.max_violation(p, M.TPRD) <= 1e-6
            t = res.witness.t
            py = float(p.masses @ p.p_table.sum(axis=1)[:, 1])
            assert (1.0 / t).sum() == pytest.approx(py, abs=1e-7)

    def test_grid_value_monotone_in_resolution(self, rng):
        for _ in range(8):
            p = random_full_problem(rng, max_cells=3)
            vals = [
                class_support(
                    p, M.TPRD, [1.0], grid=GridSpec(res, 0, polish=False)
                ).value
                for res in (11, 21, 41)  # nested: step halves each time
            ]
            assert vals[0] <= vals[1] + 1e-12
            assert vals[1] <= vals[2] + 1e-12

    def test_zero_denominator_risk(self):
        p = make_problem([1.0], [[1.0, 0.0]], p_table=[[[0.0, 0.5], [0.0, 0.5]]])
        with pytest.raises(ZeroDenominatorRisk):
            class_support(p, M.TPRD, [1.0])

    def test_empty_grid(self, uniform_full_problem):
        grid = GridSpec(resolution=5, refine_rounds=0,
                        r_bounds=((0.46, 0.5), (0.05, 0.1)))
        # implied r_a = 0.5 - r_b in [0.4, 0.45] never meets the [0.46,0.5] box
        with pytest.raises(EmptyGrid):
            class_support(uniform_full_problem, M.TPRD, [1.0], grid=grid)

    def test_all_points_infeasible(self, monkeypatch, uniform_full_problem):
        monkeypatch.setattr(_ReducedTemplate, "solve_at", lambda self, r, c: None)
        with pytest.raises(AllGridPointsInfeasible):
            class_support(
                uniform_full_problem, M.TPRD, [1.0], grid=GridSpec(5, 0)
            )

    def test_gap_hint_reported(self, rng):
        p = random_full_problem(rng, max_cells=2)
        res = class_support(p, M.TPRD, [1.0], grid=GridSpec(31, 1))
        assert res.metadata["gap_hint"] >= 0.0
        assert res.metadata["n_evaluated"] > 0


class TestReducedVsFull:
    def test_formulations_agree(self, rng):
        """The reduced inner LP equals the full transformed program."""
        for _ in range(12):
            p = random_full_problem(rng, max_cells=3)
            measure = M.TPRD if rng.random() < 0.5 else M.TNRD
            boxes = r_bounds(p, measure)
            reduced = _ReducedTemplate(p, measure)
            full = _FullTemplate(p, measure, None, 0.0)
            y_star = measure.conditioning[1]
            py = float(p.masses @ p.p_table.sum(axis=1)[:, y_star])
            coeffs = np.array([1.0, -1.0])
            for frac in (0.25, 0.5, 0.75):
                r_b = boxes[1, 0] + frac * (boxes[1, 1] - boxes[1, 0])
                r_vec = np.array([py - r_b, r_b])
                if np.any(r_vec < 1e-9):
                    continue
                if not boxes[0, 0] - 1e-10 <= r_vec[0] <= boxes[0, 1] + 1e-10:
                    continue
                out_r = reduced.solve_at(r_vec, coeffs)
                out_f = full.solve_at(r_vec, coeffs)
                assert (out_r is None) == (out_f is None)
                if out_r is not None:
                    assert out_r[0] == pytest.approx(out_f[0], abs=1e-8)


class TestClassInterval:
    def test_matches_closed_form(self, rng):
        for _ in range(25):
            p = random_full_problem(rng, max_cells=3)
            iv = class_interval(p, M.TPRD, grid=GridSpec(101, 2))
            cf = classification_interval_binary(p, M.TPRD)
            assert iv.lower == pytest.approx(cf.lower, abs=2e-3)
            assert iv.upper == pytest.approx(cf.upper, abs=2e-3)

    def test_identified_width(self, perfect_outcome_problem):
        iv = class_interval(perfect_outcome_problem, M.TPRD)
        assert iv.width <= 1e-6

    def test_role_swap_exact(self, rng):
        p = random_full_problem(rng, max_cells=2)
        g = GridSpec(31, 1)
        ppvd = class_interval(p, M.PPVD, grid=g)
        tprd = class_interval(p.swap_roles(), M.TPRD, grid=g)
        assert ppvd.lower == tprd.lower
        assert ppvd.upper == tprd.upper

    def test_lipschitz_shrinks_or_keeps(self, rng):
        for _ in range(5):
            p = random_full_problem(rng, max_cells=3)
            coords = [[float(i)] for i in range(p.n_cells)]
            p = make_problem(
                p.masses, p.p_class, p_table=p.outcome.probs, coords=coords
            )
            free = class_interval(p, M.TPRD, grid=GridSpec(31, 1))
            tight = class_interval(
                p, M.TPRD, grid=GridSpec(31, 1), lip=LipschitzSpec(scale="minimal")
            )
            assert tight.width <= free.width + 1e-6

    def test_containment_random_joints(self, rng):
        from disparity_bounds.synth import random_joint

        for _ in range(20):
            joint = random_joint(rng, int(rng.integers(1, 4)))
            p = joint.to_problem()
            iv = class_interval(p, M.TPRD, grid=GridSpec(51, 1))
            true = joint.true_disparity(M.TPRD)
            # the grid interval is an inner approximation; allow its gap
            slack = 2.0 / 50 + iv.gap_hint
            assert iv.contains(true, slack=slack)
