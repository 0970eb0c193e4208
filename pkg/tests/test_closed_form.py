"""Closed-form intervals: frozen examples, containment, symmetries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disparity_bounds import measures as M
from disparity_bounds.closed_form import (
    ci_point_estimate,
    classification_interval_binary,
    dd_interval_binary,
    fh_bounds,
    is_point_identified,
)
from disparity_bounds.errors import (
    WrongClassCount,
    ZeroClassPrior,
    ZeroDenominatorRisk,
)
from disparity_bounds.problem import make_problem
from disparity_bounds.synth import random_joint

FIVE_NINTHS = 5.0 / 9.0

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestFhBounds:
    def test_examples(self):
        b = fh_bounds(0.5, 0.5)
        assert (b.lower, b.upper) == pytest.approx((0.0, 0.5))
        b = fh_bounds(0.9, 0.5)
        assert (b.lower, b.upper) == pytest.approx((0.4, 0.5))
        b = fh_bounds(1.0, 0.3)
        assert b.lower == pytest.approx(0.3, abs=1e-12)
        assert b.upper == pytest.approx(0.3, abs=1e-12)
        assert b.lower <= b.upper

    @given(probs, probs)
    @settings(max_examples=300, deadline=None)
    def test_property(self, sigma, tau):
        b = fh_bounds(sigma, tau)
        assert 0.0 <= b.lower <= b.upper <= 1.0
        assert b.lower <= min(sigma, tau)
        assert b.upper >= max(sigma + tau - 1.0, 0.0) - 1e-15


class TestDdIntervalBinary:
    def test_skew_cell(self, skew_cell_problem):
        iv = dd_interval_binary(skew_cell_problem)
        assert iv.lower == pytest.approx(-FIVE_NINTHS, abs=1e-4)
        assert iv.upper == pytest.approx(FIVE_NINTHS, abs=1e-4)

    def test_perfect_class_prediction(self, perfect_class_problem):
        iv = dd_interval_binary(perfect_class_problem)
        assert iv.lower == pytest.approx(0.4, abs=1e-9)
        assert iv.upper == pytest.approx(0.4, abs=1e-9)

    def test_maximal_ignorance(self):
        p = make_problem([1.0], [[0.5, 0.5]], p_yhat=[[0.5, 0.5]])
        iv = dd_interval_binary(p)
        assert (iv.lower, iv.upper) == (-1.0, 1.0)

    def test_wrong_class_count(self, rng):
        p = make_problem([1.0], [rng.dirichlet(np.ones(3))], p_yhat=[[0.5, 0.5]])
        with pytest.raises(WrongClassCount):
            dd_interval_binary(p)

    def test_zero_prior(self):
        p = make_problem([1.0], [[1.0, 0.0]], p_yhat=[[0.5, 0.5]])
        with pytest.raises(ZeroClassPrior):
            dd_interval_binary(p)

    def test_label_swap_reflects(self, rng):
        for _ in range(20):
            joint = random_joint(rng, int(rng.integers(1, 4)))
            p = joint.to_problem()
            a, b = p.class_labels
            iv = dd_interval_binary(p, (a, b))
            rv = dd_interval_binary(p, (b, a))
            assert rv.lower == pytest.approx(-iv.upper, abs=1e-12)
            assert rv.upper == pytest.approx(-iv.lower, abs=1e-12)


class TestClassificationIntervalBinary:
    def test_uniform_table(self, uniform_full_problem):
        iv = classification_interval_binary(uniform_full_problem, M.TPRD)
        assert (iv.lower, iv.upper) == (-1.0, 1.0)

    def test_perfect_outcome_prediction(self, perfect_outcome_problem):
        iv = classification_interval_binary(perfect_outcome_problem, M.TPRD)
        assert iv.lower == pytest.approx(0.2, abs=1e-9)
        assert iv.upper == pytest.approx(0.2, abs=1e-9)

    def test_tnrd_equals_tprd_on_complement(self, rng):
        for _ in range(20):
            joint = random_joint(rng, int(rng.integers(1, 4)))
            p = joint.to_problem()
            tnrd = classification_interval_binary(p, M.TNRD)
            tprd = classification_interval_binary(p.complement_outcome(), M.TPRD)
            assert tnrd.lower == pytest.approx(tprd.lower, abs=1e-12)
            assert tnrd.upper == pytest.approx(tprd.upper, abs=1e-12)

    def test_role_swap_measures(self, rng):
        for _ in range(10):
            joint = random_joint(rng, 2)
            p = joint.to_problem()
            ppvd = classification_interval_binary(p, M.PPVD)
            tprd = classification_interval_binary(p.swap_roles(), M.TPRD)
            assert ppvd.lower == pytest.approx(tprd.lower, abs=1e-12)
            assert ppvd.upper == pytest.approx(tprd.upper, abs=1e-12)
            npvd = classification_interval_binary(p, M.NPVD)
            tnrd = classification_interval_binary(p.swap_roles(), M.TNRD)
            assert npvd.lower == pytest.approx(tnrd.lower, abs=1e-12)

    def test_zero_denominator_risk(self):
        # no cell puts mass on Y=1 for class b
        p = make_problem(
            [1.0], [[1.0, 0.0]], p_table=[[[0.0, 0.5], [0.0, 0.5]]]
        )
        with pytest.raises(ZeroDenominatorRisk):
            classification_interval_binary(p, M.TPRD)


class TestContainment:
    def test_random_joints(self, rng):
        """Marginalized-view intervals contain the joint's true disparity."""
        for _ in range(300):
            joint = random_joint(rng, int(rng.integers(1, 5)))
            p = joint.to_problem()
            assert dd_interval_binary(p).contains(
                joint.true_disparity(M.DD), slack=1e-9
            )
            for meas in (M.TPRD, M.TNRD, M.PPVD, M.NPVD):
                iv = classification_interval_binary(p, meas)
                assert iv.contains(joint.true_disparity(meas), slack=1e-9)

    def test_ci_estimate_inside_interval(self, rng):
        for _ in range(100):
            joint = random_joint(rng, int(rng.integers(1, 5)))
            p = joint.to_problem()
            assert dd_interval_binary(p).contains(
                ci_point_estimate(p, M.DD), slack=1e-9
            )
            iv = classification_interval_binary(p, M.TPRD)
            assert iv.contains(ci_point_estimate(p, M.TPRD), slack=1e-9)


class TestIdentification:
    def test_perfect_class(self, perfect_class_problem):
        assert is_point_identified(perfect_class_problem, M.DD)

    def test_skew_cell_not_identified(self, skew_cell_problem):
        rep = is_point_identified(skew_cell_problem, M.DD)
        assert not rep
        assert rep.violating_mass == pytest.approx(1.0)
        assert len(rep.violating_cells) == 1

    def test_full_outcome_degenerate(self):
        p = make_problem(
            [1.0], [[0.5, 0.5]], p_table=[[[0.0, 0.0], [0.0, 1.0]]]
        )
        assert is_point_identified(p, M.TPRD)

    def test_singleton_iff_identified(self, rng):
        from disparity_bounds.synth import perfect_prediction_joint

        for _ in range(30):
            joint = perfect_prediction_joint(rng, int(rng.integers(2, 5)))
            p = joint.to_problem()
            assert is_point_identified(p, M.DD)
            iv = dd_interval_binary(p)
            assert iv.width <= 1e-9


class TestCiPointEstimate:
    def test_perfect_prediction_value(self, perfect_class_problem):
        assert ci_point_estimate(perfect_class_problem, M.DD) == pytest.approx(
            0.4, abs=1e-12
        )

    def test_single_cell_collapses_to_zero(self, rng):
        for _ in range(10):
            pa = float(rng.uniform(0.1, 0.9))
            q = float(rng.uniform(0.1, 0.9))
            p = make_problem([1.0], [[pa, 1 - pa]], p_yhat=[[1 - q, q]])
            assert ci_point_estimate(p, M.DD) == pytest.approx(0.0, abs=1e-12)

    def test_two_cell_frozen_value(self):
        # mu(a) = (0.5*0.6*0.8 + 0.5*0.4*0.2)/0.5 = 0.56, mu(b) = 0.44
        p = make_problem(
            [0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]], p_yhat=[[0.4, 0.6], [0.6, 0.4]]
        )
        assert ci_point_estimate(p, M.DD) == pytest.approx(0.12, abs=1e-9)
