"""Closed-form interval endpoints for a binary protected class.

Everything here follows from per-cell Frechet-Hoeffding bounds on the
unknown joint cells P(A=alpha, event | Z=z): given the two observed
marginals sigma = P(alpha|z) and tau = P(event|z), the joint cell lies in
[max(sigma+tau-1, 0), min(sigma, tau)], and with two complementary class
labels both extremes are attainable simultaneously (one class at its upper
bound forces the other to its lower bound). Integrating the per-cell
extremes over cells therefore gives sharp interval endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    WrongClassCount,
    ZeroClassPrior,
    ZeroDenominator,
    ZeroDenominatorRisk,
)
from .measures import CLASSIFICATION, DD_FAMILY, DisparityInterval, Measure
from .problem import ClassLabel, CombinedProblem, class_priors

_DENOM_CLAMP = 1e-12
_IDENT_TOL = 1e-9


@dataclass(frozen=True)
class CellBounds:
    """Frechet-Hoeffding bounds on one joint probability cell."""

    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def fh_bounds(sigma: float, tau: float) -> CellBounds:
    """Sharp bounds on P(S, T) given P(S)=sigma and P(T)=tau.

    lower = max(sigma+tau-1, 0), upper = min(sigma, tau); the lower bound is
    additionally capped at the upper so rounding in sigma+tau-1 can never
    invert the (mathematically guaranteed) ordering.
    """
    upper = min(sigma, tau)
    return CellBounds(min(max(sigma + tau - 1.0, 0.0), upper), upper)


def _fh_arrays(sigma: np.ndarray, tau: np.ndarray):
    upper = np.minimum(sigma, tau)
    return np.minimum(np.maximum(sigma + tau - 1.0, 0.0), upper), upper


def _order_pair(problem: CombinedProblem, pair) -> tuple[ClassLabel, ClassLabel]:
    if pair is None:
        return problem.class_labels[0], problem.class_labels[1]
    a, b = pair
    if isinstance(a, str):
        a, b = problem.pair(a, b)
    return a, b


def _require_binary(problem: CombinedProblem) -> None:
    if problem.n_classes != 2:
        raise WrongClassCount(
            f"closed forms need exactly 2 classes, problem has {problem.n_classes}"
        )


def dd_interval_binary(problem: CombinedProblem, pair=None) -> DisparityInterval:
    """Sharp demographic-disparity interval for a two-class problem.

    Endpoint structure: P(A=alpha, Yhat=1) is only known to lie between the
    mass-integrated Frechet-Hoeffding bounds; dividing by the (identified)
    prior P(A=alpha) and taking opposite extremes for the two classes gives
    the interval, and complementarity of the two labels makes it attainable.
    """
    _require_binary(problem)
    a, b = _order_pair(problem, pair)
    priors = class_priors(problem)
    for lab in (a, b):
        if priors[lab.index] <= 0.0:
            raise ZeroClassPrior(lab.name)
    q1 = problem.p_yhat[:, 1]
    m = problem.masses
    lo_a, hi_a = _fh_arrays(problem.p_class[:, a.index], q1)
    lo_b, hi_b = _fh_arrays(problem.p_class[:, b.index], q1)
    mu = {
        ("a", "lo"): float(m @ lo_a) / priors[a.index],
        ("a", "hi"): float(m @ hi_a) / priors[a.index],
        ("b", "lo"): float(m @ lo_b) / priors[b.index],
        ("b", "hi"): float(m @ hi_b) / priors[b.index],
    }
    return DisparityInterval(
        measure=Measure(DD_FAMILY, name="DD"),
        pair=(a, b),
        lower=mu[("a", "lo")] - mu[("b", "hi")],
        upper=mu[("a", "hi")] - mu[("b", "lo")],
        method="ClosedForm",
    )


def _classification_pieces(problem: CombinedProblem, measure: Measure):
    """Integrated FH bounds on the two joint masses a rate is built from.

    For conditioning (yhat*, y*): the rate for class alpha is
    N / (N + M) with N = P(A=alpha, Yhat=yhat*, Y=y*) and
    M = P(A=alpha, Yhat=1-yhat*, Y=y*).
    """
    yh, y = measure.conditioning
    table = problem.p_table
    m = problem.masses
    hit = table[:, yh, y]
    miss = table[:, 1 - yh, y]
    out = {}
    for lab in problem.class_labels:
        sig = problem.p_class[:, lab.index]
        n_lo, n_hi = _fh_arrays(sig, hit)
        m_lo, m_hi = _fh_arrays(sig, miss)
        out[lab.index] = {
            "n_lo": float(m @ n_lo),
            "n_hi": float(m @ n_hi),
            "m_lo": float(m @ m_lo),
            "m_hi": float(m @ m_hi),
        }
    return out


def _rate_bounds(piece) -> tuple[float, float, bool]:
    """Extremes of N/(N+M) over the FH box; flag when a denominator was clamped."""
    clamped = False

    def ratio(n, mm):
        nonlocal clamped
        den = n + mm
        if den <= 0.0:
            clamped = True
            den = _DENOM_CLAMP
        return n / den

    hi = ratio(piece["n_hi"], piece["m_lo"])
    lo = ratio(piece["n_lo"], piece["m_hi"])
    return lo, hi, clamped


def classification_interval_binary(
    problem: CombinedProblem, measure: Measure, pair=None
) -> DisparityInterval:
    """Sharp TPR/TNR (or role-swapped PPV/NPV) disparity interval, 2 classes.

    The rate is monotone increasing in the conditioning-event joint mass and
    decreasing in the complementary-event mass, so each class's extreme uses
    opposite Frechet-Hoeffding ends for the two masses; complementarity of
    the two labels again makes the pair of extremes jointly attainable.
    """
    if measure.family != CLASSIFICATION:
        raise ZeroDenominator("classification interval needs a classification measure")
    work = problem.swap_roles() if measure.role_swap else problem
    _require_binary(work)
    a, b = _order_pair(work, pair)
    y_star = measure.conditioning[1]
    p_y = work.p_table.sum(axis=1)[:, y_star]
    m = work.masses
    notes = []
    for lab in (a, b):
        upper_r = float(m @ np.minimum(work.p_class[:, lab.index], p_y))
        if upper_r <= 0.0:
            raise ZeroDenominatorRisk(lab.name)
    pieces = _classification_pieces(work, measure)
    lo_a, hi_a, c1 = _rate_bounds(pieces[a.index])
    lo_b, hi_b, c2 = _rate_bounds(pieces[b.index])
    if c1 or c2:
        notes.append("denominator_clamped")
    return DisparityInterval(
        measure=measure,
        pair=(a, b),
        lower=lo_a - hi_b,
        upper=hi_a - lo_b,
        method="ClosedForm",
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class IdentificationReport:
    identified: bool
    violating_cells: tuple[tuple[tuple[str, ...], float], ...]
    violating_mass: float

    def __bool__(self) -> bool:
        return self.identified


def is_point_identified(
    problem: CombinedProblem, measure: Measure, tol: float = _IDENT_TOL
) -> IdentificationReport:
    """Degenerate-marginal check: the disparity is a point iff (almost) every
    cell has either a degenerate outcome marginal or a degenerate class
    marginal. Cells violating on total mass below ``tol`` are ignored."""
    work = problem.swap_roles() if measure.role_swap else problem
    if measure.family == DD_FAMILY:
        out = work.p_yhat
    else:
        out = work.p_table.reshape(work.n_cells, -1)
    out_degen = np.all((out <= tol) | (out >= 1.0 - tol), axis=1)
    cls_degen = np.all(
        (work.p_class <= tol) | (work.p_class >= 1.0 - tol), axis=1
    )
    bad = ~(out_degen | cls_degen)
    cells = tuple(
        (work.cells[i].key, float(work.masses[i])) for i in np.nonzero(bad)[0]
    )
    mass = float(work.masses[bad].sum())
    return IdentificationReport(
        identified=mass < tol, violating_cells=cells, violating_mass=mass
    )


def ci_point_estimate(
    problem: CombinedProblem, measure: Measure, pair=None
) -> float:
    """Weighted point estimate that is exact under Yhat(,Y) independent of A
    given Z; always a member of the corresponding sharp interval."""
    work = problem.swap_roles() if measure.role_swap else problem
    a, b = _order_pair(work, pair)
    m = work.masses
    if measure.family == DD_FAMILY:
        num_event = work.p_yhat[:, 1]
        den_event = np.ones(work.n_cells)
    else:
        yh, y = measure.conditioning
        num_event = work.p_table[:, yh, y]
        den_event = work.p_table.sum(axis=1)[:, y]
    vals = []
    for lab in (a, b):
        sig = work.p_class[:, lab.index]
        den = float(m @ (den_event * sig))
        if den <= 0.0:
            raise ZeroDenominator(
                f"E[1{{event}} P(A={lab.name}|Z)] = {den}; estimate undefined"
            )
        vals.append(float(m @ (num_event * sig)) / den)
    return vals[0] - vals[1]
