"""Demographic-disparity support function as a linear program.

The feasible set is the total-probability weight polytope: candidate fields
w_alpha(yhat, z) with sum_yhat w_alpha(yhat,z) P(yhat|z) = P(alpha|z) per
cell and class, sum_alpha w_alpha(yhat,z) = 1 per (yhat, z), w in [0,1].
The support value in direction rho is

    h(rho) = max_w sum_b rho_b ( E[w_a(Yhat,Z) Yhat]/P(A=a)
                                 - E[w_b(Yhat,Z) Yhat]/P(A=b) ).

Without smoothness rows the program separates across cells, so it is solved
cell by cell; Lipschitz rows couple cells and force the monolithic build.
Weight coordinates with P(yhat|z)=0 are excluded (fixed to 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InfeasibleConstraints, ZeroClassPrior
from .lp import EQ, GE, LE, LpProblem, LpStatus, solve
from .lp.simplex import feasible as lp_feasible
from .measures import DD_FAMILY, DisparityInterval, Measure
from .problem import ClassLabel, CombinedProblem, class_priors
from .smoothness import LipschitzSpec, metric_pairs

_BISECT_REL = 1e-6


@dataclass(frozen=True)
class Direction:
    """Objective direction over the non-reference classes (index order)."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if rho.ndim != 1 or not np.all(np.isfinite(rho)):
            raise DataError("direction must be a finite vector")
        if not np.any(rho != 0.0):
            raise DataError("direction must not be the zero vector")
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class WeightField:
    """A point of the weight polytope; shape (K, 2, n_cells)."""

    values: np.ndarray

    def max_violation(self, problem: CombinedProblem) -> float:
        """Worst residual over total-probability and box rows (0 is exact)."""
        w = self.values
        q = problem.p_yhat  # (n, 2)
        worst = float(np.max(np.abs(
            np.einsum("kyn,ny->kn", w, q) - problem.p_class.T
        )))
        present = q.T > 0.0  # (2, n)
        sums = w.sum(axis=0)  # (2, n)
        if present.any():
            worst = max(worst, float(np.max(np.abs(sums[present] - 1.0))))
        worst = max(worst, max(-float(w.min()), 0.0))
        worst = max(worst, max(float(w.max()) - 1.0, 0.0))
        return worst


@dataclass(frozen=True)
class SupportResult:
    value: float
    witness: object
    metadata: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.value, self.witness))


def _class_coeffs(problem: CombinedProblem, direction: Direction) -> np.ndarray:
    """Per-class objective weight on E[w_alpha(Yhat,Z) Yhat]."""
    K = problem.n_classes
    rho = direction.rho
    if rho.shape[0] != K - 1:
        raise DataError(f"direction needs {K - 1} entries, got {rho.shape[0]}")
    priors = class_priors(problem)
    for lab in problem.class_labels:
        if priors[lab.index] <= 0.0:
            raise ZeroClassPrior(lab.name)
    coeffs = np.empty(K)
    coeffs[0] = rho.sum() / priors[0]
    coeffs[1:] = -rho / priors[1:]
    return coeffs


def _support_separable(problem: CombinedProblem, coeffs: np.ndarray) -> SupportResult:
    K, n = problem.n_classes, problem.n_cells
    q = problem.p_yhat
    masses = problem.masses
    witness = np.zeros((K, 2, n))
    total = 0.0
    for z in range(n):
        present = [yh for yh in (0, 1) if q[z, yh] > 0.0]
        nv = K * len(present)
        if 1 not in present:
            # no positive-decision mass: the cell adds nothing and the
            # total-probability rows pin w_alpha(0, z) = P(alpha|z)
            witness[:, 0, z] = problem.p_class[z]
            continue
        obj = np.zeros(nv)
        for k in range(K):
            obj[k * len(present) + present.index(1)] = coeffs[k]
        p = LpProblem(obj, sense="max")
        for k in range(K):
            row = np.zeros(nv)
            for t, yh in enumerate(present):
                row[k * len(present) + t] = q[z, yh]
            p.add_row(row, EQ, problem.p_class[z, k])
        for t in range(len(present)):
            row = np.zeros(nv)
            row[t :: len(present)] = 1.0
            p.add_row(row, EQ, 1.0)
        sol = solve(p)
        if sol.status is not LpStatus.OPTIMAL:
            raise InfeasibleConstraints(
                f"cell {problem.cells[z]} total-probability rows infeasible "
                f"({sol.status.value}); corrupt marginals"
            )
        total += masses[z] * q[z, 1] * sol.value
        for k in range(K):
            for t, yh in enumerate(present):
                witness[k, yh, z] = sol.point[k * len(present) + t]
    return SupportResult(
        value=float(total),
        witness=WeightField(witness),
        metadata={"formulation": "per-cell", "lipschitz": None},
    )


def _monolithic_lp(
    problem: CombinedProblem,
    coeffs: np.ndarray | None,
    lip: LipschitzSpec | None,
    scale: float,
):
    """One LP over all cells with smoothness rows; coeffs None = feasibility."""
    K, n = problem.n_classes, problem.n_cells
    q = problem.p_yhat
    masses = problem.masses
    index: dict[tuple[int, int, int], int] = {}
    for z in range(n):
        for yh in (0, 1):
            if q[z, yh] > 0.0:
                for k in range(K):
                    index[(k, yh, z)] = len(index)
    nv = len(index)
    obj = np.zeros(nv)
    if coeffs is not None:
        for (k, yh, z), j in index.items():
            if yh == 1:
                obj[j] = coeffs[k] * masses[z] * q[z, 1]
    p = LpProblem(obj, sense="max")
    for z in range(n):
        for k in range(K):
            row = np.zeros(nv)
            for yh in (0, 1):
                if (k, yh, z) in index:
                    row[index[(k, yh, z)]] = q[z, yh]
            p.add_row(row, EQ, problem.p_class[z, k])
        for yh in (0, 1):
            if (0, yh, z) not in index:
                continue
            row = np.zeros(nv)
            for k in range(K):
                row[index[(k, yh, z)]] = 1.0
            p.add_row(row, EQ, 1.0)
    # smoothness rows per class and decision value, chain over present cells
    if lip is not None:
        for yh in (0, 1):
            present = np.array([z for z in range(n) if q[z, yh] > 0.0])
            for i, j, d0 in metric_pairs(problem, lip, subset=present):
                bound = scale * d0
                for k in range(K):
                    row = np.zeros(nv)
                    row[index[(k, yh, i)]] = 1.0
                    row[index[(k, yh, j)]] = -1.0
                    p.add_row(row, LE, bound)
                    p.add_row(-row, LE, bound)
    return p, index


def _support_monolithic(
    problem: CombinedProblem, coeffs: np.ndarray, lip: LipschitzSpec, scale: float
) -> SupportResult:
    p, index = _monolithic_lp(problem, coeffs, lip, scale)
    sol = solve(p)
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleConstraints(
            f"no weight field satisfies the Lipschitz bound at L={scale}"
        )
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleConstraints(f"support LP ended with {sol.status.value}")
    K, n = problem.n_classes, problem.n_cells
    witness = np.zeros((K, 2, n))
    for (k, yh, z), j in index.items():
        witness[k, yh, z] = sol.point[j]
    return SupportResult(
        value=float(sol.value),
        witness=WeightField(witness),
        metadata={
            "formulation": "monolithic",
            "lipschitz": {"L": scale, "on": "w(yhat,z)"},
        },
    )


def dd_support(
    problem: CombinedProblem,
    rho,
    lip: LipschitzSpec | None = None,
    *,
    force_monolithic: bool = False,
) -> SupportResult:
    """Support value and an optimal weight field in direction ``rho``.

    With a LipschitzSpec the smoothness rows are applied to w_alpha(yhat, z)
    in either mode (recorded in the result metadata); scale "minimal"
    resolves to :func:`minimal_lipschitz`.
    """
    direction = rho if isinstance(rho, Direction) else Direction(np.asarray(rho))
    coeffs = _class_coeffs(problem, direction)
    if lip is None:
        if force_monolithic:
            # one LP over all cells, no smoothness rows (test hook: the
            # separable path must agree with this exactly)
            p, index = _monolithic_lp(problem, coeffs, None, 0.0)
            sol = solve(p)
            if sol.status is not LpStatus.OPTIMAL:
                raise InfeasibleConstraints(f"support LP ended with {sol.status.value}")
            K, n = problem.n_classes, problem.n_cells
            witness = np.zeros((K, 2, n))
            for (k, yh, z), j in index.items():
                witness[k, yh, z] = sol.point[j]
            return SupportResult(
                float(sol.value), WeightField(witness),
                {"formulation": "monolithic", "lipschitz": None},
            )
        return _support_separable(problem, coeffs)
    scale = minimal_lipschitz(problem, lip) if lip.minimal else float(lip.scale)
    return _support_monolithic(problem, coeffs, lip, scale)


def dd_interval_lp(
    problem: CombinedProblem, pair=None, lip: LipschitzSpec | None = None
) -> DisparityInterval:
    """[-h(-rho), h(rho)] for the direction encoding the ordered pair."""
    if pair is None:
        a, b = problem.class_labels[0], problem.class_labels[1]
    else:
        a, b = pair
        if isinstance(a, str):
            a, b = problem.pair(a, b)
    rho = _pair_direction(problem, a, b)
    scale = None
    if lip is not None and lip.minimal:
        scale = minimal_lipschitz(problem, lip)
        lip = LipschitzSpec(scale=scale, weights=lip.weights)
    hi = dd_support(problem, rho, lip)
    lo = dd_support(problem, Direction(-rho.rho), lip)
    notes = []
    if lip is not None:
        notes.append(f"lipschitz L={lip.scale:.9g} on w(yhat,z)")
    return DisparityInterval(
        measure=Measure(DD_FAMILY, name="DD"),
        pair=(a, b),
        lower=-lo.value,
        upper=hi.value,
        method="LP",
        notes=tuple(notes),
    )


def _pair_direction(problem: CombinedProblem, a: ClassLabel, b: ClassLabel) -> Direction:
    """rho with rho . (delta(ref, c))_c = delta(a, b)."""
    K = problem.n_classes
    rho = np.zeros(K - 1)
    if a.index == b.index:
        raise DataError("pair must name two distinct classes")
    if b.index > 0:
        rho[b.index - 1] += 1.0
    if a.index > 0:
        rho[a.index - 1] -= 1.0
    return Direction(rho)


def minimal_lipschitz(problem: CombinedProblem, lip: LipschitzSpec | None = None) -> float:
    """Smallest L >= 0 with a nonempty weight polytope under L * d0.

    Bisection over feasibility LPs; the upper bracket is the largest
    total-probability-implied weight difference across constrained pairs
    (at that L every pairwise row is looser than the per-cell weight boxes,
    so the polytope is certainly nonempty).
    """
    spec = lip if lip is not None else LipschitzSpec()
    pairs = metric_pairs(problem, spec)
    if not pairs:
        return 0.0

    def ok(L: float) -> bool:
        p, _ = _monolithic_lp(problem, None, spec, L)
        return lp_feasible(p)

    if ok(0.0):
        return 0.0
    # per-coordinate weight boxes implied by the total-probability rows
    q = problem.p_yhat
    K, n = problem.n_classes, problem.n_cells
    w_lo = np.zeros((K, 2, n))
    w_hi = np.ones((K, 2, n))
    for z in range(n):
        for yh in (0, 1):
            if q[z, yh] > 0.0:
                w_lo[:, yh, z] = np.maximum(
                    0.0, 1.0 + (problem.p_class[z] - 1.0) / q[z, yh]
                )
                w_hi[:, yh, z] = np.minimum(1.0, problem.p_class[z] / q[z, yh])
    hi = 0.0
    for i, j, d0 in pairs:
        if d0 <= 0.0:
            continue
        for yh in (0, 1):
            if q[i, yh] > 0.0 and q[j, yh] > 0.0:
                gap = max(
                    float(np.max(w_hi[:, yh, i] - w_lo[:, yh, j])),
                    float(np.max(w_hi[:, yh, j] - w_lo[:, yh, i])),
                )
                hi = max(hi, gap / d0)
    if hi == 0.0:
        hi = 1.0
    if not ok(hi):
        raise InfeasibleConstraints(
            "no finite Lipschitz scale is feasible (cells with identical "
            "coordinates but incompatible marginals)"
        )
    lo = 0.0
    while hi - lo > _BISECT_REL * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
