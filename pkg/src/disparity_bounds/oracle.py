"""Brute-force verification by enumerating per-cell coupling grids.

Independent of every solver in the package: couplings are CONSTRUCTED from
the marginals (law-of-total-probability identities plus box membership), so
each enumerated point is exactly feasible, and the resulting intervals are
inner approximations of the sharp sets. On tiny instances they certify the
closed-form and LP results from below.

Per-cell degrees of freedom (binary protected class): the decision-only
coupling has one free entry pi(a, yhat=1 | z) inside its Frechet-Hoeffding
interval; the full coupling has three free entries pi(a, yhat, y | z) with
the fourth forced by P(a|z). Grid points are midpoint-offset (cell centers)
to avoid boundary-only sampling bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetExceeded,
    NoFeasiblePoint,
    SchemaError,
    WrongClassCount,
    ZeroClassPrior,
)
from .measures import CLASSIFICATION, DD_FAMILY, DisparityInterval, Measure
from .problem import CombinedProblem, class_priors

EXHAUSTIVE = "exhaustive"
RANDOM_VERTEX_MIX = "random_vertex_mix"

_CHUNK = 1 << 17


@dataclass(frozen=True)
class OracleSpec:
    per_cell_grid: int = 51
    max_total_points: float = 1e7
    sampling: str = EXHAUSTIVE
    n_samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.per_cell_grid < 3:
            raise SchemaError("per-cell grid must be >= 3")
        if self.sampling not in (EXHAUSTIVE, RANDOM_VERTEX_MIX):
            raise SchemaError(f"unknown sampling mode {self.sampling!r}")


def _midpoints(lo: float, hi: float, g: int) -> np.ndarray:
    if hi - lo <= 0.0:
        return np.array([lo])
    return lo + (np.arange(g) + 0.5) * (hi - lo) / g


def _budget_or_raise(counts, cap: float) -> int:
    logs = sum(math.log(max(c, 1)) for c in counts)
    if logs > math.log(cap) + 1e-12:
        raise BudgetExceeded(
            f"enumeration would visit ~1e{logs / math.log(10):.1f} points "
            f"(cap {cap:g})"
        )
    total = 1
    for c in counts:
        total *= c
    if total > cap:
        raise BudgetExceeded(f"enumeration needs {total} points (cap {cap:g})")
    return total


def _mixed_radix_chunks(counts, total):
    """Yield per-cell index arrays decoding flat indices chunk by chunk."""
    radix = np.array(counts, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = []
        rem = flat
        for c in radix[::-1]:
            digits.append(rem % c)
            rem = rem // c
        yield digits[::-1]


def _require_binary(problem: CombinedProblem) -> None:
    if problem.n_classes != 2:
        raise WrongClassCount("oracle enumeration needs a binary protected class")


def oracle_dd(
    problem: CombinedProblem, spec: OracleSpec | None = None, pair=None
) -> DisparityInterval:
    """Enumerated demographic-disparity range for a binary class."""
    spec = spec or OracleSpec()
    _require_binary(problem)
    a, b = problem.class_labels[0], problem.class_labels[1]
    priors = class_priors(problem)
    for lab in (a, b):
        if priors[lab.index] <= 0.0:
            raise ZeroClassPrior(lab.name)
    q1 = problem.p_yhat[:, 1]
    pa = problem.p_class[:, 0]
    n = problem.n_cells
    lo = np.minimum(np.maximum(pa + q1 - 1.0, 0.0), np.minimum(pa, q1))
    hi = np.minimum(pa, q1)
    values = [_midpoints(lo[z], hi[z], spec.per_cell_grid) for z in range(n)]
    # DD is affine in the per-cell free entries:
    #   DD = sum_z m_z pi_z (1/P(a) + 1/P(b)) - P(Yhat=1)/P(b)
    coeff = problem.masses * (1.0 / priors[0] + 1.0 / priors[1])
    const = -float(problem.masses @ q1) / priors[1]

    if spec.sampling == RANDOM_VERTEX_MIX:
        rng = np.random.default_rng(spec.seed)
        lam = rng.random((spec.n_samples, n))
        pts = lo + lam * (hi - lo)
        dd = pts @ coeff + const
        vmin, vmax = float(dd.min()), float(dd.max())
    else:
        counts = [len(v) for v in values]
        total = _budget_or_raise(counts, spec.max_total_points)
        vmin, vmax = np.inf, -np.inf
        for digits in _mixed_radix_chunks(counts, total):
            acc = np.full(digits[0].shape, const)
            for z in range(n):
                acc += coeff[z] * values[z][digits[z]]
            vmin = min(vmin, float(acc.min()))
            vmax = max(vmax, float(acc.max()))
    return DisparityInterval(
        measure=Measure(DD_FAMILY, name="DD"),
        pair=(a, b),
        lower=vmin,
        upper=vmax,
        method="Oracle",
    )


def _full_cell_grid(pa: float, table_z: np.ndarray, g: int) -> np.ndarray:
    """Feasible pi(a, yhat, y | z) rows, shape (k, 4) ordered (11, 01, 10, 00)."""
    t11, t01, t10, t00 = (
        table_z[1, 1],
        table_z[0, 1],
        table_z[1, 0],
        table_z[0, 0],
    )

    def fh_axis(t):
        hi = min(pa, t)
        return _midpoints(min(max(pa + t - 1.0, 0.0), hi), hi, g)

    g1 = fh_axis(t11)
    g2 = fh_axis(t01)
    g3 = fh_axis(t10)
    x1, x2, x3 = np.meshgrid(g1, g2, g3, indexing="ij")
    x1, x2, x3 = x1.ravel(), x2.ravel(), x3.ravel()
    x4 = pa - x1 - x2 - x3
    ok = (x4 >= 0.0) & (x4 <= t00)
    rows = np.stack([x1[ok], x2[ok], x3[ok], x4[ok]], axis=1)
    return rows


def oracle_class(
    problem: CombinedProblem,
    measure: Measure,
    spec: OracleSpec | None = None,
    pair=None,
) -> DisparityInterval:
    """Enumerated classification-disparity range (binary class, full mode)."""
    spec = spec or OracleSpec()
    if measure.family != CLASSIFICATION:
        raise SchemaError("oracle_class needs a classification measure")
    work = problem.swap_roles() if measure.role_swap else problem
    _require_binary(work)
    a, b = work.class_labels[0], work.class_labels[1]
    table = work.p_table
    m = work.masses
    n = work.n_cells
    yh, y = measure.conditioning
    _budget_or_raise([spec.per_cell_grid] * (3 * n), spec.max_total_points)
    cell_rows = [
        _full_cell_grid(work.p_class[z, 0], table[z], spec.per_cell_grid)
        for z in range(n)
    ]
    if any(rows.shape[0] == 0 for rows in cell_rows):
        raise NoFeasiblePoint(
            "a per-cell coupling grid came out empty; marginals are corrupt"
        )
    counts = [rows.shape[0] for rows in cell_rows]
    total = _budget_or_raise(counts, spec.max_total_points)

    # joint-cell order in rows: (1,1), (0,1), (1,0), (0,0)
    pos = {(1, 1): 0, (0, 1): 1, (1, 0): 2, (0, 0): 3}
    hit_col = pos[(yh, y)]
    miss_col = pos[(1 - yh, y)]
    hit_tot = float(m @ table[:, yh, y])
    miss_tot = float(m @ table[:, 1 - yh, y])

    vmin, vmax = np.inf, -np.inf
    for digits in _mixed_radix_chunks(counts, total):
        n_a = np.zeros(digits[0].shape)
        m_a = np.zeros(digits[0].shape)
        for z in range(n):
            rows = cell_rows[z]
            n_a += m[z] * rows[digits[z], hit_col]
            m_a += m[z] * rows[digits[z], miss_col]
        n_b = hit_tot - n_a
        m_b = miss_tot - m_a
        den_a = n_a + m_a
        den_b = n_b + m_b
        ok = (den_a > 0.0) & (den_b > 0.0)
        if not ok.any():
            continue
        delta = n_a[ok] / den_a[ok] - n_b[ok] / den_b[ok]
        vmin = min(vmin, float(delta.min()))
        vmax = max(vmax, float(delta.max()))
    if not np.isfinite(vmin):
        raise NoFeasiblePoint("no enumerated coupling had positive denominators")
    return DisparityInterval(
        measure=measure, pair=(a, b), lower=vmin, upper=vmax, method="Oracle"
    )


def oracle_hull(
    problem: CombinedProblem, measure: Measure, spec: OracleSpec | None = None
) -> np.ndarray:
    """Attainable (delta(a,b1), delta(a,b2)) pairs for a 3-class DD problem."""
    spec = spec or OracleSpec()
    if measure.family != DD_FAMILY:
        raise SchemaError("the hull oracle enumerates demographic disparity only")
    if problem.n_classes != 3:
        raise WrongClassCount("oracle_hull needs exactly 3 classes")
    priors = class_priors(problem)
    for lab in problem.class_labels:
        if priors[lab.index] <= 0.0:
            raise ZeroClassPrior(lab.name)
    q1 = problem.p_yhat[:, 1]
    n = problem.n_cells
    _budget_or_raise([spec.per_cell_grid] * (2 * n), spec.max_total_points)
    cell_rows = []
    for z in range(n):
        pa, pb, pc = problem.p_class[z]
        ga = _midpoints(max(0.0, pa + q1[z] - 1.0), min(pa, q1[z]), spec.per_cell_grid)
        gb = _midpoints(max(0.0, pb + q1[z] - 1.0), min(pb, q1[z]), spec.per_cell_grid)
        xa, xb = np.meshgrid(ga, gb, indexing="ij")
        xa, xb = xa.ravel(), xb.ravel()
        xc = q1[z] - xa - xb
        ok = (xc >= max(0.0, pc + q1[z] - 1.0) - 1e-15) & (xc <= min(pc, q1[z]) + 1e-15)
        cell_rows.append(np.stack([xa[ok], xb[ok]], axis=1))
    if any(r.shape[0] == 0 for r in cell_rows):
        raise NoFeasiblePoint("a per-cell coupling grid came out empty")
    counts = [r.shape[0] for r in cell_rows]
    total = _budget_or_raise(counts, spec.max_total_points)
    m = problem.masses
    q1_tot = float(m @ q1)
    pts = []
    for digits in _mixed_radix_chunks(counts, total):
        mu_a = np.zeros(digits[0].shape)
        mu_b = np.zeros(digits[0].shape)
        for z in range(n):
            rows = cell_rows[z]
            mu_a += m[z] * rows[digits[z], 0]
            mu_b += m[z] * rows[digits[z], 1]
        mu_c = q1_tot - mu_a - mu_b
        d1 = mu_a / priors[0] - mu_b / priors[1]
        d2 = mu_a / priors[0] - mu_c / priors[2]
        pts.append(np.stack([d1, d2], axis=1))
    return np.concatenate(pts, axis=0)
