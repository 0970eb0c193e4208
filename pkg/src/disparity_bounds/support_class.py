"""Classification-disparity support functions via grid search over ratio scales.

The rate for class alpha conditions on the event (Yhat=yhat*, Y=y*):

    rate(alpha) = P(Yhat=yhat* | A=alpha, Y=y*)
               = N_alpha / r_alpha,   N_alpha = P(A=alpha, Yhat=yhat*, Y=y*),
                                     r_alpha = P(A=alpha, Y=y*).

The Charnes-Cooper substitution u = t * w with t_alpha = 1/r_alpha makes the
program linear except for the per-class scales; since sum_alpha r_alpha =
P(Y=y*), it suffices to grid the (K-1)-vector of non-reference r values over
their integrated Frechet-Hoeffding boxes and solve one LP per grid point.

Without smoothness rows the inner LP is solved in reduced form: per-cell
event masses n_alpha(z) = pi(alpha, yhat*, y* | z) and e_alpha(z) =
pi(alpha, 1-yhat*, y* | z) are the only quantities the objective and the
couplings touch; the y != y* coordinates always admit a completion (their
feasibility is exactly q_alpha(z) = P(alpha|z) - n - e >= 0) and are filled
back by an independent coupling when reporting the witness. Smoothness rows
constrain those coordinates, so a LipschitzSpec switches to the full
formulation in u with perspective rows |u_i - u_j| <= L d0 / r_alpha.

Grid values are reported as-is: the returned value is a certified lower
bound on the support function, with ``gap_hint`` (value variation between
the incumbent and its neighbors on the finest grid) as an honesty margin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._pool import pmap
from .errors import (
    AllGridPointsInfeasible,
    DataError,
    EmptyGrid,
    SchemaError,
    ZeroDenominatorRisk,
)
from .lp import EQ, LE, LpProblem, LpStatus, solve
from .measures import CLASSIFICATION, DisparityInterval, Measure
from .problem import CombinedProblem
from .smoothness import LipschitzSpec, metric_pairs
from .support_dd import Direction, SupportResult

_R_MIN = 1e-9
_R_GEOM_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Outer-search grid over the non-reference r values.

    ``resolution`` points per free dimension; each refinement round re-grids
    a box of half the previous width around the incumbent (halving the
    step). ``r_bounds`` optionally overrides the per-class [L, U] boxes.
    """

    resolution: int = 101
    refine_rounds: int = 2
    r_bounds: tuple[tuple[float, float], ...] | None = None
    # also evaluate per-axis quadratic-fit vertices around each incumbent;
    # tightens fixed-resolution values but breaks cross-resolution nesting
    polish: bool = True

    def __post_init__(self):
        if self.resolution < 3:
            raise SchemaError("grid resolution must be >= 3")
        if self.refine_rounds < 0:
            raise SchemaError("refine_rounds must be >= 0")

    @classmethod
    def default_for(cls, n_classes: int) -> "GridSpec":
        if n_classes <= 2:
            return cls(resolution=101, refine_rounds=2)
        return cls(resolution=51, refine_rounds=1)


@dataclass(frozen=True)
class FractionalWitness:
    """Scales t and transformed weights u; the weight field is w = u / t."""

    t: np.ndarray  # (K,)
    u: np.ndarray  # (K, 2, 2, n)

    @property
    def w(self) -> np.ndarray:
        return self.u / self.t[:, None, None, None]

    def max_violation(self, problem: CombinedProblem, measure: Measure) -> float:
        """Worst residual over the scale identities and weight-polytope rows."""
        work = problem.swap_roles() if measure.role_swap else problem
        table = work.p_table
        m = work.masses
        y_star = measure.conditioning[1]
        p_y = table.sum(axis=1)[:, y_star]
        worst = abs(float((1.0 / self.t).sum()) - float(m @ p_y))
        u_y = self.u[:, :, y_star, :]  # (K, 2, n)
        ev = np.einsum("kyn,ny,n->k", u_y, table[:, :, y_star], m)
        worst = max(worst, float(np.max(np.abs(ev - 1.0))))
        w = self.w
        worst = max(worst, max(-float(w.min()), 0.0))
        worst = max(worst, max(float(w.max()) - 1.0, 0.0))
        # total-probability rows of the weight field
        lhs = np.einsum("kabn,nab->kn", w, table)
        worst = max(worst, float(np.max(np.abs(lhs - work.p_class.T))))
        present = np.transpose(table > 0.0, (1, 2, 0))  # (2,2,n)
        sums = w.sum(axis=0)
        if present.any():
            worst = max(worst, float(np.max(np.abs(sums[present] - 1.0))))
        return worst


def r_bounds(problem: CombinedProblem, measure: Measure) -> np.ndarray:
    """Integrated Frechet-Hoeffding box [L_alpha, U_alpha] for r_alpha."""
    work = problem.swap_roles() if measure.role_swap else problem
    y_star = measure.conditioning[1]
    p_y = work.p_table.sum(axis=1)[:, y_star]
    m = work.masses
    out = np.empty((work.n_classes, 2))
    for k in range(work.n_classes):
        sig = work.p_class[:, k]
        hi = np.minimum(sig, p_y)
        lo = np.minimum(np.maximum(sig + p_y - 1.0, 0.0), hi)
        out[k, 0] = float(m @ lo)
        out[k, 1] = float(m @ hi)
    return out


class _ReducedTemplate:
    """Constraint matrix for the no-smoothness inner LP; RHS varies per point.

    Variables: n_{k,z} then e_{k,z} (k-major). Rows: per-cell event sums,
    per-(k,z) capacity n+e <= P(alpha|z), then K-1 coupling rows.
    """

    def __init__(self, work: CombinedProblem, measure: Measure):
        yh, y = measure.conditioning
        table = work.p_table
        self.c1 = table[:, yh, y].copy()
        self.c2 = table[:, 1 - yh, y].copy()
        self.m = work.masses
        self.p_class = work.p_class
        K, n = work.n_classes, work.n_cells
        self.K, self.n = K, n
        nv = 2 * K * n
        rows = 2 * n + K * n + (K - 1)
        A = np.zeros((rows, nv))
        b = np.zeros(rows)
        rel = []
        r = 0
        for z in range(n):  # sum_k n_{k,z} = c1_z
            A[r, [k * n + z for k in range(K)]] = 1.0
            b[r] = self.c1[z]
            rel.append(EQ)
            r += 1
        for z in range(n):  # sum_k e_{k,z} = c2_z
            A[r, [K * n + k * n + z for k in range(K)]] = 1.0
            b[r] = self.c2[z]
            rel.append(EQ)
            r += 1
        for k in range(K):
            for z in range(n):  # n + e <= P(alpha|z)
                A[r, k * n + z] = 1.0
                A[r, K * n + k * n + z] = 1.0
                b[r] = self.p_class[z, k]
                rel.append(LE)
                r += 1
        self.couple_start = r
        for k in range(1, K):  # sum_z m_z (n + e) = r_k
            A[r, k * n : (k + 1) * n] = self.m
            A[r, K * n + k * n : K * n + (k + 1) * n] = self.m
            rel.append(EQ)
            r += 1
        A.flags.writeable = False
        self.A = A
        self.rel = rel
        self.b0 = b
        self.nv = nv

    def solve_at(self, r_vec: np.ndarray, coeffs: np.ndarray):
        """(objective value, full witness w-tilde) or None when infeasible."""
        K, n = self.K, self.n
        b = self.b0.copy()
        b[self.couple_start :] = r_vec[1:]
        obj = np.zeros(self.nv)
        for k in range(K):
            obj[k * n : (k + 1) * n] = (coeffs[k] / r_vec[k]) * self.m
        p = LpProblem.from_matrix(obj, "max", self.A, self.rel, b)
        sol = solve(p)
        if sol.status is not LpStatus.OPTIMAL:
            return None
        nz = sol.point[: K * n].reshape(K, n)
        ez = sol.point[K * n :].reshape(K, n)
        return float(sol.value), (nz, ez)

    def witness(self, r_vec, nz, ez, measure: Measure) -> FractionalWitness:
        yh, y = measure.conditioning
        K, n = self.K, self.n
        w = np.zeros((K, 2, 2, n))
        with np.errstate(divide="ignore", invalid="ignore"):
            w[:, yh, y, :] = np.where(self.c1 > 0.0, nz / np.where(self.c1 > 0, self.c1, 1.0), 0.0)
            w[:, 1 - yh, y, :] = np.where(self.c2 > 0.0, ez / np.where(self.c2 > 0, self.c2, 1.0), 0.0)
        # independent-coupling completion of the y != y* coordinates
        q = np.clip(self.p_class.T - nz - ez, 0.0, None)  # (K, n)
        other = 1.0 - self.c1 - self.c2
        fill = np.where(other > 0.0, q / np.where(other > 0, other, 1.0), 0.0)
        w[:, 0, 1 - y, :] = fill
        w[:, 1, 1 - y, :] = fill
        t = 1.0 / r_vec
        return FractionalWitness(t=t, u=w * t[:, None, None, None])


class _FullTemplate:
    """Prop-style formulation in u with optional perspective smoothness rows."""

    def __init__(self, work: CombinedProblem, measure: Measure, lip: LipschitzSpec | None, scale: float):
        yh, y = measure.conditioning
        self.measure = measure
        self.work = work
        table = work.p_table
        m = work.masses
        K, n = work.n_classes, work.n_cells
        self.K, self.n = K, n
        index: dict[tuple[int, int, int, int], int] = {}
        for z in range(n):
            for a in (0, 1):
                for b_ in (0, 1):
                    if table[z, a, b_] > 0.0:
                        for k in range(K):
                            index[(k, a, b_, z)] = len(index)
        self.index = index
        nv = len(index)
        self.nv = nv
        self.yh, self.y = yh, y
        rows_A = []
        rows_rel = []
        rows_b = []
        self.norm_rows = []  # E[u_k 1(Y=y*)] = 1, one per class
        for k in range(K):
            row = np.zeros(nv)
            for z in range(n):
                for a in (0, 1):
                    if (k, a, y, z) in index:
                        row[index[(k, a, y, z)]] = m[z] * table[z, a, y]
            rows_A.append(row)
            rows_rel.append(EQ)
            rows_b.append(1.0)
        self.sum_rows = []  # sum_k r_k u_k(a,b,z) = 1 per present coordinate
        for z in range(n):
            for a in (0, 1):
                for b_ in (0, 1):
                    if (0, a, b_, z) in index:
                        self.sum_rows.append((len(rows_A), a, b_, z))
                        rows_A.append(np.zeros(nv))
                        rows_rel.append(EQ)
                        rows_b.append(1.0)
        self.ltp_rows = []  # sum_ab P(a,b|z) u_k = P(alpha|z)/r_k
        for k in range(K):
            for z in range(n):
                row = np.zeros(nv)
                for a in (0, 1):
                    for b_ in (0, 1):
                        if (k, a, b_, z) in index:
                            row[index[(k, a, b_, z)]] = table[z, a, b_]
                self.ltp_rows.append((len(rows_A), k, z))
                rows_A.append(row)
                rows_rel.append(EQ)
                rows_b.append(0.0)
        self.lip_rows = []  # |u_i - u_j| <= L d0 / r_k
        if lip is not None:
            coords_pairs: dict[tuple[int, int], list] = {}
            for a in (0, 1):
                for b_ in (0, 1):
                    present = np.array(
                        [z for z in range(n) if (0, a, b_, z) in index], dtype=int
                    )
                    coords_pairs[(a, b_)] = metric_pairs(work, lip, subset=present)
            for k in range(K):
                for (a, b_), prs in coords_pairs.items():
                    for i, j, d0 in prs:
                        row = np.zeros(nv)
                        row[index[(k, a, b_, i)]] = 1.0
                        row[index[(k, a, b_, j)]] = -1.0
                        self.lip_rows.append((len(rows_A), k, scale * d0))
                        rows_A.append(row)
                        rows_rel.append(LE)
                        rows_b.append(0.0)
                        self.lip_rows.append((len(rows_A), k, scale * d0))
                        rows_A.append(-row)
                        rows_rel.append(LE)
                        rows_b.append(0.0)
        self.A = np.array(rows_A) if rows_A else np.zeros((0, nv))
        self.rel = rows_rel
        self.b0 = np.array(rows_b)
        self.obj_base = np.zeros((K, nv))
        for z in range(n):
            if (0, yh, y, z) in index:
                for k in range(K):
                    self.obj_base[k, index[(k, yh, y, z)]] = m[z] * table[z, yh, y]

    def solve_at(self, r_vec: np.ndarray, coeffs: np.ndarray):
        A = self.A.copy()
        b = self.b0.copy()
        for row_i, a, b_, z in self.sum_rows:
            for k in range(self.K):
                A[row_i, self.index[(k, a, b_, z)]] = r_vec[k]
        for row_i, k, z in self.ltp_rows:
            b[row_i] = self.work.p_class[z, k] / r_vec[k]
        for row_i, k, bound in self.lip_rows:
            b[row_i] = bound / r_vec[k]
        obj = coeffs @ self.obj_base
        p = LpProblem.from_matrix(obj, "max", A, self.rel, b)
        sol = solve(p)
        if sol.status is not LpStatus.OPTIMAL:
            return None
        return float(sol.value), sol.point

    def witness(self, r_vec, point, measure: Measure) -> FractionalWitness:
        u = np.zeros((self.K, 2, 2, self.n))
        for (k, a, b_, z), j in self.index.items():
            u[k, a, b_, z] = point[j]
        return FractionalWitness(t=1.0 / r_vec, u=u)


def _class_obj_coeffs(work: CombinedProblem, direction: Direction) -> np.ndarray:
    K = work.n_classes
    rho = direction.rho
    if rho.shape[0] != K - 1:
        raise DataError(f"direction needs {K - 1} entries, got {rho.shape[0]}")
    coeffs = np.empty(K)
    coeffs[0] = rho.sum()
    coeffs[1:] = -rho
    return coeffs


def _grid_axis(lo: float, hi: float, resolution: int) -> np.ndarray:
    if hi - lo <= 0.0:
        return np.array([lo])
    return np.linspace(lo, hi, resolution)


def _vertex_candidates(best_key, axes, round_vals, lows, highs):
    """Quadratic-fit vertices along each axis around the incumbent."""
    bkey = np.array(best_key)
    out = []
    for d in range(bkey.size):
        axis = axes[d]
        if len(axis) < 3:
            continue
        pos = int(np.argmin(np.abs(axis - bkey[d])))
        if pos == 0 or pos == len(axis) - 1:
            continue
        triple = []
        for q in (pos - 1, pos, pos + 1):
            nb = bkey.copy()
            nb[d] = axis[q]
            v = round_vals.get(tuple(nb))
            if v is None:
                break
            triple.append((axis[q], v))
        if len(triple) != 3:
            continue
        (x0, v0), (x1, v1), (x2, v2) = triple
        den = (x1 - x0) * (v1 - v2) + (x2 - x1) * (v1 - v0)
        if abs(den) < 1e-15:
            continue
        xv = x1 - 0.5 * ((x1 - x0) ** 2 * (v1 - v2) - (x2 - x1) ** 2 * (v1 - v0)) / den
        xv = min(max(xv, x0), x2)
        xv = min(max(xv, lows[d]), highs[d])
        if xv in (x0, x1, x2):
            continue
        cand = bkey.astype(float).copy()
        cand[d] = xv
        out.append(cand)
    return out


def class_support(
    problem: CombinedProblem,
    measure: Measure,
    rho,
    grid: GridSpec | None = None,
    lip: LipschitzSpec | None = None,
    pool=None,
) -> SupportResult:
    """Grid-search support value for a classification measure.

    Returns the best grid value (a lower bound on the support function), an
    optimal FractionalWitness at the best grid point, and diagnostics
    including ``gap_hint`` and skipped/infeasible counts.
    """
    if measure.family != CLASSIFICATION:
        raise SchemaError("class_support needs a classification measure")
    work = problem.swap_roles() if measure.role_swap else problem
    direction = rho if isinstance(rho, Direction) else Direction(np.asarray(rho))
    coeffs = _class_obj_coeffs(work, direction)
    grid = grid if grid is not None else GridSpec.default_for(work.n_classes)
    boxes = r_bounds(problem, measure)
    if grid.r_bounds is not None:
        boxes = np.asarray(grid.r_bounds, dtype=float)
        if boxes.shape != (work.n_classes, 2):
            raise SchemaError("r_bounds override must be (n_classes, 2)")
    relevant = {0} | {k + 1 for k in np.nonzero(direction.rho)[0]}
    for k in sorted(relevant):
        if boxes[k, 1] <= 0.0:
            raise ZeroDenominatorRisk(work.class_labels[k].name)
    y_star = measure.conditioning[1]
    p_y_total = float(work.masses @ work.p_table.sum(axis=1)[:, y_star])

    if lip is None:
        template = _ReducedTemplate(work, measure)
    else:
        from .support_dd import minimal_lipschitz  # local: avoid cycle at import

        scale = minimal_lipschitz(work, lip) if lip.minimal else float(lip.scale)
        template = _FullTemplate(work, measure, lip, scale)

    K = work.n_classes
    lows, highs = boxes[1:, 0], boxes[1:, 1]

    def candidates_for(axes):
        """Valid r vectors (with the reference entry implied) on the mesh."""
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1) if axes else np.zeros((1, 0))
        out = []
        for row in pts:
            r_ref = p_y_total - float(row.sum())
            r_vec = np.concatenate([[r_ref], row])
            if np.any(r_vec < _R_MIN):
                continue
            if not (boxes[0, 0] - _R_GEOM_TOL <= r_ref <= boxes[0, 1] + _R_GEOM_TOL):
                continue
            out.append(r_vec)
        return out

    def evaluate(r_vec):
        res = template.solve_at(r_vec, coeffs)
        if res is None:
            return None
        return res[0], r_vec, res[1]

    n_skipped = 0
    n_infeasible = 0
    n_evaluated = 0
    best = None  # (value, r_tuple, r_vec, raw)
    last_round_vals: dict[tuple, float] = {}
    widths = highs - lows

    for round_i in range(grid.refine_rounds + 1):
        if round_i == 0:
            axes = [_grid_axis(lows[d], highs[d], grid.resolution) for d in range(K - 1)]
        else:
            if best is None:
                break
            half = widths / (2.0 ** (round_i + 1))
            center = best[2][1:]
            axes = [
                _grid_axis(
                    max(lows[d], center[d] - half[d]),
                    min(highs[d], center[d] + half[d]),
                    grid.resolution,
                )
                for d in range(K - 1)
            ]
        cand = candidates_for(axes)
        full_mesh = int(np.prod([len(a) for a in axes])) if axes else 1
        n_skipped += full_mesh - len(cand)
        if not cand:
            continue
        results = pmap(evaluate, cand, pool)
        round_vals = {}
        for r_vec, res in zip(cand, results):
            if res is None:
                n_infeasible += 1
                continue
            n_evaluated += 1
            value, rv, raw = res
            key = tuple(rv[1:])
            round_vals[key] = value
            if (
                best is None
                or value > best[0]
                or (value == best[0] and key < best[1])
            ):
                best = (value, key, rv, raw)
        # per-axis parabolic polish: the value function is smooth at a
        # generic interior maximum, so also try the fitted vertex
        if grid.polish and best is not None and round_vals:
            for r_vec in _vertex_candidates(best[1], axes, round_vals, lows, highs):
                r_ref = p_y_total - float(r_vec.sum())
                full = np.concatenate([[r_ref], r_vec])
                if np.any(full < _R_MIN):
                    continue
                if not (boxes[0, 0] - _R_GEOM_TOL <= r_ref <= boxes[0, 1] + _R_GEOM_TOL):
                    continue
                res = evaluate(full)
                if res is None:
                    n_infeasible += 1
                    continue
                n_evaluated += 1
                value, rv, raw = res
                key = tuple(rv[1:])
                round_vals[key] = value
                if value > best[0] or (value == best[0] and key < best[1]):
                    best = (value, key, rv, raw)
        if round_vals:
            last_round_vals = round_vals
            last_axes = axes

    if best is None:
        if n_evaluated == 0 and n_infeasible == 0:
            raise EmptyGrid(
                "no grid point satisfies the integrated Frechet-Hoeffding box"
            )
        raise AllGridPointsInfeasible(
            f"all {n_infeasible} candidate grid points were infeasible"
        )

    gap_hint = 0.0
    if last_round_vals:
        keys = np.array(sorted(last_round_vals))
        # neighbors of the incumbent along each axis of the finest grid
        bkey = np.array(best[1])
        for d in range(bkey.size):
            axis = last_axes[d]
            pos = int(np.argmin(np.abs(axis - bkey[d])))
            for step in (-1, 1):
                q = pos + step
                if 0 <= q < len(axis):
                    nb = bkey.copy()
                    nb[d] = axis[q]
                    v = last_round_vals.get(tuple(nb))
                    if v is not None:
                        gap_hint = max(gap_hint, abs(best[0] - v))

    value, _, r_vec, raw = best
    if lip is None:
        witness = template.witness(r_vec, raw[0], raw[1], measure)
    else:
        witness = template.witness(r_vec, raw, measure)
    return SupportResult(
        value=value,
        witness=witness,
        metadata={
            "gap_hint": float(gap_hint),
            "n_evaluated": n_evaluated,
            "n_skipped": n_skipped,
            "n_infeasible": n_infeasible,
            "best_r": tuple(float(x) for x in r_vec),
            "formulation": "reduced" if lip is None else "full",
        },
    )


def class_interval(
    problem: CombinedProblem,
    measure: Measure,
    pair=None,
    grid: GridSpec | None = None,
    lip: LipschitzSpec | None = None,
    pool=None,
) -> DisparityInterval:
    """[-h(-rho), h(rho)] for the ordered pair via the grid search."""
    work_labels = problem.class_labels
    if pair is None:
        a, b = work_labels[0], work_labels[1]
    else:
        a, b = pair
        if isinstance(a, str):
            a, b = problem.pair(a, b)
    K = problem.n_classes
    rho = np.zeros(K - 1)
    if a.index == b.index:
        raise DataError("pair must name two distinct classes")
    if b.index > 0:
        rho[b.index - 1] += 1.0
    if a.index > 0:
        rho[a.index - 1] -= 1.0
    if lip is not None and lip.minimal:
        from .support_dd import minimal_lipschitz

        work = problem.swap_roles() if measure.role_swap else problem
        lip = LipschitzSpec(scale=minimal_lipschitz(work, lip), weights=lip.weights)
    hi = class_support(problem, measure, rho, grid=grid, lip=lip, pool=pool)
    lo = class_support(problem, measure, Direction(-rho), grid=grid, lip=lip, pool=pool)
    notes = []
    if lip is not None:
        notes.append(f"lipschitz L={lip.scale:.9g} on w(yhat,y,z)")
    return DisparityInterval(
        measure=measure,
        pair=(a, b),
        lower=-lo.value,
        upper=hi.value,
        method="FractionalGrid",
        gap_hint=max(hi.metadata["gap_hint"], lo.metadata["gap_hint"]),
        notes=tuple(notes),
    )
