"""Two-phase dense simplex on top of the pivot kernel.

Self-contained by design: every optimization module in the package routes
through :func:`solve` / :func:`feasible`, there is no external solver.

Tolerances: feasibility 1e-9 (phase-1 optimum and row residuals), reduced
cost 1e-9, pivot threshold 1e-11. Identical inputs give identical outputs.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalBreakdown
from . import _backend
from ._kernel_py import BREAKDOWN, ITER_LIMIT, OPTIMAL, UNBOUNDED
from .model import EQ, GE, LE, LpProblem, LpSolution, LpStatus

TOL_FEAS = 1e-9
TOL_COST = 1e-9
TOL_PIVOT = 1e-11
BLAND_AFTER = 50


def _pivot(T: np.ndarray, r: int, j: int, basis: np.ndarray) -> None:
    """One pivot outside the kernel (used to drive artificials out)."""
    prow = T[r]
    prow /= prow[j]
    colv = T[:, j].copy()
    colv[r] = 0.0
    T -= np.outer(colv, prow)
    basis[r] = j


class _Canonical:
    """Standard-form tableau with phase bookkeeping."""

    def __init__(self, p: LpProblem):
        A, rel, b = p.matrix_form()
        n = p.n_vars
        self.n = n
        self.lo = p.lo
        # shift x = x' + lo so all variables are >= 0
        b = b - A @ p.lo if b.size else b.copy()
        # finite upper bounds become explicit rows on the shifted variables
        ub_rows = np.nonzero(np.isfinite(p.hi))[0]
        if ub_rows.size:
            U = np.zeros((ub_rows.size, n))
            ub = np.empty(ub_rows.size)
            for k, jvar in enumerate(ub_rows):
                U[k, jvar] = 1.0
                ub[k] = p.hi[jvar] - p.lo[jvar]
            A = np.vstack([A, U]) if A.size else U
            b = np.concatenate([b, ub])
            rel = list(rel) + [LE] * ub_rows.size
        m = A.shape[0] if A.size else len(rel)

        n_slack = sum(1 for r in rel if r != EQ)
        body = np.zeros((m, n + n_slack))
        if m:
            body[:, :n] = A
        slack_col = {}
        js = n
        for i, r in enumerate(rel):
            if r == LE:
                body[i, js] = 1.0
                slack_col[i] = js
                js += 1
            elif r == GE:
                body[i, js] = -1.0
                slack_col[i] = js
                js += 1
        # make every rhs nonnegative
        neg = b < 0
        body[neg] *= -1.0
        b = np.where(neg, -b, b)

        basis = np.empty(m, dtype=np.int64)
        art_rows = []
        for i in range(m):
            jcol = slack_col.get(i)
            if jcol is not None and body[i, jcol] == 1.0:
                basis[i] = jcol
            else:
                art_rows.append(i)
                basis[i] = -1  # artificial assigned below
        n_art = len(art_rows)
        width = n + n_slack + n_art + 1
        T = np.zeros((m + 1, width))
        T[:m, : n + n_slack] = body
        for k, i in enumerate(art_rows):
            T[i, n + n_slack + k] = 1.0
            basis[i] = n + n_slack + k
        T[:m, -1] = b

        self.T = T
        self.basis = basis
        self.m = m
        self.n_slack = n_slack
        self.n_art = n_art
        self.art_start = n + n_slack

    def phase1(self) -> bool:
        """Minimize the artificial sum; True iff the problem is feasible."""
        if self.n_art:
            T, m = self.T, self.m
            T[m, :] = 0.0
            T[m, self.art_start : self.art_start + self.n_art] = 1.0
            for i in range(m):
                if self.basis[i] >= self.art_start:
                    T[m, :] -= T[i, :]
            status, _ = _backend.iterate(
                T, self.basis, self.art_start, TOL_COST, TOL_PIVOT,
                BLAND_AFTER, self._max_iter(),
            )
            if status in (BREAKDOWN, ITER_LIMIT):
                raise NumericalBreakdown(f"phase 1 stopped with status {status}")
            if -T[m, -1] > TOL_FEAS:
                return False
            self._purge_artificials()
        return True

    def _purge_artificials(self) -> None:
        """Pivot artificials out of the basis; drop rows that turn out redundant."""
        T, basis = self.T, self.basis
        drop = []
        for i in range(self.m):
            if basis[i] < self.art_start:
                continue
            jnew = -1
            for j in range(self.art_start):
                if abs(T[i, j]) > TOL_PIVOT:
                    jnew = j
                    break
            if jnew >= 0:
                _pivot(T, i, jnew, basis)
            else:
                drop.append(i)
        if drop:
            keep = np.setdiff1d(np.arange(self.m), drop)
            self.T = np.vstack([self.T[keep], self.T[self.m :]])
            self.basis = basis[keep]
            self.m -= len(drop)
        # artificial columns are dead from here on
        self.T = np.delete(
            self.T, np.s_[self.art_start : self.art_start + self.n_art], axis=1
        )
        self.n_art = 0

    def phase2(self, c_min: np.ndarray) -> int:
        """Optimize min c_min . x' from the feasible basis."""
        T, m = self.T, self.m
        c_ext = np.zeros(T.shape[1])
        c_ext[: self.n] = c_min
        T[m, :] = c_ext
        for i in range(m):
            cb = c_ext[self.basis[i]]
            if cb != 0.0:
                T[m, :] -= cb * T[i, :]
        status, _ = _backend.iterate(
            T, self.basis, self.art_start, TOL_COST, TOL_PIVOT,
            BLAND_AFTER, self._max_iter(),
        )
        return status

    def extract_point(self) -> np.ndarray:
        x = np.zeros(self.art_start)
        for i in range(self.m):
            if self.basis[i] < self.art_start:
                x[self.basis[i]] = self.T[i, -1]
        return x[: self.n] + self.lo

    def _max_iter(self) -> int:
        return 50 * (self.m + self.art_start) + 10000


def solve(p: LpProblem) -> LpSolution:
    """Two-phase simplex. Deterministic; raises NumericalBreakdown on pivot failure."""
    can = _Canonical(p)
    if not can.phase1():
        return LpSolution(LpStatus.INFEASIBLE, np.nan, np.zeros(p.n_vars))
    c_min = -p.objective if p.sense == "max" else p.objective
    status = can.phase2(c_min)
    if status == OPTIMAL:
        point = can.extract_point()
        value = float(p.objective @ point)
        return LpSolution(LpStatus.OPTIMAL, value, point)
    if status == UNBOUNDED:
        value = np.inf if p.sense == "max" else -np.inf
        return LpSolution(LpStatus.UNBOUNDED, value, np.zeros(p.n_vars))
    raise NumericalBreakdown(f"phase 2 stopped with status {status}")


def feasible(p: LpProblem) -> bool:
    """Phase-1 only: True iff the constraint system admits a point."""
    return _Canonical(p).phase1()
