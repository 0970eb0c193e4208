"""Pure-numpy simplex pivot loop.

Mirrors ``_kernel.pyx`` operation for operation so both backends produce
equal tableaus (the compiled kernel is built with -ffp-contract=off for the
same reason). Keep the two files in sync.

Tableau layout: rows 0..m-1 are constraints, row m is the reduced-cost row;
the last column is the right-hand side. ``basis[i]`` is the column basic in
row i. Entering candidates are columns < n_enterable.

Pivot selection: Dantzig rule (most negative reduced cost, lowest index on
ties); after ``bland_after`` consecutive degenerate steps the loop switches
permanently to Bland's rule, which guarantees termination. Leaving row: the
minimum-ratio rows, tie-broken by the smallest basic variable index (Bland).
"""

from __future__ import annotations

import numpy as np

OPTIMAL, UNBOUNDED, ITER_LIMIT, BREAKDOWN = 0, 1, 2, 3

_DEGEN_STEP = 1e-12
_RATIO_TIE = 1e-12


def iterate(T, basis, n_enterable, tol_cost, tol_pivot, bland_after, max_iter):
    """Run pivots in place until optimal/unbounded/limit. Returns (status, n_iter)."""
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    banned = np.zeros(n_enterable, dtype=bool)
    bland = False
    degen_run = 0
    niter = 0

    while niter < max_iter:
        cost = T[m, :n_enterable]
        banned[:] = False
        j = -1
        while True:
            if bland:
                cand = np.nonzero((cost < -tol_cost) & ~banned)[0]
                j = int(cand[0]) if cand.size else -1
            else:
                masked = np.where(banned, np.inf, cost)
                jj = int(np.argmin(masked)) if n_enterable else -1
                j = jj if (jj >= 0 and masked[jj] < -tol_cost) else -1
            if j < 0:
                return (BREAKDOWN, niter) if banned.any() else (OPTIMAL, niter)
            col = T[:m, j]
            pos = col > tol_pivot
            if pos.any():
                break
            if m == 0 or float(col.max(initial=-np.inf)) <= 0.0:
                return UNBOUNDED, niter
            banned[j] = True  # only pivots in (0, tol]: numerically unsafe

        # ratio test, Bland tie-break on the basic variable index
        rhs_col = T[:m, rhs]
        ratios = np.where(pos, rhs_col / np.where(pos, col, 1.0), np.inf)
        best = float(ratios.min())
        tie = best + _RATIO_TIE * (1.0 + abs(best))
        rows = np.nonzero(ratios <= tie)[0]
        r = int(rows[np.argmin(basis[rows])])

        if best <= _DEGEN_STEP:
            degen_run += 1
            if degen_run > bland_after:
                bland = True
        else:
            degen_run = 0

        prow = T[r]
        prow /= prow[j]
        colv = T[:, j].copy()
        colv[r] = 0.0
        T -= np.outer(colv, prow)
        basis[r] = j
        niter += 1

    return ITER_LIMIT, niter
