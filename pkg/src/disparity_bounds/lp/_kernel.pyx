# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simplex pivot loop; semantics mirror ``_kernel_py.iterate``.

The update loop skips rows whose pivot-column entry is exactly zero (the
numpy fallback subtracts a zero row instead); results are ==-equal either
way. Build with -ffp-contract=off so multiply/subtract are not fused.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

OPTIMAL, UNBOUNDED, ITER_LIMIT, BREAKDOWN = 0, 1, 2, 3

cdef int _OPTIMAL = 0, _UNBOUNDED = 1, _ITER_LIMIT = 2, _BREAKDOWN = 3
cdef double _DEGEN_STEP = 1e-12
cdef double _RATIO_TIE = 1e-12


def iterate(double[:, ::1] T, long long[::1] basis, Py_ssize_t n_enterable,
            double tol_cost, double tol_pivot, long long bland_after,
            long long max_iter):
    """Run pivots in place until optimal/unbounded/limit. Returns (status, n_iter)."""
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t width = T.shape[1]
    cdef Py_ssize_t rhs = width - 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] banned_arr = np.zeros(
        max(n_enterable, 1), dtype=np.uint8)
    cdef unsigned char[::1] banned = banned_arr
    cdef bint bland = False, any_banned = False, has_pos = False
    cdef bint all_nonpos, rfirst
    cdef long long degen_run = 0, niter = 0
    cdef Py_ssize_t i, j, k, r
    cdef double cmin, v, piv, ratio, best, tie, f
    cdef long long bestbas
    cdef int status = _ITER_LIMIT

    with nogil:
        while niter < max_iter:
            for k in range(n_enterable):
                banned[k] = 0
            any_banned = False
            j = -1
            while True:
                # entering column
                if bland:
                    j = -1
                    for k in range(n_enterable):
                        if not banned[k] and T[m, k] < -tol_cost:
                            j = k
                            break
                else:
                    j = -1
                    cmin = 0.0
                    for k in range(n_enterable):
                        if banned[k]:
                            continue
                        v = T[m, k]
                        if j < 0 or v < cmin:
                            cmin = v
                            j = k
                    if j >= 0 and cmin >= -tol_cost:
                        j = -1
                if j < 0:
                    status = _BREAKDOWN if any_banned else _OPTIMAL
                    break
                has_pos = False
                all_nonpos = True
                for i in range(m):
                    v = T[i, j]
                    if v > tol_pivot:
                        has_pos = True
                        break
                    if v > 0.0:
                        all_nonpos = False
                if has_pos:
                    break
                if all_nonpos:
                    status = _UNBOUNDED
                    break
                banned[j] = 1
                any_banned = True
            if j < 0 or not has_pos:
                break

            # ratio test: pass 1 finds min ratio, pass 2 breaks ties by basis index
            best = 0.0
            rfirst = True
            for i in range(m):
                v = T[i, j]
                if v > tol_pivot:
                    ratio = T[i, rhs] / v
                    if rfirst or ratio < best:
                        best = ratio
                        rfirst = False
            tie = best + _RATIO_TIE * (1.0 + fabs(best))
            r = -1
            bestbas = 0
            for i in range(m):
                v = T[i, j]
                if v > tol_pivot:
                    ratio = T[i, rhs] / v
                    if ratio <= tie and (r < 0 or basis[i] < bestbas):
                        bestbas = basis[i]
                        r = i

            if best <= _DEGEN_STEP:
                degen_run += 1
                if degen_run > bland_after:
                    bland = True
            else:
                degen_run = 0

            piv = T[r, j]
            for k in range(width):
                T[r, k] /= piv
            for i in range(m + 1):
                if i == r:
                    continue
                f = T[i, j]
                if f != 0.0:
                    for k in range(width):
                        T[i, k] -= f * T[r, k]
            basis[r] = j
            niter += 1

    return status, niter
