# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO solver for the epsilon-insensitive SVR dual.

Mirrors flowcast._smo_py.solve: maximal-violating-pair selection over
the doubled variable set, exact two-variable updates, O(n) gradient
refresh.  This loop dominates training time, hence the C extension.
"""

import numpy as np

cimport cython
from libc.math cimport INFINITY, isfinite


def solve(K, y, double C, double eps, double tol, long max_iter,
          bint record_objective=False):
    """Solve the dual; see flowcast._smo_py.solve for the contract."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] Kv = K
    cdef double[::1] yv = y
    cdef Py_ssize_t n = yv.shape[0]

    ap_arr = np.zeros(n)
    am_arr = np.zeros(n)
    G_arr = -y.copy()
    cdef double[::1] ap = ap_arr
    cdef double[::1] am = am_arr
    cdef double[::1] G = G_arr

    objectives = [0.0] if record_objective else None

    cdef long iterations = 0
    cdef double m = INFINITY
    cdef double M = -INFINITY
    cdef double best_up, best_lo, vp, vm, gap, quad, room_i, room_j, t
    cdef double acc, beta_k, dual
    cdef Py_ssize_t i, j, k
    cdef bint i_plus, j_plus

    while True:
        best_up = -INFINITY
        best_lo = INFINITY
        i = -1
        j = -1
        i_plus = True
        j_plus = True
        for k in range(n):
            vp = -G[k] - eps
            vm = -G[k] + eps
            # upper-tube coefficient: raisable while below C, lowerable while > 0
            if ap[k] < C and vp > best_up:
                best_up = vp
                i = k
                i_plus = True
            if am[k] > 0.0 and vm > best_up:
                best_up = vm
                i = k
                i_plus = False
            if ap[k] > 0.0 and vp < best_lo:
                best_lo = vp
                j = k
                j_plus = True
            if am[k] < C and vm < best_lo:
                best_lo = vm
                j = k
                j_plus = False
        m = best_up
        M = best_lo
        gap = m - M
        if i < 0 or j < 0 or not isfinite(gap) or gap <= tol or iterations >= max_iter:
            break
        quad = Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j]
        if quad < 1e-12:
            quad = 1e-12
        room_i = (C - ap[i]) if i_plus else am[i]
        room_j = ap[j] if j_plus else (C - am[j])
        t = gap / quad
        if room_i < t:
            t = room_i
        if room_j < t:
            t = room_j
        if i_plus:
            ap[i] = C if t == room_i else ap[i] + t
        else:
            am[i] = 0.0 if t == room_i else am[i] - t
        if j_plus:
            ap[j] = 0.0 if t == room_j else ap[j] - t
        else:
            am[j] = C if t == room_j else am[j] + t
        for k in range(n):
            G[k] += t * (Kv[i, k] - Kv[j, k])
        iterations += 1
        if record_objective:
            acc = 0.0
            for k in range(n):
                beta_k = ap[k] - am[k]
                acc += 0.5 * beta_k * G[k] - 0.5 * beta_k * yv[k] + eps * (ap[k] + am[k])
            dual = -acc
            objectives.append(dual)

    cdef double bias
    if isfinite(m) and isfinite(M):
        bias = (m + M) / 2.0
    else:
        acc = 0.0
        for k in range(n):
            acc -= G[k]
        bias = acc / n if n > 0 else 0.0
    gap = m - M
    if not isfinite(gap):
        gap = 0.0
    return ap_arr - am_arr, bias, iterations, gap, objectives
