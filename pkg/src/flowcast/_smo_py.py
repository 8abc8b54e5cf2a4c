"""Pure-python (numpy) SMO solver for the epsilon-insensitive SVR dual.

Same algorithm and working-pair rule as the compiled extension in
``_smo.pyx``: maximal-violating-pair selection over the doubled variable
set (upper and lower tube coefficients), exact two-variable updates, and
an O(n) gradient refresh per iteration.
"""

from __future__ import annotations

import numpy as np


def solve(K, y, C, eps, tol, max_iter, record_objective=False):
    """Solve the dual and return (beta, bias, iterations, gap, objectives).

    ``beta`` holds the net dual coefficients (upper minus lower), each in
    [-C, C] summing to zero up to accumulated rounding.  ``gap`` is the final KKT
    violation; ``objectives`` is the recorded dual objective series (the
    maximization form) or None.
    """
    K = np.ascontiguousarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    ap = np.zeros(n)  # upper tube coefficients
    am = np.zeros(n)  # lower tube coefficients
    G = -y.copy()  # (K beta)_i - y_i
    objectives = [0.0] if record_objective else None
    iterations = 0
    m = np.inf
    M = -np.inf
    while True:
        # interleave (plus, minus) per index so ties resolve exactly as the
        # compiled solver's sequential scan does
        up = np.empty(2 * n)
        lo = np.empty(2 * n)
        up[0::2] = np.where(ap < C, -G - eps, -np.inf)
        up[1::2] = np.where(am > 0.0, -G + eps, -np.inf)
        lo[0::2] = np.where(ap > 0.0, -G - eps, np.inf)
        lo[1::2] = np.where(am < C, -G + eps, np.inf)
        iu = int(np.argmax(up))
        il = int(np.argmin(lo))
        i, i_plus, m = iu // 2, iu % 2 == 0, float(up[iu])
        j, j_plus, M = il // 2, il % 2 == 0, float(lo[il])
        gap = m - M
        if not np.isfinite(gap) or gap <= tol or iterations >= max_iter:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad < 1e-12:
            quad = 1e-12
        room_i = (C - ap[i]) if i_plus else am[i]
        room_j = ap[j] if j_plus else (C - am[j])
        t = min(gap / quad, room_i, room_j)
        # land exactly on the box bound when the step is clipped to it
        if i_plus:
            ap[i] = C if t == room_i else ap[i] + t
        else:
            am[i] = 0.0 if t == room_i else am[i] - t
        if j_plus:
            ap[j] = 0.0 if t == room_j else ap[j] - t
        else:
            am[j] = C if t == room_j else am[j] + t
        G += t * (K[i] - K[j])
        iterations += 1
        if record_objective:
            beta = ap - am
            dual = -(0.5 * float(beta @ G) - 0.5 * float(beta @ y)
                     + eps * float(ap.sum() + am.sum()))
            objectives.append(dual)
    if np.isfinite(m) and np.isfinite(M):
        bias = (m + M) / 2.0
    else:  # no feasible pair left; centre the tube on the residuals
        bias = float(np.mean(-G))
    gap = m - M if np.isfinite(m - M) else 0.0
    return ap - am, float(bias), iterations, float(gap), objectives
