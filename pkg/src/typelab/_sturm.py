"""Inertia counting and bisection for the scaled tridiagonal pencil.

The discrete operator is described by per-node conductance ratios
``m[i] = c_{i-1/2} / b_i`` and ``p[i] = c_{i+1/2} / b_i`` (face conductance
over nodal mass) plus an optional nodal potential ``v``.  The pivot
recurrence is written in "excess conductance" form, which involves only
sums and harmonic combinations of positive numbers until the shift enters.
That keeps the count relatively accurate for eigenvalues many orders of
magnitude below the matrix norm.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_TINY = 1e-300


@njit(cache=True, nogil=True)
def sturm_count(m, p, v, sigma):
    """Number of eigenvalues of the pencil strictly below ``sigma``."""
    n = m.shape[0]
    e = m[0] + v[0] - sigma
    count = 0
    d = p[0] + e
    if d < 0.0:
        count += 1
    for i in range(1, n):
        if d == 0.0:
            d = _TINY * (p[i - 1] + 1.0)
        e = m[i] * (e / d) + v[i] - sigma
        d = p[i] + e
        if d < 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def smallest_eigenvalue(m, p, v, lo, hi, rtol):
    """Geometric bisection for the smallest eigenvalue inside ``(lo, hi]``.

    Requires ``count(lo) == 0`` and ``count(hi) >= 1``; ``lo`` must be > 0.
    """
    for _ in range(400):
        if hi - lo <= rtol * hi:
            break
        mid = np.sqrt(lo * hi)
        if not (lo < mid < hi):
            mid = 0.5 * (lo + hi)
        if sturm_count(m, p, v, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def gershgorin_upper(m, p, v):
    off_left = np.sqrt(m[1:] * p[:-1])
    bound = m + p + v
    bound[1:] += off_left
    bound[:-1] += off_left
    return float(bound.max())


def lowest(m, p, v, guess=None, rtol=1e-14):
    """Smallest eigenvalue of the pencil, bracketed from ``guess`` when given."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    hi = gershgorin_upper(m, p, v) * (1.0 + 1e-12) + 1e-300
    lo = 1e-300
    if guess is not None and guess > 0.0:
        g_lo, g_hi = guess * 0.5, guess * 2.0
        for _ in range(8):
            if sturm_count(m, p, v, g_lo) == 0:
                lo = max(lo, g_lo)
                break
            hi = min(hi, g_lo)
            g_lo *= 1e-2
        if g_hi < hi and sturm_count(m, p, v, g_hi) >= 1:
            hi = g_hi
    return float(smallest_eigenvalue(m, p, v, lo, hi, rtol))
