"""Compensated prefix sums.

Pareto samples span many orders of magnitude, so plain cumulative sums lose
the small values next to a single huge one. Neumaier's variant of Kahan
summation keeps the running error term and folds it back in at every step.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _neumaier_cumsum(x):
    n = x.shape[0]
    out = np.empty(n + 1)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for i in range(n):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i + 1] = s + comp
    return out


def prefix_sums(x: np.ndarray) -> np.ndarray:
    """Return ``[0, x0, x0+x1, ...]`` (length ``n + 1``) with compensated rounding."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _neumaier_cumsum(x)
