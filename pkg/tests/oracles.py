"""Independent reference computations used by the tests.

These avoid the package's own code paths: enumeration, direct summation and
quadrature instead of prefix sums and closed forms.
"""

import itertools
import math

import numpy as np
from scipy import integrate, stats

from kmht import Gaussian, Uniform


def brute_hausdorff(a, b):
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if a.shape[0] == 1 and a.shape[1] > 1 and b.shape[1] == 1:
        a = a.T
    d = lambda p, q: math.sqrt(sum((u - v) ** 2 for u, v in zip(p, q)))
    ab = max(min(d(p, q) for q in b) for p in a)
    ba = max(min(d(p, q) for p in a) for q in b)
    return max(ab, ba)


def enumerate_excess(x, C, C0):
    tot = 0.0
    for xi in x:
        tot += min((c - xi) ** 2 for c in C) - min((c - xi) ** 2 for c in C0)
    return tot / len(x)


def order_stat_sign_predicate(v, i, j):
    """Comparison of split costs at i < j written with block means only."""
    n = len(v)
    left, mid, right = np.mean(v[:i]), np.mean(v[i:j]), np.mean(v[j:])
    return right - mid > math.sqrt(i * (n - i) / (j * (n - j))) * (mid - left)


def _density(dist, x):
    if isinstance(dist, Gaussian):
        return stats.norm.pdf(x, dist.mu, dist.sigma)
    if isinstance(dist, Uniform):
        return 1.0 / (dist.b - dist.a) if dist.a <= x < dist.b else 0.0
    a = abs(x)
    if a < 1.0:
        return 0.0
    return dist.alpha * a ** (-dist.alpha - 1.0) * (dist.p if x > 0 else 1.0 - dist.p)


def pointwise_population_excess(dist, C, C0):
    """E[min_c (c - X)^2 - min_c0 (c0 - X)^2] by quadrature of the pointwise integrand."""
    C, C0 = np.asarray(C, float), np.asarray(C0, float)

    def f(x):
        return (np.min((C - x) ** 2) - np.min((C0 - x) ** 2)) * _density(dist, x)

    # integrand is piecewise smooth; split at every kink and support edge
    kinks = sorted(
        set(((C[:, None] + C[None, :]) / 2).ravel()) | set(((C0[:, None] + C0[None, :]) / 2).ravel()) | {-1.0, 1.0, 0.0}
    )
    if isinstance(dist, Uniform):
        kinks = sorted(set(kinks) | {dist.a, dist.b})
    edges = [-math.inf, *kinks, math.inf]
    total = 0.0
    for u, v in zip(edges[:-1], edges[1:]):
        if v > u:
            total += integrate.quad(f, u, v, limit=400, epsabs=1e-11, epsrel=1e-11)[0]
    return total


def brute_kmeans(x, k, gamma):
    """Best contiguous partition by exhaustive split enumeration (split only between distinct values)."""
    x = sorted(x)
    n = len(x)
    cuts = [i for i in range(1, n) if x[i - 1] < x[i]]
    best = None
    for m in range(1, k + 1):
        for sp in itertools.combinations(cuts, m - 1):
            edges = (0, *sp, n)
            sizes = [b - a for a, b in zip(edges[:-1], edges[1:])]
            if gamma >= 1 and min(sizes) < gamma:
                continue
            val = -math.fsum(math.fsum(x[a:b]) ** 2 / (b - a) for a, b in zip(edges[:-1], edges[1:])) / n
            if best is None or val < best[0] - 1e-12 * max(1.0, abs(val)):
                best = (val, sp)
    return best
