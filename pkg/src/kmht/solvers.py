"""Exact 1D (balanced) k-means and companions.

Why dynamic programming is exact here: in one dimension every Voronoi
partition is a threshold partition, so every cluster is a contiguous block
of order statistics. A balance constraint only restricts block sizes, so the
balanced problem is a shortest path over block boundaries.

Blocks are scored by ``w(i, j) = -(S_j - S_i)**2 / (j - i)`` where ``S`` is the
prefix sum of the sorted sample. Summed over blocks and divided by ``n`` this
is the empirical excess distortion; it differs from the within-cluster sum of
squares by the constant ``sum x**2`` and never forms that (possibly huge) sum.
``w`` satisfies the quadrangle inequality, so the leftmost optimal split is
monotone in the block start and each DP layer can be filled by divide and
conquer in O(L log L) instead of O(L**2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from kmht.core import SolveReport, SortedSample, ThresholdPartition
from kmht.distributions import RandomStream
from kmht.errors import ConstraintError, DomainError

BRUTE_FORCE_MAX_N = 20
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BalanceConstraint:
    """Minimum cluster size as a function of n.

    ``mode`` is ``"absolute"`` (gamma), ``"linear"`` (ceil(alpha * n)) or
    ``"polylog"`` (ceil(log(n) ** exponent)).
    """

    mode: str = "absolute"
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("absolute", "linear", "polylog"):
            raise ValueError(f"unknown balance mode {self.mode!r}")
        if self.mode == "absolute" and (self.value < 0 or int(self.value) != self.value):
            raise ValueError("absolute gamma must be a nonnegative integer")
        if self.mode == "linear" and not 0.0 <= self.value < 1.0:
            raise ValueError("linear fraction must lie in [0, 1)")
        if self.mode == "polylog" and self.value < 0.0:
            raise ValueError("polylog exponent must be nonnegative")

    @classmethod
    def absolute(cls, gamma: int) -> "BalanceConstraint":
        return cls("absolute", gamma)

    @classmethod
    def linear(cls, alpha: float) -> "BalanceConstraint":
        return cls("linear", alpha)

    @classmethod
    def polylog(cls, exponent: float) -> "BalanceConstraint":
        return cls("polylog", exponent)

    def resolved(self, n: int) -> int:
        if self.mode == "absolute":
            return int(self.value)
        if self.mode == "linear":
            return int(math.ceil(self.value * n))
        if n <= 1:
            return 0
        return int(math.ceil(math.log(n) ** self.value))

    def to_json(self) -> dict:
        return {"mode": self.mode, "value": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> "BalanceConstraint":
        return cls(str(obj["mode"]), float(obj["value"]))


def _coerce_balance(bc: BalanceConstraint | int | None) -> BalanceConstraint:
    if bc is None:
        return BalanceConstraint()
    if isinstance(bc, BalanceConstraint):
        return bc
    return BalanceConstraint.absolute(int(bc))


def _check_feasible(n: int, k: int, gamma: int) -> None:
    if n < 1:
        raise ValueError("empty sample")
    if k < 1:
        raise ValueError("k must be at least 1")
    if gamma >= 1 and gamma * k > n:
        raise ConstraintError(f"infeasible balance: gamma={gamma}, k={k}, n={n}")


# --- DP kernels ------------------------------------------------------------

@njit(cache=True)
def _w(P, i, j):
    s = P[j] - P[i]
    return -(s * s) / (j - i)


@njit(cache=True)
def _layer_dc(P, cand, lo_col, g_prev, cmax, rmax):
    """Fill one DP layer by divide and conquer over rows 0..rmax.

    Row r starts a block at cand[r]; column c ends it at cand[c]. Valid
    columns of row r are lo_col[r]..cmax (a contiguous range whose lower end
    is non-decreasing in r).
    """
    L = cand.shape[0]
    out = np.full(L, np.inf)
    arg = np.full(L, -1, dtype=np.int64)
    if rmax < 0:
        return out, arg
    # explicit stack of (row_lo, row_hi, opt_lo, opt_hi)
    stack = np.empty((64 + 2 * L, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = rmax
    stack[0, 2] = lo_col[0]
    stack[0, 3] = cmax
    top = 1
    while top > 0:
        top -= 1
        rlo = stack[top, 0]
        rhi = stack[top, 1]
        olo = stack[top, 2]
        ohi = stack[top, 3]
        if rlo > rhi:
            continue
        mid = (rlo + rhi) // 2
        start = max(olo, lo_col[mid])
        best = np.inf
        best_c = start
        i = cand[mid]
        for c in range(start, ohi + 1):
            v = _w(P, i, cand[c]) + g_prev[c]
            if v < best:
                best = v
                best_c = c
        out[mid] = best
        arg[mid] = best_c
        stack[top, 0] = rlo
        stack[top, 1] = mid - 1
        stack[top, 2] = olo
        stack[top, 3] = best_c
        top += 1
        stack[top, 0] = mid + 1
        stack[top, 1] = rhi
        stack[top, 2] = best_c
        stack[top, 3] = ohi
        top += 1
    return out, arg


@njit(cache=True)
def _layer_baseline(P, cand, lo_col, g_prev, cmax, rmax):
    L = cand.shape[0]
    out = np.full(L, np.inf)
    arg = np.full(L, -1, dtype=np.int64)
    for r in range(rmax + 1):
        best = np.inf
        best_c = lo_col[r]
        i = cand[r]
        for c in range(lo_col[r], cmax + 1):
            v = _w(P, i, cand[c]) + g_prev[c]
            if v < best:
                best = v
                best_c = c
        out[r] = best
        arg[r] = best_c
    return out, arg


def _block_scores(P: np.ndarray, i: int, js: np.ndarray) -> np.ndarray:
    s = P[js] - P[i]
    return -(s * s) / (js - i)


class _Tableau:
    """Suffix DP: ``g[l][r]`` is the best score covering ``cand[r]:n`` with ``l`` blocks."""

    def __init__(self, s: SortedSample, gamma: int, method: str = "dc") -> None:
        n = s.n
        self.n = n
        self.P = np.ascontiguousarray(s.prefix_sum)
        self.cand = np.concatenate(([0], s.split_points(), [n])).astype(np.int64)
        self.g = max(gamma, 1)
        self.lo_col = np.searchsorted(self.cand, self.cand + self.g, side="left").astype(np.int64)
        self.method = method
        L = self.cand.size
        g1 = np.full(L, np.inf)
        ok = (n - self.cand) >= self.g
        ok[-1] = False
        rows = np.flatnonzero(ok)
        sums = self.P[n] - self.P[self.cand[rows]]
        g1[rows] = -(sums * sums) / (n - self.cand[rows])
        self.layers = [None, g1]

    def _cmax(self, layer: np.ndarray) -> int:
        finite = np.flatnonzero(np.isfinite(layer[:-1]))
        return int(finite[-1]) if finite.size else -1

    def layer(self, ell: int) -> np.ndarray:
        while len(self.layers) <= ell:
            prev = self.layers[-1]
            cmax = self._cmax(prev)
            L = self.cand.size
            if cmax < 0:
                self.layers.append(np.full(L, np.inf))
                continue
            rows = np.flatnonzero(self.lo_col[: L - 1] <= cmax)
            rmax = int(rows[-1]) if rows.size else -1
            kernel = _layer_dc if self.method == "dc" else _layer_baseline
            out, _ = kernel(self.P, self.cand, self.lo_col, prev, cmax, rmax)
            self.layers.append(out)
        return self.layers[ell]

    def best_with(self, m: int, tol: float) -> tuple[float, tuple[int, ...]] | None:
        """Optimal score with exactly ``m`` blocks and its lexicographically smallest splits."""
        cand, P = self.cand, self.P
        if m == 1:
            v = self.layers[1][0]
            return (float(v), ()) if np.isfinite(v) else None
        total = None
        splits: list[int] = []
        r = 0
        for rem in range(m, 1, -1):
            nxt = self.layer(rem - 1)
            cmax = self._cmax(nxt)
            lo = int(self.lo_col[r])
            if cmax < lo:
                return None
            cols = np.arange(lo, cmax + 1)
            vals = _block_scores(P, int(cand[r]), cand[cols]) + nxt[cols]
            best = vals.min()
            if not np.isfinite(best):
                return None
            if total is None:
                total = float(best)
            pick = int(np.flatnonzero(vals <= best + tol)[0])
            r = int(cols[pick])
            splits.append(int(cand[r]))
        return total, tuple(splits)


def _tie_tol(s: SortedSample) -> float:
    return _TIE_RTOL * max(1.0, float(s.prefix_sq[-1]))


def _midpoint(a: float, b: float) -> float:
    m = a + (b - a) / 2.0
    return m if a < m <= b else b


def _report(s: SortedSample, splits: Sequence[int], k: int, gamma: int, **meta) -> SolveReport:
    x = s.values
    edges = [0, *splits, s.n]
    centers, counts, sq_terms, sse = [], [], [], []
    for i, j in zip(edges[:-1], edges[1:]):
        block = x[i:j]
        mean = math.fsum(block) / (j - i)
        centers.append(mean)
        counts.append(j - i)
        tot = math.fsum(block)
        sq_terms.append(tot * tot / (j - i))
        sse.append(math.fsum((block - mean) ** 2))
    thresholds = tuple(_midpoint(float(x[i - 1]), float(x[i])) for i in splits)
    return SolveReport(
        partition=ThresholdPartition(thresholds),
        centers=tuple(centers),
        counts=tuple(counts),
        excess_distortion=-math.fsum(sq_terms) / s.n,
        distortion=math.fsum(sse) / s.n,
        gamma=gamma,
        split_indices=tuple(int(i) for i in splits),
        k=k,
        fewer_cells_than_k=len(centers) < k,
        meta=dict(meta),
    )


def _as_sample(s: SortedSample | Sequence[float] | np.ndarray) -> SortedSample:
    return s if isinstance(s, SortedSample) else SortedSample.from_values(s)


def exact_kmeans_1d(
    s: SortedSample | Sequence[float],
    k: int,
    bc: BalanceConstraint | int | None = None,
    *,
    method: str = "dc",
) -> SolveReport:
    """Global minimizer of empirical excess distortion over balanced threshold partitions.

    Every cell count ``m <= k`` is searched and the best kept; ties (up to a
    relative 1e-12 of ``sum x**2``) go to the lexicographically smallest
    vector of split indices. ``method="baseline"`` fills the DP layers by
    exhaustive O(L**2) scans instead of divide and conquer.
    """
    s = _as_sample(s)
    bc = _coerce_balance(bc)
    gamma = bc.resolved(s.n)
    _check_feasible(s.n, k, gamma)
    tol = _tie_tol(s)
    tab = _Tableau(s, gamma, method)
    best: tuple[float, tuple[int, ...]] | None = None
    for m in range(1, k + 1):
        got = tab.best_with(m, tol)
        if got is None:
            continue
        if best is None or got[0] < best[0] - tol or (got[0] <= best[0] + tol and got[1] < best[1]):
            best = got
    assert best is not None  # m = 1 is always feasible once gamma <= n
    if __debug__ and method == "dc" and k >= 3 and s.n <= 500:
        check = _Tableau(s, gamma, "baseline")
        for ell in range(2, k):
            a, b = tab.layer(ell), check.layer(ell)
            assert np.allclose(a, b, rtol=1e-9, atol=tol, equal_nan=True), "divide-and-conquer layer mismatch"
    return _report(s, best[1], k, gamma, solver="exact_dp", balance=bc.to_json())


def _rightassoc_score(P: np.ndarray, edges: Sequence[int]) -> float:
    # same association order as the suffix DP so equal partitions give equal bits
    total = 0.0
    first = True
    for i, j in reversed(list(zip(edges[:-1], edges[1:]))):
        s = P[j] - P[i]
        w = -(s * s) / (j - i)
        total = w if first else w + total
        first = False
    return total


def brute_force_kmeans_1d(
    s: SortedSample | Sequence[float], k: int, bc: BalanceConstraint | int | None = None
) -> SolveReport:
    """Exhaustive search over contiguous partitions (n <= 20); the DP's oracle."""
    s = _as_sample(s)
    if s.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={s.n} > {BRUTE_FORCE_MAX_N}")
    bc = _coerce_balance(bc)
    gamma = bc.resolved(s.n)
    _check_feasible(s.n, k, gamma)
    g = max(gamma, 1)
    P = s.prefix_sum
    splits_ok = [int(i) for i in s.split_points()]
    scored = []
    for m in range(1, k + 1):
        for combo in itertools.combinations(splits_ok, m - 1):
            edges = (0, *combo, s.n)
            if all(b - a >= g for a, b in zip(edges[:-1], edges[1:])):
                scored.append((_rightassoc_score(P, edges), combo))
    tol = _tie_tol(s)
    best_val = min(v for v, _ in scored)
    chosen = min(c for v, c in scored if v <= best_val + tol)
    return _report(s, chosen, k, gamma, solver="brute_force", balance=bc.to_json())


# --- general-d heuristic ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class LloydReport:
    """Output of ``lloyd_balanced_heuristic``; no optimality claim."""

    centers: np.ndarray
    labels: np.ndarray
    counts: tuple[int, ...]
    excess_distortion: float
    distortion: float
    gamma: int
    iterations: int
    objective_trace: tuple[float, ...]
    heuristic: bool = True

    def to_json(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "counts": list(self.counts),
            "excess_distortion": self.excess_distortion,
            "distortion": self.distortion,
            "gamma": self.gamma,
            "iterations": self.iterations,
            "heuristic": True,
        }


def _kmeanspp(x: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[gen.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        tot = d2.sum()
        idx = gen.integers(n) if tot <= 0 else int(np.searchsorted(np.cumsum(d2), gen.random() * tot, side="right"))
        idx = min(idx, n - 1)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _repair(x: np.ndarray, labels: np.ndarray, centers: np.ndarray, g: int) -> np.ndarray:
    """Move the cheapest donor point into each deficient cell until all counts reach g."""
    k = centers.shape[0]
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    while True:
        deficient = np.flatnonzero(counts < g)
        if deficient.size == 0:
            return labels
        target = int(deficient[0])
        donor_ok = counts[labels] > g
        donor_ok &= labels != target
        if not donor_ok.any():
            raise ConstraintError("repair step cannot satisfy the balance constraint")
        increase = d2[:, target] - d2[np.arange(x.shape[0]), labels]
        increase[~donor_ok] = np.inf
        i = int(np.argmin(increase))
        counts[labels[i]] -= 1
        counts[target] += 1
        labels[i] = target


def _partition_stats(x: np.ndarray, labels: np.ndarray, k: int, fallback: np.ndarray):
    centers = fallback.copy()
    counts = np.bincount(labels, minlength=k)
    excess, sse = [], []
    for l in range(k):
        members = x[labels == l]
        if members.shape[0]:
            centers[l] = members.mean(axis=0)
            excess.append(-members.shape[0] * float(centers[l] @ centers[l]))
            sse.append(float(((members - centers[l]) ** 2).sum()))
    n = x.shape[0]
    return centers, counts, math.fsum(excess) / n, math.fsum(sse) / n


def lloyd_balanced_heuristic(
    points: np.ndarray | Sequence,
    k: int,
    bc: BalanceConstraint | int | None = None,
    rng: RandomStream | None = None,
    max_iter: int = 100,
    *,
    n_init: int = 1,
    init: np.ndarray | None = None,
) -> LloydReport:
    """Balanced Lloyd iterations in any dimension.

    Alternates nearest-center assignment (followed by a greedy repair that
    fills deficient cells) with mean updates. An iteration is accepted only
    if the mean squared distortion does not increase. Best of ``n_init``
    restarts is returned.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    bc = _coerce_balance(bc)
    gamma = bc.resolved(n)
    _check_feasible(n, k, gamma)
    g = max(gamma, 0)
    gen = (rng or RandomStream(0)).generator()
    best: LloydReport | None = None
    for run in range(max(n_init, 1)):
        if init is not None and run == 0:
            centers = np.asarray(init, dtype=np.float64).reshape(k, -1).copy()
        else:
            centers = _kmeanspp(x, k, gen)
        labels = None
        trace: list[float] = []
        prev_obj = math.inf
        it = 0
        for it in range(1, max_iter + 1):
            d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
            new_labels = np.argmin(d2, axis=1)
            if g > 0:
                new_labels = _repair(x, new_labels, centers, g)
            new_centers, counts, excess, sse = _partition_stats(x, new_labels, k, centers)
            if sse > prev_obj:
                break
            stalled = labels is not None and np.array_equal(new_labels, labels)
            labels, centers, prev_obj = new_labels, new_centers, sse
            trace.append(sse)
            if stalled:
                break
        centers, counts, excess, sse = _partition_stats(x, labels, k, centers)
        report = LloydReport(
            centers=centers,
            labels=labels,
            counts=tuple(int(c) for c in counts),
            excess_distortion=excess,
            distortion=sse,
            gamma=gamma,
            iterations=it,
            objective_trace=tuple(trace),
        )
        if best is None or report.distortion < best.distortion:
            best = report
    return best


# --- naive two-center estimator for infinite-objective laws ----------------

@dataclass(frozen=True)
class HalflineReport:
    v: float
    score: float
    count: int
    beta: int


def naive_halfline_estimator(s: SortedSample | Sequence[float], beta: int) -> tuple[float, HalflineReport]:
    """Maximize ``v**2 * #{X_i in H_v}`` over data points ``v != 0`` with at least ``beta`` points in ``H_v``.

    ``H_v`` is ``[v, inf)`` for ``v > 0`` and ``(-inf, v]`` for ``v < 0``.
    """
    s = _as_sample(s)
    if not 1 <= beta <= s.n:
        raise DomainError(f"beta={beta} outside [1, n={s.n}]")
    x = s.values
    pos = x[x > 0.0]
    neg = x[x < 0.0]
    cand_v = np.concatenate((neg, pos))
    cnt = np.concatenate(
        (
            np.searchsorted(x, neg, side="right"),
            s.n - np.searchsorted(x, pos, side="left"),
        )
    )
    ok = cnt >= beta
    if not ok.any():
        raise DomainError(f"no halfline holds at least beta={beta} points")
    cand_v, cnt = cand_v[ok], cnt[ok]
    score = cand_v * cand_v * cnt
    top = score.max()
    tied = np.flatnonzero(score == top)
    # larger |v| first, then positive over negative
    pick = max(tied, key=lambda i: (abs(cand_v[i]), cand_v[i]))
    return float(cand_v[pick]), HalflineReport(float(cand_v[pick]), float(top), int(cnt[pick]), int(beta))
