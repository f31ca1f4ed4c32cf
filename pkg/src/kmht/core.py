"""Center sets, 1D threshold partitions and excess-distortion evaluators.

Excess distortion is always measured relative to a reference center set, so
it stays finite when only the first moment exists. For a partition the
reference is the single cell (center 0) and the value reduces to
``-sum_l P(cell_l) * mean_l**2``.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from kmht._numeric import prefix_sums
from kmht.distributions import Distribution


@dataclass(frozen=True, eq=False)
class SortedSample:
    """Sorted observations plus compensated prefix sums of x and x**2."""

    values: np.ndarray
    prefix_sum: np.ndarray
    prefix_sq: np.ndarray

    @classmethod
    def from_values(cls, xs: Iterable[float]) -> "SortedSample":
        v = np.sort(np.asarray(list(xs) if not isinstance(xs, np.ndarray) else xs, dtype=np.float64).ravel())
        if not np.all(np.isfinite(v)):
            raise ValueError("sample contains non-finite values")
        return cls(v, prefix_sums(v), prefix_sums(v * v))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def block_sum(self, i: int, j: int) -> float:
        return float(self.prefix_sum[j] - self.prefix_sum[i])

    def block_mean(self, i: int, j: int) -> float:
        return self.block_sum(i, j) / (j - i)

    def cost(self, i: int, j: int) -> float:
        """Sum of squared deviations of ``values[i:j]`` around their mean."""
        s = self.block_sum(i, j)
        return max(float(self.prefix_sq[j] - self.prefix_sq[i]) - s * s / (j - i), 0.0)

    def split_points(self) -> np.ndarray:
        """Indices ``i`` (0 < i < n) where a threshold can separate ``values[:i]`` from ``values[i:]``."""
        v = self.values
        return np.flatnonzero(v[1:] > v[:-1]) + 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x\n")
        for x in self.values.tolist():
            buf.write(f"{x!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SortedSample":
        rows = csv.DictReader(io.StringIO(text))
        if rows.fieldnames is None or "x" not in rows.fieldnames:
            raise ValueError("CSV must have a header column 'x'")
        return cls.from_values([float(r["x"]) for r in rows])


@dataclass(frozen=True, eq=False)
class CenterSet:
    """A nonempty finite set of points; 1D input is stored as shape ``(m, 1)``."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim <= 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] == 0:
            raise ValueError("a center set must be nonempty")
        pts = np.unique(pts, axis=0)
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, *xs: float) -> "CenterSet":
        return cls(np.asarray(xs, dtype=np.float64))

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def values(self) -> np.ndarray:
        """Sorted 1D coordinates."""
        if self.dim != 1:
            raise ValueError("values is only defined for 1D center sets")
        return self.points[:, 0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CenterSet) and self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )

    def __repr__(self) -> str:
        if self.dim == 1:
            return f"CenterSet({self.values.tolist()})"
        return f"CenterSet({self.points.tolist()})"

    def induced_partition(self) -> "ThresholdPartition":
        """Voronoi partition of a 1D center set: thresholds at midpoints."""
        v = self.values
        return ThresholdPartition(tuple(float(x) for x in (v[:-1] + v[1:]) / 2.0))


@dataclass(frozen=True)
class ThresholdPartition:
    """Cells ``(-inf, r1), [r1, r2), ..., [r_{m-1}, inf)``; boundaries belong to the right cell."""

    thresholds: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        t = tuple(float(x) for x in self.thresholds)
        if any(not b > a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", t)

    @property
    def n_cells(self) -> int:
        return len(self.thresholds) + 1

    def cells(self) -> list[tuple[float, float]]:
        edges = (-math.inf, *self.thresholds, math.inf)
        return list(zip(edges[:-1], edges[1:]))

    def assign(self, x: float) -> int:
        return bisect.bisect_right(self.thresholds, x)

    def assign_array(self, xs: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.thresholds), xs, side="right")


def assign(V: ThresholdPartition, x: float) -> int:
    """Index of the cell of ``V`` containing ``x``."""
    return V.assign(x)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Output of a 1D solver.

    ``centers[l]`` is the sample mean of cell ``l`` of ``partition``. The
    partition is the optimizer; the Voronoi partition of the centers may
    differ from it and is never substituted.
    """

    partition: ThresholdPartition
    centers: tuple[float, ...]
    counts: tuple[int, ...]
    excess_distortion: float
    distortion: float
    gamma: int
    split_indices: tuple[int, ...] = ()
    k: int = 0
    fewer_cells_than_k: bool = False
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def center_set(self) -> CenterSet:
        return CenterSet(np.asarray(self.centers))

    @property
    def empirical_excess_distortion(self) -> float:
        return self.excess_distortion

    def to_json(self) -> dict[str, Any]:
        out = {
            "thresholds": list(self.partition.thresholds),
            "centers": list(self.centers),
            "counts": list(self.counts),
            "excess_distortion": self.excess_distortion,
            "gamma": self.gamma,
            "distortion": self.distortion,
            "split_indices": list(self.split_indices),
            "k": self.k,
            "fewer_cells_than_k": self.fewer_cells_than_k,
        }
        out.update(self.meta)
        return out


def _as_center_set(C: CenterSet | Sequence[float] | np.ndarray) -> CenterSet:
    return C if isinstance(C, CenterSet) else CenterSet(np.asarray(C, dtype=np.float64))


def hausdorff_distance(A: CenterSet | Sequence, B: CenterSet | Sequence) -> float:
    """Max of the two directed max-min Euclidean distances."""
    a, b = _as_center_set(A).points, _as_center_set(B).points
    if a.shape[1] != b.shape[1]:
        raise ValueError("center sets live in different dimensions")
    diff = np.abs(a[:, None, :] - b[None, :, :])
    # scale before squaring so tiny gaps do not underflow to a zero distance
    scale = diff.max(axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    d = scale * np.sqrt(((diff / safe[..., None]) ** 2).sum(axis=-1))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _nearest(centers: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Nearest 1D center for each x (ties go to the right center)."""
    if centers.size == 1:
        return np.full(x.shape, centers[0])
    mids = (centers[:-1] + centers[1:]) / 2.0
    return centers[np.searchsorted(mids, x, side="right")]


def _as_sample(s: SortedSample | Iterable[float]) -> SortedSample:
    return s if isinstance(s, SortedSample) else SortedSample.from_values(s)


def empirical_excess_distortion_centers(s: SortedSample, C: CenterSet, C0: CenterSet) -> float:
    """(1/n) sum_i (min_c |c - X_i|**2 - min_c0 |c0 - X_i|**2)."""
    s = _as_sample(s)
    if s.n == 0:
        raise ValueError("empty sample")
    x = s.values
    c = _nearest(_as_center_set(C).values, x)
    c0 = _nearest(_as_center_set(C0).values, x)
    # (c - x)^2 - (c0 - x)^2 factored to avoid cancelling two huge squares
    diff = (c - c0) * (c + c0 - 2.0 * x)
    return math.fsum(diff) / s.n


def _cell_slices(s: SortedSample, V: ThresholdPartition) -> np.ndarray:
    edges = np.searchsorted(s.values, np.asarray(V.thresholds), side="left")
    return np.concatenate(([0], edges, [s.n])).astype(np.int64)


def empirical_excess_distortion_partition(s: SortedSample, V: ThresholdPartition) -> float:
    """-(1/n) sum_l n_l * mean_l**2; empty cells contribute 0."""
    s = _as_sample(s)
    if s.n == 0:
        raise ValueError("empty sample")
    idx = _cell_slices(s, V)
    terms = []
    for i, j in zip(idx[:-1], idx[1:]):
        if j > i:
            tot = s.block_sum(i, j)
            terms.append(tot * tot / (j - i))
    return -math.fsum(terms) / s.n


def empirical_excess_distortion_partition_sqdev(s: SortedSample, V: ThresholdPartition) -> float:
    """Same quantity as ``empirical_excess_distortion_partition``, summed pointwise.

    Uses (1/n) sum_i (|m(cell_i) - X_i|**2 - |X_i|**2); kept as an independent route.
    """
    s = _as_sample(s)
    x = s.values
    cell = V.assign_array(x)
    means = np.zeros(V.n_cells)
    for l in range(V.n_cells):
        members = x[cell == l]
        if members.size:
            means[l] = math.fsum(members) / members.size
    m = means[cell]
    return math.fsum(m * (m - 2.0 * x)) / s.n


def population_excess_distortion_partition(dist: Distribution, V: ThresholdPartition) -> float:
    """-sum_l P(X in cell_l) * E[X | cell_l]**2 over cells of positive mass."""
    total = []
    for a, b in V.cells():
        mass = dist.interval_prob(a, b)
        if mass > 0.0:
            m = dist.interval_moment(a, b)
            total.append(m * m / mass)
    return -math.fsum(total)


def _excess_vs_origin(dist: Distribution, C: CenterSet) -> float:
    # E[min_c (c - X)^2 - X^2] = sum over Voronoi cells of P*c^2 - 2*c*E[X; cell]
    c = C.values
    terms = []
    for center, (a, b) in zip(c, C.induced_partition().cells()):
        mass = dist.interval_prob(a, b)
        if mass > 0.0:
            terms.append(mass * center * center - 2.0 * center * dist.interval_moment(a, b))
    return math.fsum(terms)


def population_excess_distortion_centers(dist: Distribution, C: CenterSet, C0: CenterSet | None = None) -> float:
    """E[min_c |c - X|**2 - min_c0 |c0 - X|**2]; ``C0`` defaults to ``{0}``."""
    C = _as_center_set(C)
    value = _excess_vs_origin(dist, C)
    if C0 is None:
        return value
    C0 = _as_center_set(C0)
    if C0 == C:
        return 0.0
    return value - _excess_vs_origin(dist, C0)
