"""Population-level analysis for k = 2 in one dimension.

The landscape ``D(r)`` is the excess distortion (relative to ``{0}``) of the
two-cell partition ``{(-inf, r), [r, inf)}``. For the signed Pareto(2) laws
it has closed forms and the optimal value, attainment and argmin set are
known exactly; for every other law they are read off a grid and labelled as
numeric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import optimize

from kmht.core import (
    CenterSet,
    SortedSample,
    ThresholdPartition,
    empirical_excess_distortion_partition,
    hausdorff_distance,
    population_excess_distortion_partition,
)
from kmht.distributions import Distribution, Empirical, Gaussian, Uniform, _SignedPareto
from kmht.errors import DomainError

_ARGMIN_TOL = 1e-9
_LIMIT_TOL = 1e-6
HILL_TOP_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class LandscapeReport:
    grid: np.ndarray
    values: np.ndarray
    infimum: float
    attained: bool
    argmin_set: tuple[tuple[float, float], ...]
    case_label: str
    method: str

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.grid.tolist(), self.values.tolist()))

    def to_json(self) -> dict[str, Any]:
        return {
            "infimum": self.infimum if math.isfinite(self.infimum) else "-inf",
            "attained": self.attained,
            "argmin_set": [list(iv) for iv in self.argmin_set],
            "case_label": self.case_label,
            "method": self.method,
            "grid_min": float(self.values.min()),
        }

    def to_csv(self) -> str:
        lines = ["r,D"]
        lines += [f"{r!r},{d!r}" for r, d in zip(self.grid.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"


def _is_pareto2(dist: Distribution) -> bool:
    return isinstance(dist, _SignedPareto) and dist.alpha == 2.0


def _pareto2_value(p: float, r: float) -> float | None:
    # right-cell / left-cell closed forms; None when one cell is null
    if -1.0 <= r <= 1.0:
        return -4.0 if 0.0 < p < 1.0 else None
    if r > 1.0:
        den = 1.0 - p / (r * r)
        if den <= 0.0:
            return None
        return -4.0 * p - 4.0 * ((2.0 * p - 1.0) - p / r) ** 2 / den
    q = 1.0 - p
    den = 1.0 - q / (r * r)
    if den <= 0.0:
        return None
    return -4.0 * q - 4.0 * ((2.0 * p - 1.0) - q / r) ** 2 / den


def landscape_value(dist: Distribution, r: float, *, closed_form: bool = True) -> float:
    """D(r) for the two-cell threshold partition at ``r``."""
    if closed_form and _is_pareto2(dist):
        v = _pareto2_value(dist.p, r)
        if v is not None:
            return v
    return population_excess_distortion_partition(dist, ThresholdPartition((r,)))


def pareto2_infimum(p: float) -> float:
    """Optimal k=2 excess distortion of the signed Pareto(2) law with positive mass p."""
    return -4.0 * max(1.0, max(p, 1.0 - p) + (2.0 * p - 1.0) ** 2)


def _runs(grid: np.ndarray, mask: np.ndarray) -> tuple[tuple[float, float], ...]:
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return ()
    start = prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            out.append((float(grid[start]), float(grid[prev])))
            start = i
        prev = i
    out.append((float(grid[start]), float(grid[prev])))
    return tuple(out)


def _tail_limit(dist: Distribution, sign: float) -> float:
    """Numeric r -> +/-inf limit of D(r); -inf if it keeps diverging."""
    far = [sign * 10.0**e for e in (6, 9, 12)]
    vals = [landscape_value(dist, r) for r in far]
    if vals[2] < vals[1] - 1.0 and vals[1] < vals[0] - 1.0:
        return -math.inf
    return vals[2]


def landscape_1d(dist: Distribution, r_grid: Sequence[float] | np.ndarray) -> LandscapeReport:
    grid = np.asarray(r_grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonempty and strictly increasing")
    values = np.array([landscape_value(dist, float(r)) for r in grid])
    gmin = float(values.min())

    if _is_pareto2(dist):
        p = dist.p
        inf = pareto2_infimum(p)
        attained = 0.25 <= p <= 0.75
        argmin = ((-1.0, 1.0),) if attained else ()
        return LandscapeReport(grid, values, inf, attained, argmin, "i" if attained else "ii", "analytic")

    if isinstance(dist, _SignedPareto):
        if dist.alpha < 2.0:
            # tail heavier than Par(2): the optimal value is -inf
            return LandscapeReport(grid, values, -math.inf, False, (), "iii", "analytic")
        # finite variance: optimal centers exist; locate them on the grid
        return LandscapeReport(grid, values, gmin, True, _runs(grid, values <= gmin + _ARGMIN_TOL), "i", "numeric")

    # generic path: grid minimum plus boundary behaviour
    i_min = int(np.argmin(values))
    at_edge = i_min in (0, grid.size - 1) and grid.size > 1
    if at_edge:
        nb = 1 if i_min == 0 else grid.size - 2
        still_falling = values[i_min] < values[nb]
        limit = _tail_limit(dist, -1.0 if i_min == 0 else 1.0)
        if still_falling and (limit == -math.inf or limit < gmin - _LIMIT_TOL or abs(limit - gmin) <= _LIMIT_TOL):
            case = "iii" if limit == -math.inf else "ii"
            return LandscapeReport(grid, values, min(limit, gmin), False, (), case, "numeric")
    return LandscapeReport(grid, values, gmin, True, _runs(grid, values <= gmin + _ARGMIN_TOL), "i", "numeric")


def default_grid(dist: Distribution, size: int = 4001) -> np.ndarray:
    if isinstance(dist, Gaussian):
        return dist.mu + dist.sigma * np.linspace(-8.0, 8.0, size)
    if isinstance(dist, Uniform):
        return np.linspace(dist.a, dist.b, size)
    if isinstance(dist, Empirical):
        v = np.unique(dist.values)
        return v if v.size > 1 else np.array([v[0]])
    half = np.logspace(0.0, 4.0, size // 2)
    return np.concatenate((-half[::-1], [0.0], half))


def _refine(dist: Distribution, grid: np.ndarray, i: int) -> float:
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if hi <= lo:
        return float(grid[i])
    res = optimize.minimize_scalar(
        lambda r: landscape_value(dist, r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    r = float(res.x) if res.fun <= landscape_value(dist, grid[i]) else float(grid[i])
    # D is flat near its minimum, so polish with the centroid fixed point r = (m_left + m_right) / 2
    for _ in range(200):
        try:
            nxt = 0.5 * (dist.conditional_mean(-math.inf, r) + dist.conditional_mean(r, math.inf))
        except DomainError:
            break
        if not lo <= nxt <= hi or landscape_value(dist, nxt) > landscape_value(dist, r) + 1e-15:
            break
        if nxt == r:
            break
        r = nxt
    return r


def _optimal_thresholds(dist: Distribution, r_grid=None) -> tuple[LandscapeReport, list[float]]:
    grid = default_grid(dist) if r_grid is None else np.asarray(r_grid, dtype=np.float64)
    rep = landscape_1d(dist, grid)
    if rep.case_label != "i":
        return rep, []
    if rep.method == "analytic":
        return rep, [0.5 * (a + b) for a, b in rep.argmin_set]
    rs = []
    for a, b in rep.argmin_set:
        if a == b:
            i = int(np.searchsorted(grid, a))
            rs.append(_refine(dist, grid, i) if not isinstance(dist, Empirical) else a)
        else:
            rs.append(0.5 * (a + b))
    return rep, rs


def population_centers_k2(dist: Distribution, r_grid: Sequence[float] | None = None) -> tuple[CenterSet, ...]:
    """All optimal two-center sets; an empty tuple means none exist."""
    if isinstance(dist, Empirical):
        from kmht.solvers import exact_kmeans_1d

        return (exact_kmeans_1d(dist.values, 2, 0).center_set,)
    _, rs = _optimal_thresholds(dist, r_grid)
    out: list[CenterSet] = []
    for r in rs:
        cells = [(a, b) for a, b in ThresholdPartition((r,)).cells() if dist.interval_prob(a, b) > 0.0]
        cs = CenterSet(np.array([dist.conditional_mean(a, b) for a, b in cells]))
        if all(hausdorff_distance(cs, prev) > 1e-9 for prev in out):
            out.append(cs)
    return tuple(out)


def alpha0_k2(dist: Distribution, r_grid: Sequence[float] | None = None) -> float:
    """Largest smallest-cell mass over optimal two-cell partitions."""
    if isinstance(dist, Empirical):
        from kmht.solvers import exact_kmeans_1d

        return min(exact_kmeans_1d(dist.values, 2, 0).counts) / dist.values.size
    rep, rs = _optimal_thresholds(dist, r_grid)
    if rep.case_label != "i":
        raise DomainError(f"no optimal centers (case {rep.case_label})")
    best = 0.0
    intervals = rep.argmin_set if rep.method == "analytic" else tuple((r, r) for r in rs)
    for a, b in intervals:
        cands = [a, b]
        lo_mass, hi_mass = dist.cdf_left(a), dist.cdf_left(b)
        if lo_mass < 0.5 < hi_mass:
            # the median maximizes min(F, 1 - F); bisect for it inside [a, b]
            cands.append(optimize.brentq(lambda r: dist.cdf_left(r) - 0.5, a, b, xtol=1e-14))
        for r in cands:
            f = dist.cdf_left(r)
            best = max(best, min(f, 1.0 - f))
    return best


@dataclass(frozen=True)
class TailDiagnostic:
    sup_t_stat: float
    hill_index: float
    hill_se: float
    k_top: int
    classification: str

    def to_json(self) -> dict[str, Any]:
        hill = self.hill_index if math.isfinite(self.hill_index) else "inf"
        se = self.hill_se if math.isfinite(self.hill_se) else "inf"
        return {
            "sup_t_stat": self.sup_t_stat,
            "hill_index": hill,
            "hill_se": se,
            "k_top": self.k_top,
            "classification": self.classification,
        }


def tail_diagnostic(s: SortedSample | Sequence[float]) -> TailDiagnostic:
    """Tail check for whether a law can have finite optimal excess distortion.

    Finite optimal value requires P(|X| >= t) <= C t**-2, so ``sup t**2 * tail``
    is reported together with a Hill estimate of the tail index.
    """
    x = s.values if isinstance(s, SortedSample) else np.asarray(s, dtype=np.float64)
    n = x.size
    if n < 10:
        raise ValueError("tail diagnostic needs at least 10 observations")
    a = np.sort(np.abs(x))
    count_ge = n - np.searchsorted(a, a, side="left")
    sup_stat = float(np.max(a * a * count_ge / n))

    k_top = max(2, int(HILL_TOP_FRACTION * n))
    k_top = min(k_top, n - 1)
    base = a[n - k_top - 1]
    if base <= 0.0:
        hill, se = math.nan, math.nan
    else:
        xi = float(np.mean(np.log(a[n - k_top:] / base)))
        hill = math.inf if xi <= 0.0 else 1.0 / xi
        se = hill / math.sqrt(k_top)
    heavy = math.isfinite(hill) and (2.0 - hill) > 2.0 * se
    return TailDiagnostic(
        sup_t_stat=sup_stat,
        hill_index=hill,
        hill_se=se,
        k_top=k_top,
        classification="infinite_objective_plausible" if heavy else "finite_objective_plausible",
    )


def uniform_deviation(s: SortedSample, dist: Distribution, V: ThresholdPartition) -> float:
    """max(|Dn(V) - D(V)|, sum_cells P(cell) * (sample mean - population mean)**2)."""
    s = s if isinstance(s, SortedSample) else SortedSample.from_values(s)
    gap_terms = []
    for a, b in V.cells():
        mass = dist.interval_prob(a, b)
        if not mass > 0.0:
            raise DomainError(f"cell [{a}, {b}) has zero population mass")
        i = int(np.searchsorted(s.values, a, side="left"))
        j = int(np.searchsorted(s.values, b, side="left"))
        emp = math.fsum(s.values[i:j]) / (j - i) if j > i else 0.0
        pop = dist.interval_moment(a, b) / mass
        gap_terms.append(mass * (emp - pop) ** 2)
    dist_gap = abs(empirical_excess_distortion_partition(s, V) - population_excess_distortion_partition(dist, V))
    return max(dist_gap, math.fsum(gap_terms))


def center_split(C: CenterSet | Sequence[float], threshold: float) -> tuple[CenterSet | None, CenterSet | None]:
    """Split centers into bounded (``|c| <= threshold``) and diverging parts; empty parts are None."""
    if not threshold > 0.0:
        raise ValueError("threshold must be positive")
    C = C if isinstance(C, CenterSet) else CenterSet(np.asarray(C, dtype=np.float64))
    norms = np.sqrt((C.points**2).sum(axis=1))
    near, far = C.points[norms <= threshold], C.points[norms > threshold]
    return (CenterSet(near) if len(near) else None, CenterSet(far) if len(far) else None)
