"""Seeded simulation drivers.

Each seed owns one RandomStream; all checkpoints of a seed are prefixes of a
single batch of ``max(n_schedule)`` draws, so the trajectory at checkpoint n
sees exactly the first n observations.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from kmht.core import (
    CenterSet,
    SortedSample,
    empirical_excess_distortion_centers,
    hausdorff_distance,
    population_excess_distortion_centers,
)
from kmht.distributions import Distribution, RandomStream, SymmetricPareto, from_json as dist_from_json
from kmht.errors import ConstraintError, DomainError
from kmht.population import alpha0_k2, landscape_1d, population_centers_k2
from kmht.solvers import BalanceConstraint, exact_kmeans_1d, naive_halfline_estimator

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (0,)
SEED_ENV = "KMHT_SEED"


def geometric_schedule(n_max: int, ratio: float = 1.2, n_min: int = 1) -> tuple[int, ...]:
    """Distinct values of ceil(ratio**j) in [n_min, n_max], always ending at n_max."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    out = []
    j = 0
    while True:
        n = math.ceil(ratio**j)
        if n > n_max:
            break
        if n >= n_min and (not out or n > out[-1]):
            out.append(n)
        j += 1
    if not out or out[-1] != n_max:
        out.append(n_max)
    return tuple(out)


def decade_schedule(n_max: int, n_min: int = 100) -> tuple[int, ...]:
    out = []
    n = n_min
    while n <= n_max:
        out.append(n)
        n *= 10
    return tuple(out)


def seeds_from_env(default: Sequence[int] = DEFAULT_SEEDS) -> tuple[int, ...]:
    raw = os.environ.get(SEED_ENV, "").strip()
    if not raw:
        return tuple(default)
    try:
        return tuple(int(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ValueError(f"{SEED_ENV} must be a list of integers, got {raw!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    dist: Distribution
    k: int = 2
    balance: BalanceConstraint = field(default_factory=lambda: BalanceConstraint.absolute(0))
    n_schedule: tuple[int, ...] = (10,)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    jump_multiplier: float = 0.1
    output_path: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        sched = tuple(int(n) for n in self.n_schedule)
        if not sched or sched[0] < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be a nonempty strictly increasing list of positive counts")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.jump_multiplier > 0:
            raise ValueError("jump_multiplier must be positive")
        object.__setattr__(self, "n_schedule", sched)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def n_max(self) -> int:
        return self.n_schedule[-1]

    def to_json(self) -> dict[str, Any]:
        # output_path and workers do not change results, so they stay out of the digest
        return {
            "dist": self.dist.to_json(),
            "k": self.k,
            "balance": self.balance.to_json(),
            "n_schedule": list(self.n_schedule),
            "seeds": list(self.seeds),
            "jump_multiplier": self.jump_multiplier,
        }

    def digest(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ExperimentConfig":
        obj = dict(obj)
        if "dist" not in obj:
            raise ValueError("config needs a 'dist' entry")
        kw: dict[str, Any] = {"dist": dist_from_json(obj.pop("dist"))}
        if "balance" in obj:
            kw["balance"] = BalanceConstraint.from_json(obj.pop("balance"))
        if "n_schedule" in obj:
            kw["n_schedule"] = tuple(obj.pop("n_schedule"))
            obj.pop("n_max", None)
        elif "n_max" in obj:
            kw["n_schedule"] = geometric_schedule(int(obj.pop("n_max")), float(obj.pop("ratio", 1.2)))
        if "seeds" in obj:
            kw["seeds"] = tuple(obj.pop("seeds"))
        else:
            kw["seeds"] = seeds_from_env()
        for key in ("k", "workers"):
            if key in obj:
                kw[key] = int(obj.pop(key))
        if "jump_multiplier" in obj:
            kw["jump_multiplier"] = float(obj.pop("jump_multiplier"))
        if "output_path" in obj:
            kw["output_path"] = obj.pop("output_path")
        obj.pop("ratio", None)
        if obj:
            raise ValueError(f"unknown config keys: {sorted(obj)}")
        return cls(**kw)


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    n: int
    centers: tuple[float, ...]
    empirical_excess_distortion: float
    population_excess_distortion_of_centers: float
    hausdorff_to_target: float | None
    jump_flag: bool
    counts: tuple[int, ...] = ()
    gamma: int = 0

    @property
    def max_abs_center(self) -> float:
        return max(abs(c) for c in self.centers)

    @property
    def extreme_center(self) -> float:
        return max(self.centers, key=abs)

    @property
    def extreme_count(self) -> int:
        """Sample count in the cell of the largest-magnitude center."""
        i = max(range(len(self.centers)), key=lambda j: abs(self.centers[j]))
        return self.counts[i]


def jump_scale(n: int) -> float:
    return math.sqrt(n) / math.log(n)


def is_jump(max_abs: float, n: int, multiplier: float) -> bool:
    return n >= 3 and max_abs >= multiplier * jump_scale(n)


def _draws(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    return cfg.dist.sample(cfg.n_max, RandomStream(seed))


def _seed_trajectory(cfg: ExperimentConfig, seed: int, target: CenterSet | None) -> list[TrajectoryRecord]:
    x = _draws(cfg, seed)
    out = []
    for n in cfg.n_schedule:
        s = SortedSample.from_values(x[:n])
        try:
            rep = exact_kmeans_1d(s, cfg.k, cfg.balance)
        except ConstraintError as exc:
            log.info("seed %d, n=%d skipped: %s", seed, n, exc)
            continue
        C = rep.center_set
        out.append(
            TrajectoryRecord(
                seed=seed,
                n=n,
                centers=rep.centers,
                empirical_excess_distortion=rep.excess_distortion,
                population_excess_distortion_of_centers=population_excess_distortion_centers(cfg.dist, C),
                hausdorff_to_target=None if target is None else hausdorff_distance(C, target),
                jump_flag=is_jump(max(abs(c) for c in rep.centers), n, cfg.jump_multiplier),
                counts=rep.counts,
                gamma=rep.gamma,
            )
        )
    return out


def _map_seeds(cfg: ExperimentConfig, fn: Callable, *args) -> list:
    """Run ``fn(cfg, seed, *args)`` for every seed; results come back in seed order."""
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(fn, cfg, seed, *args) for seed in cfg.seeds]
            return [f.result() for f in futures]
    return [fn(cfg, seed, *args) for seed in cfg.seeds]


def run_trajectory(cfg: ExperimentConfig, target: CenterSet | None = None) -> list[TrajectoryRecord]:
    per_seed = _map_seeds(cfg, _seed_trajectory, target)
    return [rec for recs in per_seed for rec in recs]


# --- serialization ---------------------------------------------------------

def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


def records_to_csv(records: Sequence[TrajectoryRecord], k: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "n", *[f"center_{i + 1}" for i in range(k)], "emp_excess", "pop_excess", "dh_target", "jump_flag"])
    for r in records:
        cs = [_fmt(c) for c in r.centers] + [""] * (k - len(r.centers))
        w.writerow(
            [
                r.seed,
                r.n,
                *cs,
                _fmt(r.empirical_excess_distortion),
                _fmt(r.population_excess_distortion_of_centers),
                _fmt(r.hausdorff_to_target),
                int(r.jump_flag),
            ]
        )
    return buf.getvalue()


def _jsonable(x: Any) -> Any:
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    return x


def summary_to_json(summary: dict[str, Any]) -> str:
    return json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n"


def write_outputs(cfg: ExperimentConfig, records: Sequence[TrajectoryRecord], summary: dict[str, Any], k: int) -> tuple[Path, Path] | None:
    """Write ``<output_path>.records.csv`` and ``<output_path>.summary.json``."""
    if not cfg.output_path:
        return None
    base = Path(cfg.output_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    rec_path = base.with_name(base.name + ".records.csv")
    sum_path = base.with_name(base.name + ".summary.json")
    rec_path.write_text(records_to_csv(records, k))
    sum_path.write_text(summary_to_json(summary))
    return rec_path, sum_path


@dataclass
class ExperimentResult:
    records: list[TrajectoryRecord]
    summary: dict[str, Any]
    k: int

    def records_csv(self) -> str:
        return records_to_csv(self.records, self.k)

    def summary_json(self) -> str:
        return summary_to_json(self.summary)


def _by_seed(records: Sequence[TrajectoryRecord]) -> dict[int, list[TrajectoryRecord]]:
    out: dict[int, list[TrajectoryRecord]] = {}
    for r in records:
        out.setdefault(r.seed, []).append(r)
    return out


def _median_by_n(records: Sequence[TrajectoryRecord], value: Callable[[TrajectoryRecord], float]) -> dict[int, float]:
    groups: dict[int, list[float]] = {}
    for r in records:
        v = value(r)
        if v is not None:
            groups.setdefault(r.n, []).append(v)
    return {n: statistics.median(vs) for n, vs in sorted(groups.items())}


def _finish(name: str, cfg: ExperimentConfig, records, per_seed, aggregate, k: int) -> ExperimentResult:
    summary = {"experiment": name, "config_digest": cfg.digest(), "per_seed": per_seed, "aggregate": aggregate}
    write_outputs(cfg, records, summary, k)
    return ExperimentResult(list(records), summary, k)


# --- experiments -----------------------------------------------------------

def experiment_inconsistency(cfg: ExperimentConfig) -> ExperimentResult:
    """Unbalanced solves: how often does a center jump to scale sqrt(n)/log n?"""
    if cfg.balance.resolved(cfg.n_max) != 0 or cfg.balance.mode != "absolute":
        raise ValueError("the inconsistency experiment runs without a balance constraint")
    records = run_trajectory(cfg)
    per_seed = []
    for seed, recs in _by_seed(records).items():
        jumps = [r for r in recs if r.jump_flag]
        ratios = [r.max_abs_center / jump_scale(r.n) for r in recs if r.n >= 3]
        per_seed.append(
            {
                "seed": seed,
                "n_jumps": len(jumps),
                "jump_n": [r.n for r in jumps],
                "max_ratio": max(ratios) if ratios else None,
                "jumps_isolated": all(r.extreme_count == 1 for r in jumps),
                "jumps_positive": all(r.extreme_center > 0 for r in jumps),
            }
        )
    ratios = [p["max_ratio"] for p in per_seed if p["max_ratio"] is not None]
    aggregate = {
        "n_seeds": len(per_seed),
        "fraction_with_jump": sum(p["n_jumps"] > 0 for p in per_seed) / len(per_seed) if per_seed else 0.0,
        "total_jumps": sum(p["n_jumps"] for p in per_seed),
        "max_ratio": max(ratios) if ratios else None,
        "all_jumps_isolated": all(p["jumps_isolated"] for p in per_seed),
        "all_jumps_positive": all(p["jumps_positive"] for p in per_seed),
    }
    return _finish("inconsistency", cfg, records, per_seed, aggregate, cfg.k)


def balanced_centers_target(dist: Distribution) -> CenterSet:
    if isinstance(dist, SymmetricPareto) and dist.alpha == 2.0:
        return CenterSet.of(-2.0, 2.0)
    found = population_centers_k2(dist)
    if not found:
        raise DomainError("the law has no optimal two-center set")
    return found[0]


def experiment_balanced_centers(cfg: ExperimentConfig, target: CenterSet | None = None) -> ExperimentResult:
    """Linear-fraction balance: Hausdorff distance of the centers to the population optimum."""
    if cfg.balance.mode != "linear":
        raise ValueError("the balanced-centers experiment needs a linear balance constraint")
    if cfg.k != 2 and target is None:
        raise ValueError("a target center set is required when k != 2")
    target = balanced_centers_target(cfg.dist) if target is None else target
    if cfg.k == 2:
        a0 = alpha0_k2(cfg.dist)
        if cfg.balance.value >= a0:
            warnings.warn(f"balance fraction {cfg.balance.value} is not below alpha0 = {a0}", stacklevel=2)
    records = run_trajectory(cfg, target)
    per_seed = [
        {"seed": seed, "final_n": recs[-1].n, "final_dh": recs[-1].hausdorff_to_target}
        for seed, recs in _by_seed(records).items()
    ]
    med = _median_by_n(records, lambda r: r.hausdorff_to_target)
    aggregate = {
        "target": target.values.tolist(),
        "median_dh_by_n": {str(n): v for n, v in med.items()},
        "final_median_dh": statistics.median(p["final_dh"] for p in per_seed) if per_seed else None,
    }
    return _finish("balanced-centers", cfg, records, per_seed, aggregate, cfg.k)


def experiment_balanced_distortion(cfg: ExperimentConfig, infimum: float | None = None) -> ExperimentResult:
    """Population excess distortion of the balanced empirical centers against the optimal value."""
    if infimum is None:
        if cfg.k != 2:
            raise ValueError("pass the optimal value explicitly when k != 2")
        infimum = landscape_1d(cfg.dist, np.array([0.0])).infimum
    records = run_trajectory(cfg)
    per_seed = []
    for seed, recs in _by_seed(records).items():
        gaps = [r.population_excess_distortion_of_centers - infimum for r in recs]
        per_seed.append(
            {
                "seed": seed,
                "final_n": recs[-1].n,
                "final_pop_excess": recs[-1].population_excess_distortion_of_centers,
                "max_gap": max(gaps),
            }
        )
    final = statistics.median(p["final_pop_excess"] for p in per_seed) if per_seed else None
    aggregate = {
        "infimum": infimum,
        "final_median_pop_excess": final,
        "final_median_gap": None if final is None else final - infimum,
        "median_pop_excess_by_n": {
            str(n): v for n, v in _median_by_n(records, lambda r: r.population_excess_distortion_of_centers).items()
        },
        "max_gap": max((p["max_gap"] for p in per_seed), default=None),
    }
    return _finish("balanced-distortion", cfg, records, per_seed, aggregate, cfg.k)


def beta_schedule(n: int) -> int:
    return math.ceil(math.log(n) ** 2)


def _seed_naive(cfg: ExperimentConfig, seed: int) -> list[TrajectoryRecord]:
    x = _draws(cfg, seed)
    out = []
    for n in cfg.n_schedule:
        s = SortedSample.from_values(x[:n])
        beta = beta_schedule(n)
        try:
            v, rep = naive_halfline_estimator(s, beta)
        except DomainError as exc:
            log.info("seed %d, n=%d skipped: %s", seed, n, exc)
            continue
        C, C0 = CenterSet.of(0.0, v), CenterSet.of(0.0)
        count_zero = n - rep.count
        out.append(
            TrajectoryRecord(
                seed=seed,
                n=n,
                centers=tuple(C.values.tolist()),
                empirical_excess_distortion=empirical_excess_distortion_centers(s, C, C0),
                population_excess_distortion_of_centers=population_excess_distortion_centers(cfg.dist, C, C0),
                hausdorff_to_target=None,
                jump_flag=is_jump(abs(v), n, cfg.jump_multiplier),
                counts=(count_zero, rep.count) if v > 0 else (rep.count, count_zero),
                gamma=beta,
            )
        )
    return out


def experiment_naive_case_iii(cfg: ExperimentConfig) -> ExperimentResult:
    """Naive two-center estimator {0, v}: does D({0, v}|{0}) diverge?"""
    per = _map_seeds(cfg, _seed_naive)
    records = [r for recs in per for r in recs]
    per_seed = [
        {"seed": seed, "pop_excess": [r.population_excess_distortion_of_centers for r in recs], "n": [r.n for r in recs]}
        for seed, recs in _by_seed(records).items()
    ]
    med = _median_by_n(records, lambda r: r.population_excess_distortion_of_centers)
    vals = list(med.values())
    aggregate = {
        "median_pop_excess_by_n": {str(n): v for n, v in med.items()},
        "strictly_decreasing": all(b < a for a, b in zip(vals, vals[1:])),
        "min_median": min(vals) if vals else None,
    }
    return _finish("naive", cfg, records, per_seed, aggregate, 2)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "inconsistency": experiment_inconsistency,
    "balanced-centers": experiment_balanced_centers,
    "balanced-distortion": experiment_balanced_distortion,
    "naive": experiment_naive_case_iii,
}
