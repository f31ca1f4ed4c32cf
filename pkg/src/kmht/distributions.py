"""One-dimensional laws with exact tail, interval and conditional-mean accessors.

Every law exposes the same small surface:

* ``tail_prob(t)``          P(X >= t)
* ``interval_prob(a, b)``   P(a <= X < b)
* ``conditional_mean(a, b)`` E[X | a <= X < b]
* ``sample(n, rng)``        inverse-CDF draws

Intervals are always half-open ``[a, b)``; ``a = -inf`` and ``b = +inf`` are
allowed. The Pareto family is parameterized by a tail exponent ``alpha``
(``P(|X| >= t) = t**-alpha`` for ``t >= 1``) which defaults to 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from kmht.errors import DomainError

_INF = math.inf


@dataclass(frozen=True)
class RandomStream:
    """A reproducible substream: identical ``(seed, stream_id)`` gives identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def _check_interval(a: float, b: float) -> None:
    if a > b:
        raise ValueError(f"empty interval: a={a} > b={b}")


def _open_uniforms(block: np.ndarray) -> np.ndarray:
    # generator doubles are k / 2**53; shifting by half a step gives (0, 1)
    return block + 2.0**-54


class Distribution:
    family: str = ""

    def tail_prob(self, t: float) -> float:
        return self.interval_prob(t, _INF)

    def cdf_left(self, t: float) -> float:
        """P(X < t)."""
        return self.interval_prob(-_INF, t)

    def interval_prob(self, a: float, b: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def interval_moment(self, a: float, b: float) -> float:  # pragma: no cover - abstract
        """E[X; a <= X < b]."""
        raise NotImplementedError

    def conditional_mean(self, a: float, b: float) -> float:
        _check_interval(a, b)
        mass = self.interval_prob(a, b)
        if not mass > 0.0:
            raise DomainError(f"interval [{a}, {b}) has zero probability")
        return self.interval_moment(a, b) / mass

    def mean(self) -> float:
        return self.interval_moment(-_INF, _INF)

    def sample(self, n: int, rng: RandomStream | np.random.Generator) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be nonnegative")
        gen = rng.generator() if isinstance(rng, RandomStream) else rng
        # two uniforms per draw, row-major, so a batch of n is a prefix of a batch of N > n
        block = gen.random((n, 2))
        return self._transform(block)

    def _transform(self, block: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        return {}

    def to_json(self) -> dict[str, Any]:
        return {"family": self.family, "params": self.params()}

    @property
    def analytic(self) -> bool:
        return True


# --- Pareto family ---------------------------------------------------------

def _par_tail(t: float, alpha: float) -> float:
    """P(Z >= t) for Z ~ Par(alpha) on [1, inf)."""
    if t <= 1.0:
        return 1.0
    if t == _INF:
        return 0.0
    return t ** (-alpha)


def _par_moment(lo: float, hi: float, alpha: float) -> float:
    """E[Z; lo <= Z < hi] for 1 <= lo <= hi."""
    if hi <= lo:
        return 0.0
    if alpha == 1.0:
        return math.log(hi / lo) if hi < _INF else _INF
    scale = alpha / (alpha - 1.0)
    top = 0.0 if hi == _INF else hi ** (1.0 - alpha)
    return scale * (lo ** (1.0 - alpha) - top)


class _SignedPareto(Distribution):
    """X = S * Z with Z ~ Par(alpha) and P(S = +1) = p, support (-inf, -1] U [1, inf)."""

    alpha: float
    p: float

    def __post_init__(self) -> None:
        if not self.alpha > 1.0:
            raise ValueError("Pareto exponent must exceed 1 for a finite mean")

    def _pieces(self, a: float, b: float) -> tuple[tuple[float, float], tuple[float, float]]:
        pos = (max(a, 1.0), b)
        # -Z in [a, b)  <=>  Z in (-b, -a]
        neg = (max(-b, 1.0), -a)
        return pos, neg

    def interval_prob(self, a: float, b: float) -> float:
        _check_interval(a, b)
        p, alpha = self.p, self.alpha
        (plo, phi), (nlo, nhi) = self._pieces(a, b)
        mass = 0.0
        if p > 0.0 and phi > plo:
            mass += p * (_par_tail(plo, alpha) - _par_tail(phi, alpha))
        if p < 1.0 and nhi > nlo:
            mass += (1.0 - p) * (_par_tail(nlo, alpha) - _par_tail(nhi, alpha))
        return mass

    def interval_moment(self, a: float, b: float) -> float:
        _check_interval(a, b)
        p, alpha = self.p, self.alpha
        (plo, phi), (nlo, nhi) = self._pieces(a, b)
        m = 0.0
        if p > 0.0 and phi > plo:
            m += p * _par_moment(plo, phi, alpha)
        if p < 1.0 and nhi > nlo:
            m -= (1.0 - p) * _par_moment(nlo, nhi, alpha)
        return m

    def _transform(self, block: np.ndarray) -> np.ndarray:
        u = 1.0 - block  # (0, 1]
        mag = u[:, 0] ** (-1.0 / self.alpha)
        sign = np.where(u[:, 1] <= self.p, 1.0, -1.0)
        return sign * mag

    def params(self) -> dict[str, Any]:
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class SymmetricPareto(_SignedPareto):
    family = "sym_pareto2"
    alpha: float = 2.0

    @property
    def p(self) -> float:
        return 0.5


@dataclass(frozen=True)
class OneSidedPareto(_SignedPareto):
    family = "one_sided_pareto2"
    alpha: float = 2.0

    @property
    def p(self) -> float:
        return 1.0


@dataclass(frozen=True)
class AsymmetricPareto(_SignedPareto):
    """Mass ``p`` on the positive tail and ``1 - p`` on the negative tail."""

    family = "asym_pareto2"
    p: float = 0.5
    alpha: float = 2.0

    def __post_init__(self) -> None:
        super().__post_init__()
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def params(self) -> dict[str, Any]:
        return {"p": self.p, "alpha": self.alpha}


# --- light-tailed baselines ------------------------------------------------

@dataclass(frozen=True)
class Gaussian(Distribution):
    family = "gaussian"
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    def _std(self, t: float) -> float:
        return (t - self.mu) / self.sigma

    def interval_prob(self, a: float, b: float) -> float:
        _check_interval(a, b)
        za, zb = self._std(a), self._std(b)
        if za > 0.0:
            # upper tail: difference of survival functions keeps precision
            return float(special.ndtr(-za) - special.ndtr(-zb))
        return float(special.ndtr(zb) - special.ndtr(za))

    def interval_moment(self, a: float, b: float) -> float:
        _check_interval(a, b)
        za, zb = self._std(a), self._std(b)
        phi = lambda z: 0.0 if math.isinf(z) else math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return self.mu * self.interval_prob(a, b) + self.sigma * (phi(za) - phi(zb))

    def _transform(self, block: np.ndarray) -> np.ndarray:
        return self.mu + self.sigma * special.ndtri(_open_uniforms(block[:, 0]))

    def params(self) -> dict[str, Any]:
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform(Distribution):
    family = "uniform"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("Uniform requires a < b")

    def _clip(self, lo: float, hi: float) -> tuple[float, float]:
        return max(lo, self.a), min(hi, self.b)

    def interval_prob(self, a: float, b: float) -> float:
        _check_interval(a, b)
        lo, hi = self._clip(a, b)
        return max(hi - lo, 0.0) / (self.b - self.a)

    def interval_moment(self, a: float, b: float) -> float:
        _check_interval(a, b)
        lo, hi = self._clip(a, b)
        if hi <= lo:
            return 0.0
        return (hi * hi - lo * lo) / (2.0 * (self.b - self.a))

    def _transform(self, block: np.ndarray) -> np.ndarray:
        return self.a + (self.b - self.a) * _open_uniforms(block[:, 0])

    def params(self) -> dict[str, Any]:
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class Empirical(Distribution):
    """Uniform law on a finite multiset; all accessors count exactly."""

    family = "empirical"
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if v.size == 0:
            raise ValueError("Empirical needs at least one value")
        object.__setattr__(self, "values", v)

    def _slice(self, a: float, b: float) -> slice:
        lo = int(np.searchsorted(self.values, a, side="left"))
        hi = int(np.searchsorted(self.values, b, side="left"))
        return slice(lo, max(lo, hi))

    def interval_prob(self, a: float, b: float) -> float:
        _check_interval(a, b)
        s = self._slice(a, b)
        return (s.stop - s.start) / self.values.size

    def interval_moment(self, a: float, b: float) -> float:
        _check_interval(a, b)
        s = self._slice(a, b)
        return math.fsum(self.values[s]) / self.values.size

    def conditional_mean(self, a: float, b: float) -> float:
        _check_interval(a, b)
        s = self._slice(a, b)
        if s.stop == s.start:
            raise DomainError(f"interval [{a}, {b}) holds no values")
        return math.fsum(self.values[s]) / (s.stop - s.start)

    def _transform(self, block: np.ndarray) -> np.ndarray:
        idx = np.minimum((block[:, 0] * self.values.size).astype(np.int64), self.values.size - 1)
        return self.values[idx].copy()

    def params(self) -> dict[str, Any]:
        return {"values": self.values.tolist()}

    @property
    def analytic(self) -> bool:
        return False


_FAMILIES = {
    "sym_pareto2": SymmetricPareto,
    "one_sided_pareto2": OneSidedPareto,
    "asym_pareto2": AsymmetricPareto,
    "gaussian": Gaussian,
    "uniform": Uniform,
    "empirical": Empirical,
}


def from_json(obj: dict[str, Any]) -> Distribution:
    """Inverse of ``Distribution.to_json``."""
    try:
        family = obj["family"]
        cls = _FAMILIES[family]
    except KeyError as exc:
        raise ValueError(f"unknown distribution description: {obj!r}") from exc
    params = dict(obj.get("params") or {})
    if cls is Empirical:
        return Empirical(np.asarray(params["values"], dtype=np.float64))
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {params!r}") from exc


def tail_prob(dist: Distribution, t: float) -> float:
    """P(X >= t)."""
    return dist.tail_prob(t)


def interval_prob(dist: Distribution, a: float, b: float) -> float:
    """P(a <= X < b)."""
    return dist.interval_prob(a, b)


def conditional_mean(dist: Distribution, a: float, b: float) -> float:
    """E[X | a <= X < b]; raises DomainError on a null interval."""
    return dist.conditional_mean(a, b)


def sample_batch(dist: Distribution, n: int, rng: RandomStream) -> np.ndarray:
    return dist.sample(n, rng)
