"""Reproducible normal sampling and estimator statistics.

Normals are produced by the inverse CDF applied to a Philox (counter-based)
uniform stream. Sample ``i`` of stream ``(seed, stream)`` depends only on
``i``, so any chunking over workers yields the same array bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, NumericalError

Z99 = 2.5758293
CHUNK = 1 << 16
_U53 = 2.0**-53

# stream identifiers; one per independent use of randomness
STREAM_PRICE = 0
STREAM_TRADED = 1
STREAM_IDIOSYNCRATIC = 2
STREAM_INITIAL_PRICE = 3


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 10_000
    seed: int = 0
    n_replications: int = 1
    antithetic: bool = False
    workers: int = 1
    """Thread count for sampling; never changes results."""

    def __post_init__(self):
        if int(self.n_samples) < 2:
            raise DomainError(f"n_samples must be >= 2, got {self.n_samples!r}")
        if int(self.n_replications) < 1:
            raise DomainError("n_replications must be >= 1")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")

    def with_(self, **changes) -> "McConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    ci99: tuple[float, float]
    n: int
    seed: int | None = None

    @property
    def variance(self) -> float:
        """Variance of the estimator itself (``std_error**2``)."""
        return self.std_error**2

    @classmethod
    def from_mean_se(cls, mean, se, n, seed=None):
        mean = float(mean)
        se = float(se)
        return cls(mean, se, (mean - Z99 * se, mean + Z99 * se), int(n), seed)

    def shifted(self, offset: float) -> "EstimatorResult":
        return EstimatorResult.from_mean_se(self.mean + offset, self.std_error, self.n, self.seed)


def _raw_block(seed: int, stream: int, start: int, n: int) -> np.ndarray:
    block, offset = divmod(start, 4)
    bitgen = np.random.Philox(key=[seed, stream], counter=[block, 0, 0, 0])
    return bitgen.random_raw(offset + n)[offset:]


def normals_range(seed: int, stream: int, start: int, n: int) -> np.ndarray:
    """Standard normals with global indices ``start .. start + n - 1``."""
    raw = _raw_block(int(seed), int(stream), int(start), int(n))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return ndtri(u)


def normals(seed: int, stream: int, start: int, n: int, workers: int = 1) -> np.ndarray:
    """Like :func:`normals_range` but split into fixed chunks over threads."""
    if n <= CHUNK or workers == 1:
        return normals_range(seed, stream, start, n)
    bounds = [(start + i, min(CHUNK, n - i)) for i in range(0, n, CHUNK)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: normals_range(seed, stream, b[0], b[1]), bounds))
    return np.concatenate(parts)


def sample_normals(config: McConfig, stream: int = STREAM_PRICE) -> np.ndarray:
    """``config.n_samples`` i.i.d. normals; antithetic mode emits ``z, -z`` pairs."""
    n = int(config.n_samples)
    if not config.antithetic:
        return normals(config.seed, stream, 0, n, config.workers)
    half = (n + 1) // 2
    z = normals(config.seed, stream, 0, half, config.workers)
    out = np.empty(2 * half)
    out[0::2] = z
    out[1::2] = -z
    return out[:n]


def log_mean_exp_price(terms, scale: float, seed: int | None = None) -> EstimatorResult:
    """Estimate ``scale * ln E[exp(T)]`` from samples of ``T``.

    Uses a max shift so no exponential overflows; the standard error comes
    from the delta method, ``|scale| * sd(e^T) / (sqrt(n) * mean(e^T))``.
    """
    t = np.asarray(terms, dtype=float).ravel()
    if t.size == 0:
        raise DomainError("log_mean_exp_price: empty sample")
    if np.isnan(t).any() or np.isposinf(t).any():
        raise NumericalError("log_mean_exp_price: NaN or +inf exponent")
    m = t.max()
    if m == -np.inf:
        raise NumericalError("log_mean_exp_price: every exponent is -inf")
    y = np.exp(t - m)
    ybar = y.mean()
    mean = scale * (m + math.log(ybar))
    sd = y.std(ddof=1) if t.size > 1 else 0.0
    se = abs(scale) * sd / (math.sqrt(t.size) * ybar)
    return EstimatorResult.from_mean_se(mean, se, t.size, seed)


def mean_estimate(values, seed: int | None = None) -> EstimatorResult:
    v = np.asarray(values, dtype=float).ravel()
    se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
    return EstimatorResult.from_mean_se(v.mean(), se, v.size, seed)


def wilson_interval(successes: int, n: int, z: float = Z99) -> tuple[float, float]:
    if n <= 0:
        raise DomainError("wilson_interval: n must be positive")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def replication_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(i)]).generate_state(1, np.uint64)[0])


def replicate(estimator: Callable[[McConfig], EstimatorResult], config: McConfig) -> list[EstimatorResult]:
    """Run ``estimator`` on ``config.n_replications`` independent seeds."""
    return [
        estimator(config.with_(seed=replication_seed(config.seed, i), n_replications=1))
        for i in range(config.n_replications)
    ]


def replication_variance(estimator: Callable[[McConfig], EstimatorResult], config: McConfig) -> float:
    """Sample variance of the estimator across independent replications."""
    if config.n_replications < 2:
        raise DomainError("replication_variance needs n_replications >= 2")
    means = np.array([res.mean for res in replicate(estimator, config)])
    return float(means.var(ddof=1))
