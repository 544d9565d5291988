"""Direct Monte Carlo reservation prices and the price/value-function link."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericalError
from .market import AgentParams, MarketScenario, derived
from .mc import STREAM_PRICE, EstimatorResult, McConfig, log_mean_exp_price, sample_normals

KINDS = ("stock", "short_put", "put", "call", "generic")


@dataclass(frozen=True)
class PayoffSpec:
    """Claim ``h(x) = zeta(x) * 1{x <= K}`` paid per unit at the horizon.

    Built-ins: ``stock`` (``x``), ``call`` (``(x-K)+``), ``put`` (``(K-x)+``)
    and ``short_put`` (``-(K-x)+``). ``generic`` takes a caller-supplied
    ``zeta`` and cutoff ``K`` (``inf`` for no cutoff); ``zeta`` is called on
    one float at a time unless ``vectorized`` is set.
    """

    kind: str
    K: float = math.inf
    zeta: Callable[[float], float] | None = None
    vectorized: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown payoff kind {self.kind!r}")
        if self.kind == "generic":
            if self.zeta is None:
                raise DomainError("generic payoff needs zeta")
            if not self.K > 0:
                raise DomainError("cutoff K must be > 0")
        elif self.kind != "stock" and not (math.isfinite(self.K) and self.K >= 0):
            raise DomainError(f"{self.kind} needs a finite strike K >= 0, got {self.K!r}")

    @classmethod
    def long_stock(cls):
        return cls("stock")

    @classmethod
    def long_call(cls, K):
        return cls("call", float(K))

    @classmethod
    def long_put(cls, K):
        return cls("put", float(K))

    @classmethod
    def short_put(cls, K):
        return cls("short_put", float(K))

    @classmethod
    def generic(cls, zeta, K=math.inf, vectorized=False):
        return cls("generic", float(K), zeta, vectorized)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "stock":
            return x.copy()
        if self.kind == "call":
            return np.maximum(x - self.K, 0.0)
        if self.kind == "put":
            return np.maximum(self.K - x, 0.0)
        if self.kind == "short_put":
            return -np.maximum(self.K - x, 0.0)
        if self.vectorized:
            z = np.asarray(self.zeta(x), dtype=float) * np.ones_like(x)
        else:
            z = np.fromiter((self.zeta(v) for v in x.ravel()), float, x.size).reshape(x.shape)
        return np.where(x <= self.K, z, 0.0)

    def negated(self) -> "PayoffSpec":
        if self.kind == "put":
            return PayoffSpec.short_put(self.K)
        if self.kind == "short_put":
            return PayoffSpec.long_put(self.K)
        if self.kind == "generic":
            zeta, vec = self.zeta, self.vectorized
            return PayoffSpec.generic(lambda x: -np.asarray(zeta(x)) if vec else -zeta(x), self.K, vec)
        return PayoffSpec.generic(lambda x: -self(x), math.inf, vectorized=True)

    def shifted(self, c: float) -> "PayoffSpec":
        """Payoff ``zeta + c`` on the same cutoff."""
        if self.kind == "generic":
            zeta, vec = self.zeta, self.vectorized
            return PayoffSpec.generic(lambda x: zeta(x) + c, self.K, vec)
        return PayoffSpec.generic(lambda x: self(x) + c, math.inf, vectorized=True)


def terminal_prices(scenario: MarketScenario, s_hat0: float, z: np.ndarray) -> np.ndarray:
    return s_hat0 * np.exp(scenario.eta * math.sqrt(scenario.T) * z)


def price_scale(scenario: MarketScenario, agent: AgentParams, rho: float) -> float:
    """``e^{-rT} / (gamma (1 - rho^2))``, the factor in front of every log-Laplace term."""
    return math.exp(-scenario.r * scenario.T) / (agent.gamma * (1.0 - rho * rho))


def price_direct(
    scenario: MarketScenario,
    agent: AgentParams,
    rho: float,
    payoff: PayoffSpec,
    mc: McConfig,
    z: np.ndarray | None = None,
) -> EstimatorResult:
    """Asking reservation price of ``agent.lam`` units of ``payoff`` by plain MC.

    ``z`` overrides the normal draws (used for common random numbers).
    """
    dq = derived(scenario, agent, rho)
    if z is None:
        z = sample_normals(mc, STREAM_PRICE)
    h = payoff(terminal_prices(scenario, dq.s_hat0, z))
    terms = -dq.theta * h
    if np.isnan(terms).any():
        raise DomainError("payoff produced NaN")
    return log_mean_exp_price(terms, -price_scale(scenario, agent, dq.rho), mc.seed)


def negate(res: EstimatorResult) -> EstimatorResult:
    return EstimatorResult(-res.mean, res.std_error, (-res.ci99[1], -res.ci99[0]), res.n, res.seed)


def selling_price(scenario, agent, rho, payoff: PayoffSpec, mc: McConfig, z=None) -> EstimatorResult:
    """Selling reservation price ``-p_{-h}`` of ``payoff``."""
    return negate(price_direct(scenario, agent, rho, payoff.negated(), mc, z))


def value_exponent(scenario: MarketScenario, agent: AgentParams, price: float) -> float:
    g = agent.gamma * math.exp(scenario.r * scenario.T)
    return -g * (agent.x0 + price) - 0.5 * scenario.sharpe**2 * scenario.T


def value_from_price(scenario: MarketScenario, agent: AgentParams, price: float) -> float:
    """Value function ``V`` implied by an asking price for ``agent.x0``.

    Returns ``-0.0`` when the exponential underflows (``V`` is then too small
    to be meaningful); raises on overflow.
    """
    if not math.isfinite(price):
        raise DomainError(f"price must be finite, got {price!r}")
    e = value_exponent(scenario, agent, price)
    if e > 709.0:
        raise NumericalError(f"value function overflows (exponent {e:.4g})")
    if e < -745.0:
        return -0.0
    return -math.exp(e) / agent.gamma
