"""Market and agent parameters, derived quantities and the reference presets.

All rates and volatilities are per annum and horizons are in years.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import DomainError
from .special_functions import lambert_w

RHO_MAX = 1.0 - 1e-6


@dataclass(frozen=True)
class MarketScenario:
    """Riskless rate, horizon and GBM coefficients of the two assets.

    ``nu``/``eta`` drive the non-traded asset S, ``mu``/``sigma`` the traded
    proxy P.
    """

    r: float
    T: float
    s0: float
    nu: float
    eta: float
    mu: float
    sigma: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
        for name in ("T", "s0", "eta", "sigma"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def sharpe(self) -> float:
        return (self.mu - self.r) / self.sigma

    @property
    def vol2T(self) -> float:
        """Total variance ``eta**2 * T`` of log S over the horizon."""
        return self.eta * self.eta * self.T

    def drift(self, rho: float) -> float:
        """Risk-adjusted drift of S when hedging with correlation ``rho``.

        ``nu - rho * eta * (mu - r) / sigma``; at ``rho = 1`` this is the
        complete-market drift.
        """
        return self.nu - rho * self.eta * self.sharpe

    def with_(self, **changes) -> "MarketScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class AgentParams:
    """Exponential-utility agent holding ``lam`` units of the claim."""

    gamma: float
    lam: float
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be > 0, got {self.gamma!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be > 0, got {self.lam!r}")
        if not math.isfinite(self.x0):
            raise DomainError(f"x0 must be finite, got {self.x0!r}")

    def with_(self, **changes) -> "AgentParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedQuantities:
    rho: float
    delta: float
    """Correlation-adjusted drift ``nu - rho * eta * sharpe``."""
    delta_complete: float
    """Complete-market drift ``nu - eta * sharpe`` (the ``rho -> 1`` value)."""
    sharpe: float
    theta: float
    s_hat0: float
    w_bar: float


def check_rho(rho: float) -> float:
    rho = float(rho)
    if not math.isfinite(rho) or abs(rho) > RHO_MAX:
        raise DomainError(f"correlation must satisfy |rho| <= 1 - 1e-6, got {rho!r}")
    return rho


def derived(scenario: MarketScenario, agent: AgentParams, rho: float) -> DerivedQuantities:
    rho = check_rho(rho)
    delta = scenario.drift(rho)
    theta = agent.lam * agent.gamma * (1.0 - rho * rho)
    s_hat0 = scenario.s0 * math.exp((delta - 0.5 * scenario.eta**2) * scenario.T)
    w_bar = lambert_w(s_hat0 * scenario.vol2T * theta)
    return DerivedQuantities(
        rho=rho,
        delta=delta,
        delta_complete=scenario.drift(1.0),
        sharpe=scenario.sharpe,
        theta=theta,
        s_hat0=s_hat0,
        w_bar=w_bar,
    )


PRESETS = {
    "table1": (MarketScenario(r=0.001, T=0.25, s0=100.0, nu=0.20, eta=0.30, mu=0.10, sigma=0.20), 2.0),
    "table2": (MarketScenario(r=0.001, T=0.3, s0=1.0, nu=0.35, eta=0.40, mu=0.10, sigma=0.20), 20.0),
    "table3": (MarketScenario(r=0.001, T=10.0, s0=100.0, nu=0.30, eta=0.30, mu=0.05, sigma=0.10), 10.0),
}


def preset(name: str) -> tuple[MarketScenario, float]:
    """Return ``(scenario, default_lambda)`` for a named reference market."""
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


SCENARIO_KEYS = ("r", "T", "s0", "nu", "eta", "mu", "sigma", "gamma", "lambda", "x0", "rho")


def parse_scenario_text(text: str) -> dict[str, float]:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCENARIO_KEYS:
            raise DomainError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise DomainError(f"line {lineno}: {key} is not a number: {val!r}") from None
    return values


def load_scenario_file(path) -> dict[str, float]:
    return parse_scenario_text(Path(path).read_text())


def format_scenario_text(scenario: MarketScenario, agent: AgentParams, rho: float | None = None) -> str:
    items = [(f.name, getattr(scenario, f.name)) for f in fields(scenario)]
    items += [("gamma", agent.gamma), ("lambda", agent.lam), ("x0", agent.x0)]
    if rho is not None:
        items.append(("rho", rho))
    return "".join(f"{k}={v!r}\n" for k, v in items)
