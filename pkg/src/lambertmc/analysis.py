"""Closed-form study of the deterministic price part as a function of rho and gamma."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .market import AgentParams, MarketScenario
from .special_functions import lambert_w_log

REGIME_TOL = 1e-12


def _d_parts(scenario: MarketScenario, agent: AgentParams, rho: float):
    """``(w, d, g)`` at any ``|rho| < 1`` without the usual clipping check."""
    T = scenario.T
    s = scenario.vol2T
    theta = agent.lam * agent.gamma * (1.0 - rho * rho)
    # log form so that long horizons do not overflow ``s_hat``
    log_s_hat = math.log(scenario.s0) + (scenario.drift(rho) - 0.5 * scenario.eta**2) * T
    w = lambert_w_log(log_s_hat + math.log(s * theta)) if theta > 0 else 0.0
    base = agent.lam * math.exp(log_s_hat - scenario.r * T - w)
    grow = math.exp(0.5 * s) if s < 1400.0 else math.inf
    return w, base * (1.0 + 0.5 * w), base * (grow + 0.5 * w)


def d_of_rho(scenario, agent, rho) -> float:
    return _d_parts(scenario, agent, rho)[1]


def log_kappa(scenario: MarketScenario, agent: AgentParams) -> float:
    """``ln(lam gamma s0 eta^2 T) + (nu - eta^2/2) T``."""
    sc = scenario
    return math.log(agent.lam * agent.gamma * sc.s0 * sc.vol2T) + (sc.nu - 0.5 * sc.eta**2) * sc.T


def w_kappa(scenario: MarketScenario, agent: AgentParams) -> float:
    """``W(kappa)`` where ``kappa = lam gamma s0 eta^2 T e^{(nu - eta^2/2) T}``."""
    return lambert_w_log(log_kappa(scenario, agent))


def identity_shift(scenario: MarketScenario, agent: AgentParams) -> float:
    """``e^{-rT} (mu - r)^2 T / (2 gamma sigma^2)``."""
    return math.exp(-scenario.r * scenario.T) * scenario.sharpe**2 * scenario.T / (2.0 * agent.gamma)


@dataclass(frozen=True)
class RhoStarReport:
    rho_star: float
    regime: str
    """``interior``, ``left-saturated`` or ``right-saturated``."""
    d_at_star: float
    identity_gap: float
    g_identity_gap: float = math.nan
    w_identity_gap: float = math.nan


def rho_star_raw(scenario: MarketScenario, agent: AgentParams) -> float:
    return scenario.eta * scenario.T * scenario.sharpe / w_kappa(scenario, agent)


def regime_of(rho_star: float) -> str:
    if rho_star >= 1.0 - REGIME_TOL:
        return "right-saturated"
    if rho_star <= -1.0 + REGIME_TOL:
        return "left-saturated"
    return "interior"


def rho_star(scenario: MarketScenario, agent: AgentParams) -> RhoStarReport:
    """Minimiser of ``d`` over ``rho``, with the interior identities evaluated."""
    rs = rho_star_raw(scenario, agent)
    regime = regime_of(rs)
    if regime != "interior":
        from .decomposition import boundary_limits

        lim = boundary_limits(scenario, agent)
        d_edge = lim["d_plus"] if regime == "right-saturated" else lim["d_minus"]
        return RhoStarReport(rs, regime, d_edge, math.nan)
    w0, d0, g0 = _d_parts(scenario, agent, 0.0)
    ws, ds, gs = _d_parts(scenario, agent, rs)
    shift = identity_shift(scenario, agent)
    wk = w_kappa(scenario, agent)
    return RhoStarReport(
        rho_star=rs,
        regime=regime,
        d_at_star=ds,
        identity_gap=abs(ds - (d0 - shift)),
        g_identity_gap=abs((gs - g0) - (ds - d0)),
        w_identity_gap=abs(ws - wk * (1.0 - rs * rs)),
    )


@dataclass(frozen=True)
class MonotonicityReport:
    rho_star: float
    regime: str
    ok: bool
    violations: list[tuple[float, float]] = field(default_factory=list)


def d_monotonicity_check(scenario, agent, grid) -> MonotonicityReport:
    """Check that ``d`` decreases left of ``rho*`` and increases right of it on ``grid``."""
    rhos = np.asarray(grid, dtype=float)
    if rhos.ndim != 1 or rhos.size < 2 or np.any(np.diff(rhos) <= 0):
        raise DomainError("grid must be strictly increasing with at least two points")
    if np.any(np.abs(rhos) >= 1.0):
        raise DomainError("grid must lie inside (-1, 1)")
    rs = rho_star_raw(scenario, agent)
    d = [d_of_rho(scenario, agent, float(r)) for r in rhos]
    bad = []
    for i in range(len(rhos) - 1):
        lo, hi = rhos[i], rhos[i + 1]
        if hi <= rs and not d[i + 1] < d[i]:
            bad.append((float(lo), float(hi)))
        elif lo >= rs and not d[i + 1] > d[i]:
            bad.append((float(lo), float(hi)))
    return MonotonicityReport(rs, regime_of(rs), not bad, bad)


def rho_star_small_T(scenario: MarketScenario, agent: AgentParams) -> float:
    """First-order expansion of ``rho*`` for short horizons."""
    sc = scenario
    k = sc.eta * sc.s0 * agent.lam * agent.gamma
    return sc.sharpe * (1.0 / k + (sc.eta - (sc.nu - 0.5 * sc.eta**2) / k) * sc.T)


def rho_star_large_T(scenario: MarketScenario) -> float:
    """Limit of ``rho*`` as ``T -> infinity``; needs ``nu > eta^2 / 2``."""
    drift = scenario.nu - 0.5 * scenario.eta**2
    if not drift > 0:
        raise DomainError(f"large-T limit needs nu > eta^2/2, got nu - eta^2/2 = {drift!r}")
    return scenario.sharpe * scenario.eta / drift


def uniform_lower_bounds(scenario: MarketScenario, agent: AgentParams) -> tuple[float, float]:
    """``(p_floor, v_floor)``: bounds on the price and value holding for every ``rho``."""
    d0 = d_of_rho(scenario, agent, 0.0)
    p_floor = d0 - identity_shift(scenario, agent)
    ex = -agent.gamma * math.exp(scenario.r * scenario.T) * (agent.x0 + d0)
    v_floor = -math.exp(ex) / agent.gamma if ex < 709.0 else -math.inf
    return p_floor, v_floor


@dataclass(frozen=True)
class GammaProfile:
    gammas: tuple[float, ...]
    d_bar: tuple[float, ...]
    decreasing: bool
    limit_zero: float
    """``lam e^{-rT} s0 e^{(delta - eta^2/2) T}``, the ``gamma -> 0`` limit."""


def d_bar_gamma_profile(scenario: MarketScenario, lam: float, rho: float, gamma_grid) -> GammaProfile:
    gs = [float(g) for g in gamma_grid]
    if not gs or any(g <= 0 for g in gs) or any(b <= a for a, b in zip(gs, gs[1:])):
        raise DomainError("gamma grid must be positive and strictly increasing")
    vals = [d_of_rho(scenario, AgentParams(g, lam), rho) for g in gs]
    sc = scenario
    lim = lam * math.exp(-sc.r * sc.T) * sc.s0 * math.exp((sc.drift(rho) - 0.5 * sc.eta**2) * sc.T)
    dec = all(b < a for a, b in zip(vals, vals[1:]))
    return GammaProfile(tuple(gs), tuple(vals), dec, lim)
