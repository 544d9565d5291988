"""Hedging strategies built from the deterministic price part, and their backtest.

Assets follow exact lognormal steps; discounted wealth is rebalanced at each
grid time with an Euler update ``X~ += Pi e^{-rt} (P_{k+1}/P_k e^{-r dt} - 1)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .decomposition import stock_bounds, stock_decomposition, stock_residual_quadrature, stock_residual_terms
from .direct import price_scale
from .errors import DomainError
from .market import AgentParams, MarketScenario, check_rho, derived
from .mc import (
    STREAM_IDIOSYNCRATIC,
    STREAM_PRICE,
    STREAM_TRADED,
    Z99,
    EstimatorResult,
    McConfig,
    mean_estimate,
    normals,
    sample_normals,
    wilson_interval,
)

STRATEGY_KINDS = ("deterministic", "fd-optimal", "merton", "zero")
PATH_BLOCK = 1024
QUANTILES = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def _remaining(scenario: MarketScenario, t: float, s: float) -> MarketScenario:
    if not 0.0 <= t < scenario.T:
        raise DomainError(f"t must lie in [0, T), got t={t!r} with T={scenario.T!r}")
    if not (math.isfinite(s) and s > 0):
        raise DomainError(f"spot must be > 0, got {s!r}")
    return scenario.with_(T=scenario.T - t, s0=s)


@dataclass(frozen=True)
class DynamicQuantities:
    w_t: float
    d_t: float
    ddt_ds: float
    a_t: float | EstimatorResult | None = None


def dynamic_quantities(scenario, agent, rho, t, s, residual: str | None = None, mc: McConfig | None = None):
    """``w_t``, ``d_t`` and ``dd_t/ds`` at ``(t, s)``; ``residual`` adds ``a_t``.

    ``residual`` is ``None``, ``"quadrature"`` or ``"mc"`` (uses ``mc``).
    """
    sub = _remaining(scenario, t, s)
    b = stock_bounds(sub, agent, rho)
    dq = derived(sub, agent, rho)
    # lam e^{-r tau} w / (theta eta^2 tau s) = lam e^{-r tau} (s_hat / s) e^{-w}
    slope = agent.lam * math.exp(-sub.r * sub.T) * dq.s_hat0 / s * math.exp(-b.w)
    a = None
    if residual == "quadrature":
        a = stock_residual_quadrature(sub, agent, rho)
    elif residual == "mc":
        a = stock_decomposition(sub, agent, rho, mc or McConfig()).A
    elif residual is not None:
        raise DomainError(f"residual must be None, 'quadrature' or 'mc', got {residual!r}")
    return DynamicQuantities(b.w, b.d, slope, a)


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "deterministic"
    fd_rel_step: float = 1e-3
    inner_mc: McConfig = field(default_factory=McConfig)

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise DomainError(f"strategy kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if not 0.0 < self.fd_rel_step < 0.1:
            raise DomainError(f"fd_rel_step must be in (0, 0.1), got {self.fd_rel_step!r}")


def merton_cash(scenario: MarketScenario, agent: AgentParams, t: float) -> float:
    return math.exp(-scenario.r * (scenario.T - t)) * scenario.sharpe / (agent.gamma * scenario.sigma)


def fd_price_slope(scenario, agent, rho, t, s, rel_step=1e-3, mc: McConfig | None = None) -> EstimatorResult:
    """Central difference of the Lambert price in the spot, on common draws.

    The closed-form part is differenced exactly; the standard error comes from
    the paired delta method on the two residual estimates.
    """
    mc = mc or McConfig()
    rho = check_rho(rho)
    h = rel_step * s
    z = sample_normals(mc, STREAM_PRICE)
    scale = -price_scale(scenario, agent, rho)
    parts = []
    for sp in (s + h, s - h):
        sub = _remaining(scenario, t, sp)
        b = stock_bounds(sub, agent, rho)
        y = np.exp(stock_residual_terms(sub, b.w, z))
        parts.append((b.d, y, y.mean()))
    (d_up, y_up, m_up), (d_dn, y_dn, m_dn) = parts
    diff = (d_up - d_dn) + scale * (math.log(m_up) - math.log(m_dn))
    infl = scale * (y_up / m_up - y_dn / m_dn)
    se = infl.std(ddof=1) / math.sqrt(z.size) / (2 * h)
    return EstimatorResult.from_mean_se(diff / (2 * h), se, z.size, mc.seed)


def fd_optimal_strategy(config: StrategyConfig, scenario, agent, rho, t, s) -> EstimatorResult:
    """``Merton - (eta rho / sigma) s dp_t/ds`` with its FD standard error."""
    base = merton_cash(scenario, agent, t)
    if rho == 0.0:
        return EstimatorResult.from_mean_se(base, 0.0, config.inner_mc.n_samples, config.inner_mc.seed)
    slope = fd_price_slope(scenario, agent, rho, t, s, config.fd_rel_step, config.inner_mc)
    k = scenario.eta * rho / scenario.sigma * s
    return EstimatorResult.from_mean_se(base - k * slope.mean, abs(k) * slope.std_error, slope.n, slope.seed)


def strategy_value(config: StrategyConfig, scenario, agent, rho, t, s) -> float:
    """Cash held in the traded asset at ``(t, s)``."""
    if config.kind == "zero":
        _remaining(scenario, t, s)
        return 0.0
    if config.kind == "merton":
        _remaining(scenario, t, s)
        return merton_cash(scenario, agent, t)
    if config.kind == "fd-optimal":
        return fd_optimal_strategy(config, scenario, agent, rho, t, s).mean
    dq = dynamic_quantities(scenario, agent, rho, t, s)
    return merton_cash(scenario, agent, t) - scenario.eta * rho / scenario.sigma * s * dq.ddt_ds


@dataclass(frozen=True)
class SimGrid:
    n_steps: int = 200
    n_paths: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise DomainError(f"n_steps >= 1 required, got {self.n_steps!r}")
        if int(self.n_paths) < 2:
            raise DomainError(f"n_paths >= 2 required, got {self.n_paths!r}")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")


@dataclass(frozen=True)
class SimOutcome:
    expected_utility: EstimatorResult
    superhedge_prob: EstimatorResult
    terminal_wealth_summary: dict
    initial_wealth: float
    x_T: np.ndarray | None = None
    s_T: np.ndarray | None = None


_KERNEL_CODES = {
    "zero": kernels.STRATEGY_ZERO,
    "deterministic": kernels.STRATEGY_DETERMINISTIC,
    "merton": kernels.STRATEGY_MERTON,
}


def _path_block(scenario, agent, rho, code, grid, x0, start, count):
    n = grid.n_steps
    zb = normals(grid.seed, STREAM_TRADED, start * n, count * n).reshape(count, n)
    zw = normals(grid.seed, STREAM_IDIOSYNCRATIC, start * n, count * n).reshape(count, n)
    sc = scenario
    return kernels.hedge_paths(
        zb, zw, sc.T, sc.r, sc.nu, sc.eta, sc.mu, sc.sigma, rho, agent.gamma, agent.lam, sc.s0, x0, code
    )


def simulate_terminals(scenario, agent, rho, strategy: StrategyConfig, grid: SimGrid, initial_wealth: float):
    """``(X_T, S_T)`` per path. Path ``i`` always uses the same normals, whatever the threading."""
    rho = check_rho(rho)
    if strategy.kind not in _KERNEL_CODES:
        raise DomainError(f"path simulation supports {tuple(_KERNEL_CODES)}, not {strategy.kind!r}")
    code = _KERNEL_CODES[strategy.kind]
    blocks = [(i, min(PATH_BLOCK, grid.n_paths - i)) for i in range(0, grid.n_paths, PATH_BLOCK)]

    def run(b):
        return _path_block(scenario, agent, rho, code, grid, float(initial_wealth), b[0], b[1])

    if grid.workers == 1 or len(blocks) == 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=grid.workers) as pool:
            parts = list(pool.map(run, blocks))
    x = np.concatenate([np.asarray(p[0]) for p in parts])
    s = np.concatenate([np.asarray(p[1]) for p in parts])
    return x, s


def superhedge_initial_wealth(scenario, agent, rho, mode: str = "rho", mc: McConfig | None = None) -> float:
    """``-p`` with ``p`` the Lambert price at ``rho`` (``mode="rho"``) or at ``rho*``."""
    if mode == "rho-star":
        from .analysis import rho_star_raw

        rho = rho_star_raw(scenario, agent)
    elif mode != "rho":
        raise DomainError(f"mode must be 'rho' or 'rho-star', got {mode!r}")
    return -stock_decomposition(scenario, agent, rho, mc or McConfig()).p


def simulate(
    scenario,
    agent,
    rho,
    strategy: StrategyConfig,
    grid: SimGrid,
    initial_wealth: float | None = None,
    include_endowment: bool = True,
    keep_paths: bool = False,
) -> SimOutcome:
    """Backtest ``strategy`` and report expected utility and the superhedge rate.

    ``initial_wealth`` defaults to ``agent.x0``. With ``include_endowment`` the
    terminal position is ``X_T + lam S_T``, otherwise ``X_T`` alone.
    """
    x0 = agent.x0 if initial_wealth is None else float(initial_wealth)
    x, s = simulate_terminals(scenario, agent, rho, strategy, grid, x0)
    total = x + agent.lam * s if include_endowment else x
    g = agent.gamma
    util = mean_estimate(-np.exp(-g * total) / g, grid.seed)
    n = total.size
    hits = int(np.count_nonzero(total >= 0.0))
    p = hits / n
    sh = EstimatorResult(p, math.sqrt(p * (1 - p) / n), wilson_interval(hits, n, Z99), n, grid.seed)
    summary = {
        "mean": float(total.mean()),
        "std": float(total.std(ddof=1)),
        "quantiles": dict(zip(QUANTILES, (float(q) for q in np.quantile(total, QUANTILES)))),
    }
    return SimOutcome(
        util, sh, summary, x0, x if keep_paths else None, s if keep_paths else None
    )
