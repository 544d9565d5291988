"""Lambert-W decomposition of reservation prices into a closed-form part and a residual.

The Laplace transform ``E exp(-theta f(G) 1{G <= beta})`` with
``G = exp(eta sqrt(T) N)`` is split as ``L_beta * I`` where ``L_beta``
removes the peak of the Gaussian integrand after linearising ``f`` along a
tangent ``u + v x``. The leftover expectation ``I`` is close to 1 and is what
Monte Carlo has to estimate. Prices follow from
``p = -(e^{-rT} / (gamma (1 - rho^2))) ln L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .direct import PayoffSpec, price_direct, price_scale, selling_price, value_exponent, value_from_price
from .errors import ConditionViolated, DomainError
from .market import AgentParams, MarketScenario, check_rho, derived
from .mc import STREAM_PRICE, EstimatorResult, McConfig, log_mean_exp_price, mean_estimate, sample_normals
from .quadrature import log_gauss_expectation
from .special_functions import lambert_w


@dataclass(frozen=True)
class TangentChoice:
    """Linearisation ``u + v x`` of the payoff on ``[0, beta]``."""

    u: float
    v: float
    beta: float = math.inf

    def __post_init__(self):
        if not self.v > 0:
            raise DomainError(f"tangent slope v must be > 0, got {self.v!r}")
        if not self.beta > 0:
            raise DomainError(f"cutoff beta must be > 0, got {self.beta!r}")
        if math.isfinite(self.beta) and not math.isclose(self.u, -self.v * self.beta, rel_tol=1e-12, abs_tol=1e-300):
            raise DomainError("a finite cutoff requires u = -v * beta")

    @classmethod
    def continuous(cls, v: float, beta: float) -> "TangentChoice":
        return cls(-v * beta, v, beta)


@dataclass(frozen=True)
class KBetaProfile:
    minimizer: float
    min_value: float
    condition_ok: bool
    w: float
    """``W(theta v eta^2 T)``."""
    threshold: float
    """``W/(eta^2 T) + W^2/(2 eta^2 T)``, compared against ``theta v beta``."""


def _lambert_parts(theta, v, eta, T):
    s = eta * eta * T
    w = lambert_w(theta * v * s)
    return w, (w + 0.5 * w * w) / s


def k_beta(z, theta: float, tangent: TangentChoice, eta: float, T: float):
    """Exponent ``theta (u + v e^{eta sqrt(T) z}) 1{z <= ln(beta)/(eta sqrt T)} + z^2/2``."""
    z = np.asarray(z, dtype=float)
    y = eta * math.sqrt(T) * z
    lin = theta * (tangent.u + tangent.v * np.exp(y))
    if math.isfinite(tangent.beta):
        lin = np.where(z <= math.log(tangent.beta) / (eta * math.sqrt(T)), lin, 0.0)
    return lin + 0.5 * z * z


def k_beta_minimum(theta: float, tangent: TangentChoice, eta: float, T: float) -> KBetaProfile:
    """Location and value of the minimum of :func:`k_beta`."""
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta!r}")
    w, thr = _lambert_parts(theta, tangent.v, eta, T)
    m_star = -w / (eta * math.sqrt(T))
    if not math.isfinite(tangent.beta):
        return KBetaProfile(m_star, thr + theta * tangent.u, True, w, thr)
    cap = theta * tangent.v * tangent.beta
    if thr <= cap:
        return KBetaProfile(m_star, -(cap - thr), True, w, thr)
    return KBetaProfile(0.0, 0.0, False, w, thr)


def laplace_terms(f: Callable, tangent: TangentChoice, theta: float, eta: float, T: float, z: np.ndarray):
    """Return ``(ln L_beta, e)`` where ``I = mean(exp(e))`` over the draws ``z``.

    ``f`` must accept numpy arrays.
    """
    prof = k_beta_minimum(theta, tangent, eta, T)
    if not prof.condition_ok:
        raise ConditionViolated("tangent admissibility", prof.threshold, theta * tangent.v * tangent.beta)
    w = prof.w
    s = eta * eta * T
    cw = w / s
    y = eta * math.sqrt(T) * np.asarray(z, dtype=float)
    ey = np.exp(y)
    e = -cw * (ey - 1.0 - y)
    gap = -theta * (f(w / (theta * tangent.v * s) * ey) - tangent.u - cw / theta * ey)
    if math.isfinite(tangent.beta):
        e = e + np.maximum(cw * ey - theta * tangent.v * tangent.beta, 0.0)
        inside = y <= math.log(tangent.beta) + w
        gap = np.where(inside, gap, 0.0)
    return -(theta * tangent.u + prof.threshold), e + gap


def decompose_laplace(f, tangent: TangentChoice, theta, eta, T, mc: McConfig, z=None):
    """``L_{f,beta}(theta) = L_beta * I``: closed-form factor and MC estimate of ``I``."""
    if z is None:
        z = sample_normals(mc, STREAM_PRICE)
    log_l, e = laplace_terms(f, tangent, theta, eta, T, z)
    return math.exp(log_l), mean_estimate(np.exp(e), mc.seed)


# --- long stock ---------------------------------------------------------------


@dataclass(frozen=True)
class StockBounds:
    rho: float
    w: float
    d: float
    b: float
    g: float
    a_lower: float
    """Lower bound ``(b - lam e^{-rT} w^2 e2 / (2 theta eta^4 T^2))+`` on the residual."""


def e2_constant(vol2T: float) -> float:
    """``E[(e^X - 1 - X)^2]`` for ``X ~ N(0, vol2T)``... evaluated at ``X = eta sqrt(T) N``."""
    s = vol2T
    return math.exp(2 * s) - 2 * (1 + s) * math.exp(0.5 * s) + s + 1


def stock_bounds(scenario: MarketScenario, agent: AgentParams, rho: float) -> StockBounds:
    dq = derived(scenario, agent, rho)
    s = scenario.vol2T
    w = dq.w_bar
    # lam e^{-rT} w / (theta eta^2 T), written via W(x)/x = e^{-W(x)} to stay finite as theta -> 0
    base = agent.lam * math.exp(-scenario.r * scenario.T) * dq.s_hat0 * math.exp(-w)
    half = math.exp(0.5 * s)
    d = base * (1.0 + 0.5 * w)
    b = base * (half - 1.0)
    return StockBounds(
        rho=dq.rho,
        w=w,
        d=d,
        b=b,
        g=base * (half + 0.5 * w),
        a_lower=max(b - base * w * e2_constant(s) / (2.0 * s), 0.0),
    )


def boundary_limits(scenario: MarketScenario, agent: AgentParams) -> dict[str, float]:
    """Closed-form limits of ``d`` and ``g`` as ``rho -> 1^-`` and ``rho -> -1^+``."""
    T = scenario.T
    k = agent.lam * math.exp(-scenario.r * T) * scenario.s0
    hv = 0.5 * scenario.eta**2
    up, down = scenario.drift(1.0), scenario.drift(-1.0)
    return {
        "d_plus": k * math.exp((up - hv) * T),
        "d_minus": k * math.exp((down - hv) * T),
        "g_plus": k * math.exp(up * T),
        "g_minus": k * math.exp(down * T),
    }


def stock_ratio_bounds(scenario: MarketScenario, agent: AgentParams, rho: float):
    """Bounds ``lower_e <= lower_w <= D/p <= 1 <= G/p <= upper_w <= upper_e``."""
    s = scenario.vol2T
    w = derived(scenario, agent, rho).w_bar
    e2 = e2_constant(s)
    half = math.exp(0.5 * s)
    return (
        1.0 / half,
        (1.0 + 0.5 * w) / (half + 0.5 * w),
        1.0 + w * e2 / (2.0 * s + s * w),
        1.0 + e2 / s,
    )


def stock_residual_terms(scenario: MarketScenario, w: float, z) -> np.ndarray:
    s = scenario.vol2T
    y = math.sqrt(s) * np.asarray(z, dtype=float)
    return -(w / s) * (np.exp(y) - 1.0 - y)


@dataclass(frozen=True)
class DecompositionResult:
    D: float
    A: EstimatorResult
    p: float
    d: float | None = None
    b: float | None = None
    g: float | None = None
    ratios: tuple[float, float] | None = None
    """``(lower_w, upper_w)`` bounds on ``D/p`` and ``G/p`` (long stock only)."""
    condition_ok: bool = True
    w_bar: float | None = None
    direct: EstimatorResult | None = None

    @property
    def price(self) -> EstimatorResult:
        """The Lambert estimate ``D + A`` with the residual's error bars."""
        return self.A.shifted(self.D)


def stock_decomposition(scenario, agent, rho, mc: McConfig, z=None) -> DecompositionResult:
    """Asking price of ``lam`` units of S as ``D + A``, with bounds ``d <= p <= g``."""
    rho = check_rho(rho)
    bounds = stock_bounds(scenario, agent, rho)
    if z is None:
        z = sample_normals(mc, STREAM_PRICE)
    A = log_mean_exp_price(stock_residual_terms(scenario, bounds.w, z), -price_scale(scenario, agent, rho), mc.seed)
    _, lower_w, upper_w, _ = stock_ratio_bounds(scenario, agent, rho)
    return DecompositionResult(
        D=bounds.d,
        A=A,
        p=bounds.d + A.mean,
        d=bounds.d,
        b=bounds.b,
        g=bounds.g,
        ratios=(lower_w, upper_w),
        w_bar=bounds.w,
    )


def stock_residual_quadrature(scenario, agent, rho) -> float:
    """Residual ``A`` by adaptive quadrature instead of Monte Carlo."""
    rho = check_rho(rho)
    w = derived(scenario, agent, rho).w_bar
    log_i = log_gauss_expectation(lambda z: stock_residual_terms(scenario, w, z))
    return -price_scale(scenario, agent, rho) * log_i


def stock_price_quadrature(scenario, agent, rho) -> float:
    """Deterministic evaluation ``D + A`` of the long-stock asking price."""
    return stock_bounds(scenario, agent, rho).d + stock_residual_quadrature(scenario, agent, rho)


def price_quadrature(scenario, agent, rho, payoff: PayoffSpec) -> float:
    """Asking price of any payoff by quadrature of the defining expectation."""
    rho = check_rho(rho)
    dq = derived(scenario, agent, rho)
    sq = math.sqrt(scenario.vol2T)
    kinks = []
    if payoff.kind in ("call", "put", "short_put") and payoff.K > 0:
        kinks.append(math.log(payoff.K / dq.s_hat0) / sq)

    def expo(z):
        return -dq.theta * payoff(dq.s_hat0 * np.exp(sq * z))

    return -price_scale(scenario, agent, rho) * log_gauss_expectation(expo, points=kinks)


# --- short put ----------------------------------------------------------------


def put_threshold(scenario, agent, rho) -> float:
    """Smallest strike for which the put decomposition is admissible."""
    b = stock_bounds(scenario, agent, rho)
    # (w + w^2/2) / (eta^2 T theta) = s_hat0 e^{-w} (1 + w/2)
    return b.d / (agent.lam * math.exp(-scenario.r * scenario.T))


def put_decomposition(scenario, agent, rho, K: float, mc: McConfig, z=None) -> DecompositionResult:
    """Selling price of ``lam`` puts of strike ``K`` as ``D_put + A_put``.

    Raises :class:`ConditionViolated` when ``K`` is below :func:`put_threshold`.
    """
    rho = check_rho(rho)
    if not (math.isfinite(K) and K > 0):
        raise DomainError(f"strike must be > 0, got {K!r}")
    thr = put_threshold(scenario, agent, rho)
    if thr > K:
        raise ConditionViolated("put admissibility", thr, K)
    dq = derived(scenario, agent, rho)
    bounds = stock_bounds(scenario, agent, rho)
    disc = math.exp(-scenario.r * scenario.T)
    D = agent.lam * disc * K - bounds.d
    if z is None:
        z = sample_normals(mc, STREAM_PRICE)
    s = scenario.vol2T
    cw = dq.w_bar / s
    ey = np.exp(math.sqrt(s) * np.asarray(z, dtype=float))
    terms = stock_residual_terms(scenario, dq.w_bar, z) + np.maximum(cw * ey - dq.theta * K, 0.0)
    A = log_mean_exp_price(terms, price_scale(scenario, agent, rho), mc.seed)
    return DecompositionResult(D=D, A=A, p=D + A.mean, w_bar=dq.w_bar)


def put_price_direct(scenario, agent, rho, K, mc: McConfig, z=None) -> EstimatorResult:
    """Selling price of ``lam`` puts by the direct estimator (same draws if ``z``)."""
    return selling_price(scenario, agent, rho, PayoffSpec.long_put(K), mc, z)


# --- long call ------------------------------------------------------------------


def call_thresholds(scenario, agent, rho) -> tuple[float, float]:
    """``(K_low, K_high)`` with ``K_low = w / (theta eta^2 T)`` and ``K_high = s_hat0``."""
    dq = derived(scenario, agent, rho)
    return dq.s_hat0 * math.exp(-dq.w_bar), dq.s_hat0


def classify_call(K: float, K_low: float, K_high: float) -> str:
    """Moneyness label using the source's convention.

    Strikes above ``K_high`` are labelled in-the-money and strikes below
    ``K_low`` out-of-the-money, which is the reverse of market usage.
    """
    if K > K_high:
        return "in"
    if K < K_low:
        return "out"
    return "at"


def call_decomposition(scenario, agent, rho, K: float, mc: McConfig, z=None) -> DecompositionResult:
    """Asking price of ``lam`` calls of strike ``K``.

    Uses the tangent ``s_hat0 x - K`` with no cutoff; at ``K = 0`` this is the
    long-stock decomposition exactly. ``direct`` holds the plain estimate on
    the same draws.
    """
    rho = check_rho(rho)
    if not (math.isfinite(K) and K >= 0):
        raise DomainError(f"strike must be >= 0, got {K!r}")
    dq = derived(scenario, agent, rho)
    bounds = stock_bounds(scenario, agent, rho)
    if z is None:
        z = sample_normals(mc, STREAM_PRICE)
    s = scenario.vol2T
    cw = dq.w_bar / s
    ey = np.exp(math.sqrt(s) * np.asarray(z, dtype=float))
    terms = stock_residual_terms(scenario, dq.w_bar, z) - np.maximum(dq.theta * K - cw * ey, 0.0)
    A = log_mean_exp_price(terms, -price_scale(scenario, agent, rho), mc.seed)
    D = bounds.d - agent.lam * math.exp(-scenario.r * scenario.T) * K
    direct = price_direct(scenario, agent, rho, PayoffSpec.long_call(K), mc, z)
    return DecompositionResult(D=D, A=A, p=D + A.mean, w_bar=dq.w_bar, direct=direct)


# --- value functions -----------------------------------------------------------------


@dataclass(frozen=True)
class ValueDecomposition:
    V_D: float
    V_A: EstimatorResult
    V: EstimatorResult
    V_G: float | None
    underflow: bool
    """True when an exponent leaves the double range, making values meaningless."""


def value_decomposition(scenario, agent, rho, position: str, mc: McConfig, K: float | None = None, z=None):
    """``V = V_D * V_A`` for a long stock or a short put (and ``V_G`` for stock)."""
    g = agent.gamma * math.exp(scenario.r * scenario.T)
    if position == "stock":
        dec = stock_decomposition(scenario, agent, rho, mc, z)
        sign = -1.0
        det_price = dec.D
        V_G = value_from_price(scenario, agent, dec.g)
        exps = [value_exponent(scenario, agent, dec.D), value_exponent(scenario, agent, dec.g)]
    elif position == "put":
        if K is None:
            raise DomainError("put position needs a strike K")
        dec = put_decomposition(scenario, agent, rho, K, mc, z)
        sign = 1.0
        det_price = -dec.D
        V_G = None
        exps = [value_exponent(scenario, agent, det_price)]
    else:
        raise DomainError(f"position must be 'stock' or 'put', got {position!r}")
    V_D = value_from_price(scenario, agent, det_price)
    A = dec.A

    def va(a):
        return math.exp(sign * g * a)

    va_ci = sorted((va(A.ci99[0]), va(A.ci99[1])))
    V_A = EstimatorResult(va(A.mean), va(A.mean) * g * A.std_error, tuple(va_ci), A.n, A.seed)
    v_mean = V_D * V_A.mean
    v_ci = sorted((V_D * va_ci[0], V_D * va_ci[1]))
    V = EstimatorResult(v_mean, abs(v_mean) * g * A.std_error, tuple(v_ci), A.n, A.seed)
    underflow = any(e < -745.0 for e in exps) or V_D == 0.0
    return ValueDecomposition(V_D=V_D, V_A=V_A, V=V, V_G=V_G, underflow=underflow)
