"""Expansion of the long-stock asking price in powers of ``1 - rho``."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .market import AgentParams, MarketScenario

MAX_ORDER = 4


@dataclass(frozen=True)
class CumulantSet:
    """Cumulants ``chi_1..chi_5`` of ``G = exp(eta sqrt(T) N)``."""

    chi: tuple[float, float, float, float, float]

    def normalized(self) -> tuple[float, ...]:
        """Cumulants of ``G / E[G]``, i.e. ``chi_k / chi_1^k``."""
        c1 = self.chi[0]
        return tuple(c / c1 ** (k + 1) for k, c in enumerate(self.chi))


@dataclass(frozen=True)
class TaylorCoefficients:
    c: tuple[float, float, float, float, float]
    p_hat: float
    alpha: float


def lognormal_cumulants(eta: float, T: float) -> CumulantSet:
    if not (eta > 0 and T > 0):
        raise DomainError("eta and T must be > 0")
    s = eta * eta * T
    e = math.exp
    em1 = math.expm1(s)
    return CumulantSet(
        (
            e(0.5 * s),
            e(s) * em1,
            e(1.5 * s) * (e(3 * s) - 3 * e(s) + 2),
            e(2 * s) * (e(6 * s) - 4 * e(3 * s) - 3 * e(2 * s) + 12 * e(s) - 6),
            e(2.5 * s) * (e(10 * s) - 5 * e(6 * s) - 10 * e(4 * s) + 20 * e(3 * s) + 30 * e(2 * s) - 60 * e(s) + 24),
        )
    )


def taylor_coefficients(scenario: MarketScenario, agent: AgentParams, verbatim: bool = False) -> TaylorCoefficients:
    """Coefficients ``c_0..c_4`` of ``p(rho) ~ sum c_k (1 - rho)^k``.

    The closed forms are stated in terms of cumulants of the mean-one
    variable ``G / E[G]`` and use ``p_hat alpha^4 / 24`` as the leading term
    of ``c_4``. ``verbatim=True`` plugs in the raw cumulants of ``G`` and
    ``gamma^4`` instead, as the formulas are sometimes printed; it is kept
    for comparison only.
    """
    sc, T = scenario, scenario.T
    p = agent.lam * math.exp(-sc.r * T) * sc.s0 * math.exp((sc.nu - sc.eta * sc.sharpe) * T)
    a = sc.eta * sc.sharpe * T
    cum = lognormal_cumulants(sc.eta, T)
    _, x2, x3, x4, x5 = cum.chi if verbatim else cum.normalized()
    g = agent.gamma
    q = g * math.exp(sc.r * T)  # gamma e^{rT}
    c0 = p
    c1 = a * p - p * p * q * x2
    c2 = 0.5 * p * a**2 - 0.5 * x2 * p**2 * q * (4 * a - 1) + (2 * x3 / 3) * p**3 * q**2
    c3 = (
        p * a**3 / 6
        - x2 * p**2 * q * a * (2 * a - 1)
        + (2 * x3 / 3) * p**3 * q**2 * (3 * a - 1)
        - (x4 / 3) * p**4 * q**3
    )
    lead = p * (g**4 if verbatim else a**4) / 24
    c4 = (
        lead
        - (x2 / 3) * p**2 * q * a**2 * (4 * a - 3)
        + x3 * p**3 * q**2 * (-2 * a + 3 * a**2 + 1 / 6)
        - (x4 / 6) * p**4 * q**3 * (8 * a - 3)
        + (2 * x5 / 15) * p**5 * q**4
    )
    return TaylorCoefficients((c0, c1, c2, c3, c4), p, a)


def taylor_price(coeffs, rho: float, order: int = MAX_ORDER) -> float:
    """Horner evaluation of ``sum_{k<=order} c_k (1 - rho)^k``.

    ``coeffs`` is a :class:`TaylorCoefficients` or a plain sequence.
    """
    if not 0 <= order <= MAX_ORDER:
        raise DomainError(f"order must be in 0..{MAX_ORDER}, got {order!r}")
    c = coeffs.c if isinstance(coeffs, TaylorCoefficients) else tuple(coeffs)
    x = 1.0 - rho
    acc = 0.0
    for ck in reversed(c[: order + 1]):
        acc = acc * x + ck
    return acc
