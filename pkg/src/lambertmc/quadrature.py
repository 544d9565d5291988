"""Deterministic Gaussian expectations, used as oracles for the MC estimators."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gauss_expectation(exponent, lo=-12.0, hi=12.0, epsrel=1e-11, points=None) -> float:
    """``ln E[exp(exponent(N))]`` for standard normal ``N``, truncated to ``[lo, hi]``.

    ``exponent`` must accept numpy arrays. The integrand is shifted by its
    maximum on a dense grid so very negative exponents do not underflow.
    ``points`` lists kinks to hand to the adaptive integrator.
    """
    grid = np.linspace(lo, hi, 4001)
    shift = float(np.max(exponent(grid) - 0.5 * grid * grid))

    def integrand(z):
        return math.exp(float(exponent(np.array([z]))[0]) - 0.5 * z * z - shift)

    pts = None
    if points:
        pts = sorted(p for p in points if lo < p < hi) or None
    val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=epsrel, limit=500, points=pts)
    return shift + math.log(val) - LOG_SQRT_2PI
