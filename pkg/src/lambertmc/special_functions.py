"""Principal branch of the Lambert W function.

``W`` inverts ``w -> w * exp(w)`` on ``(-1, inf)``. Everything here is
written from scratch: regime-dependent starting values refined by Halley
iteration, plus a high-order branch-point series for arguments within
``1e-4`` of ``-1/e`` where Halley's residual is dominated by cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

# 1/e split into a double plus its rounding error, so that x + 1/e is exact
# (Sterbenz) for x close to the branch point.
INV_E_HI = 0.36787944117144233
INV_E_LO = -1.2428753672788363e-17
BRANCH_POINT = -INV_E_HI

NEAR_BRANCH = 1e-4
MAX_ITER = 50
STEP_TOL = 1e-15

# W(-1/e + q) = sum_k BRANCH_SERIES[k] * p**k with p = sqrt(2 e q)
BRANCH_SERIES = (
    -1.0,
    1.0,
    -1.0 / 3.0,
    11.0 / 72.0,
    -43.0 / 540.0,
    769.0 / 17280.0,
    -221.0 / 8505.0,
    680863.0 / 43545600.0,
    -1963.0 / 204120.0,
    226287557.0 / 37623398400.0,
)


@dataclass(frozen=True)
class LambertEval:
    """Diagnostic record for one evaluation of ``W``."""

    x: float
    w: float
    iterations: int
    residual: float


def _branch_distance(x: float) -> float:
    return (x + INV_E_HI) + INV_E_LO


def _branch_series(q: float) -> float:
    p = math.sqrt(2.0 * math.e * q)
    acc = 0.0
    for c in reversed(BRANCH_SERIES):
        acc = acc * p + c
    return acc


def _initial_guess(x: float, q: float) -> float:
    if x <= -0.2:
        p = math.sqrt(2.0 * math.e * q)
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if abs(x) < 0.3:
        return x - x * x + 1.5 * x**3
    if x > math.e:
        lx = math.log(x)
        return lx - math.log(lx)
    return math.log1p(x)


def _solve(x: float) -> tuple[float, int]:
    if not math.isfinite(x):
        raise DomainError(f"lambert_w: non-finite argument {x!r}")
    q = _branch_distance(x)
    if q <= 0.0:
        raise DomainError(f"lambert_w: argument {x!r} is not above -1/e")
    if x == 0.0:
        return 0.0, 0
    if q < NEAR_BRANCH:
        return _branch_series(q), 0

    w = _initial_guess(x, q)
    for it in range(1, MAX_ITER + 1):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= STEP_TOL * (1.0 + abs(w)):
            return w, it
    raise NumericalError(f"lambert_w: Halley iteration did not converge at x={x!r}")


def lambert_w_eval(x: float) -> LambertEval:
    """Evaluate ``W(x)`` and report iterations and relative residual."""
    x = float(x)
    w, iters = _solve(x)
    residual = abs(w * math.exp(w) - x) / max(1.0, abs(x))
    return LambertEval(x=x, w=w, iterations=iters, residual=residual)


def lambert_w(x):
    """Principal-branch Lambert W.

    Accepts a float or an array-like. Arrays are dispatched to the compiled
    kernel when it is available.

    Raises
    ------
    DomainError
        If any argument is non-finite or not strictly above ``-1/e``.
    """
    if np.ndim(x) == 0:
        return _solve(float(x))[0]
    from .kernels import lambert_w_array

    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("lambert_w: non-finite argument")
    if np.any((arr + INV_E_HI) + INV_E_LO <= 0.0):
        raise DomainError("lambert_w: argument not above -1/e")
    return lambert_w_array(arr)


def lambert_w_prime(x):
    """Derivative ``W'(x) = 1 / (exp(W(x)) + x)``; diverges at ``-1/e``."""
    w = lambert_w(x)
    return 1.0 / (np.exp(w) + x)


def w_over_x(x):
    """``W(x) / x``, extended continuously by 1 at ``x = 0``.

    Equal to ``exp(-W(x))``, which avoids the 0/0 at the origin; used for
    ratios like ``w / theta`` as the correlation approaches +-1.
    """
    return np.exp(-lambert_w(x))


def lambert_w_log(log_x: float) -> float:
    """``W(exp(log_x))`` for arguments too large to form explicitly.

    Solves ``w + ln(w) = log_x`` by Newton from ``log_x - ln(log_x)`` once
    ``exp(log_x)`` would overflow.
    """
    log_x = float(log_x)
    if not math.isfinite(log_x):
        raise DomainError(f"lambert_w_log: non-finite argument {log_x!r}")
    if log_x < 700.0:
        return _solve(math.exp(log_x))[0]
    w = log_x - math.log(log_x)
    for _ in range(MAX_ITER):
        step = (w + math.log(w) - log_x) * w / (w + 1.0)
        w -= step
        if abs(step) <= STEP_TOL * w:
            break
    return w
