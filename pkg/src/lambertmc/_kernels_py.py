"""Pure numpy implementations of the hot kernels.

Selected by :mod:`lambertmc.kernels` when the compiled extension is not
importable. Inputs are assumed validated by the caller.
"""
import numpy as np

from .special_functions import (
    BRANCH_SERIES,
    INV_E_HI,
    INV_E_LO,
    MAX_ITER,
    NEAR_BRANCH,
    STEP_TOL,
)

STRATEGY_ZERO = 0
STRATEGY_DETERMINISTIC = 1
STRATEGY_MERTON = 2


def lambert_w_array(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat_x = x.ravel()
    flat = out.ravel()
    q = (flat_x + INV_E_HI) + INV_E_LO

    near = q < NEAR_BRANCH
    if near.any():
        p = np.sqrt(2.0 * np.e * q[near])
        acc = np.zeros_like(p)
        for c in reversed(BRANCH_SERIES):
            acc = acc * p + c
        flat[near] = acc

    far = ~near
    xs = flat_x[far]
    w = np.empty_like(xs)
    lo = xs <= -0.2
    small = (~lo) & (np.abs(xs) < 0.3)
    big = xs > np.e
    mid = ~(lo | small | big)
    p = np.sqrt(2.0 * np.e * q[far][lo])
    w[lo] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    xm = xs[small]
    w[small] = xm - xm * xm + 1.5 * xm**3
    lx = np.log(xs[big])
    w[big] = lx - np.log(lx)
    w[mid] = np.log1p(xs[mid])

    active = xs != 0.0
    w[~active] = 0.0
    for _ in range(MAX_ITER):
        if not active.any():
            break
        wa = w[active]
        xa = xs[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        dw = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        wa = wa - dw
        w[active] = wa
        done = np.abs(dw) <= STEP_TOL * (1.0 + np.abs(wa))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    flat[far] = w
    return out


def hedge_paths(zb, zw, T, r, nu, eta, mu, sigma, rho, gamma, lam, s0, x0, strategy):
    """Simulate terminal wealth and non-traded price along Euler-rebalanced paths.

    ``zb`` and ``zw`` are ``(n_paths, n_steps)`` standard normals driving the
    traded asset and the independent part of the non-traded asset. Returns
    ``(X_T, S_T)`` with ``X_T`` undiscounted.
    """
    n_paths, n_steps = zb.shape
    dt = T / n_steps
    sq = np.sqrt(dt)
    rho_c = np.sqrt(1.0 - rho * rho)
    merton = (mu - r) / (gamma * sigma * sigma)
    delta = nu - rho * eta * (mu - r) / sigma
    theta = lam * gamma * (1.0 - rho * rho)
    p_drift = (mu - r - 0.5 * sigma * sigma) * dt
    s_drift = (nu - 0.5 * eta * eta) * dt

    s = np.full(n_paths, float(s0))
    xd = np.full(n_paths, float(x0))
    for k in range(n_steps):
        t = k * dt
        tau = T - t
        if strategy == STRATEGY_DETERMINISTIC:
            growth = np.exp((delta - 0.5 * eta * eta) * tau)
            w = lambert_w_array(s * eta * eta * tau * growth * theta)
            pi = np.exp(-r * tau) * (merton - rho * lam * eta * s * growth * np.exp(-w) / sigma)
        elif strategy == STRATEGY_MERTON:
            pi = np.full(n_paths, np.exp(-r * tau) * merton)
        else:
            pi = None
        b = zb[:, k]
        if pi is not None:
            ratio = np.exp(p_drift + sigma * sq * b)
            xd = xd + pi * np.exp(-r * t) * (ratio - 1.0)
        s = s * np.exp(s_drift + eta * sq * (rho * b + rho_c * zw[:, k]))
    return xd * np.exp(r * T), s
