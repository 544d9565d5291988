# cython: language_level=3
"""Compiled versions of the kernels in ``_kernels_py``.

Same algorithms, scalar loops without Python overhead. Results agree with
the numpy fallback to rounding (libm vs numpy ``exp``).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p, sqrt

cnp.import_array()

cdef double INV_E_HI = 0.36787944117144233
cdef double INV_E_LO = -1.2428753672788363e-17
cdef double NEAR_BRANCH = 1e-4
cdef int MAX_ITER = 50
cdef double STEP_TOL = 1e-15
cdef double E = 2.718281828459045

cdef double[10] SERIES
SERIES[:] = [-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0,
             769.0 / 17280.0, -221.0 / 8505.0, 680863.0 / 43545600.0,
             -1963.0 / 204120.0, 226287557.0 / 37623398400.0]


cdef inline double _w(double x) nogil:
    cdef double q = (x + INV_E_HI) + INV_E_LO
    cdef double p, w, ew, f, wp1, dw, lx, acc
    cdef int i
    if q <= 0.0 or x != x:
        return 0.0 / 0.0
    if x == 0.0:
        return 0.0
    if q < NEAR_BRANCH:
        p = sqrt(2.0 * E * q)
        acc = 0.0
        for i in range(9, -1, -1):
            acc = acc * p + SERIES[i]
        return acc
    if x <= -0.2:
        p = sqrt(2.0 * E * q)
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    elif fabs(x) < 0.3:
        w = x - x * x + 1.5 * x * x * x
    elif x > E:
        lx = log(x)
        w = lx - log(lx)
    else:
        w = log1p(x)
    for i in range(MAX_ITER):
        ew = exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if fabs(dw) <= STEP_TOL * (1.0 + fabs(w)):
            break
    return w


def lambert_w_array(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i, n = xs.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _w(xs[i])
    return out.reshape(np.shape(x))


cdef double CUBIC_STOP = 1e-5


cdef inline double _w_warm(double x, double w) nogil:
    """Halley iteration for ``W(x)``, ``x > 0``, from a nearby guess ``w``.

    Convergence is cubic, so once a step falls below ``CUBIC_STOP`` the
    next one would be below rounding and is skipped.
    """
    cdef double ew, f, wp1, dw
    cdef int i
    for i in range(MAX_ITER):
        ew = exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if fabs(dw) <= CUBIC_STOP * (1.0 + fabs(w)):
            break
    return w


def hedge_paths(zb, zw, double T, double r, double nu, double eta, double mu,
                double sigma, double rho, double gamma, double lam, double s0,
                double x0, int strategy):
    zb = np.asarray(zb, dtype=np.float64)
    zw = np.asarray(zw, dtype=np.float64)
    cdef double dt = T / zb.shape[1]
    cdef double sq = sqrt(dt)
    cdef double rho_c = sqrt(1.0 - rho * rho)
    # exponentials that do not depend on the strategy, vectorised up front
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gain = np.ascontiguousarray(
        np.expm1((mu - r - 0.5 * sigma * sigma) * dt + sigma * sq * zb))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grow = np.ascontiguousarray(
        np.exp((nu - 0.5 * eta * eta) * dt + eta * sq * (rho * zb + rho_c * zw)))
    cdef Py_ssize_t n_paths = gain.shape[0], n_steps = gain.shape[1], i, k
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_out = np.empty(n_paths)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_out = np.empty(n_paths)
    # per-step factors shared by every path
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arg_k = np.empty(n_steps)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi0_k = np.empty(n_steps)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi1_k = np.empty(n_steps)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] disc_k = np.empty(n_steps)
    cdef double merton = (mu - r) / (gamma * sigma * sigma)
    cdef double delta = nu - rho * eta * (mu - r) / sigma
    cdef double theta = lam * gamma * (1.0 - rho * rho)
    cdef double erT = exp(r * T)
    cdef double s, xd, t, tau, growth, w, x, x_prev, e_mw, pi
    for k in range(n_steps):
        t = k * dt
        tau = T - t
        growth = exp((delta - 0.5 * eta * eta) * tau)
        arg_k[k] = eta * eta * tau * growth * theta
        pi0_k[k] = exp(-r * tau) * merton
        pi1_k[k] = exp(-r * tau) * rho * lam * eta * growth / sigma
        disc_k[k] = exp(-r * t)
    with nogil:
        for i in range(n_paths):
            s = s0
            xd = x0
            w = -1.0
            x_prev = 0.0
            for k in range(n_steps):
                if strategy != 0:
                    if strategy == 1:
                        x = s * arg_k[k]
                        if x > 0.0 and w > 0.0:
                            # first-order predictor from the previous step: W'(x) = W / (x (1 + W))
                            w = _w_warm(x, w * (1.0 + (x / x_prev - 1.0) / (1.0 + w)))
                        else:
                            w = _w(x)
                        x_prev = x
                        # e^{-W(x)} = W(x) / x away from the origin
                        e_mw = w / x if x > 1e-300 else exp(-w)
                        pi = pi0_k[k] - pi1_k[k] * s * e_mw
                    else:
                        pi = pi0_k[k]
                    xd = xd + pi * disc_k[k] * gain[i, k]
                s = s * grow[i, k]
            x_out[i] = xd * erT
            s_out[i] = s
    return x_out, s_out
