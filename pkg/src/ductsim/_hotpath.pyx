# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Contracts match ductsim._refpath; see that module for documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, sin, M_PI

cnp.import_array()

BACKEND_NAME = "compiled"


def steering_matrix(angles, int m, double spacing_ratio):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ang = \
        np.ascontiguousarray(np.asarray(angles, dtype=np.float64).ravel())
    cdef Py_ssize_t n = ang.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = \
        np.empty((m, n), dtype=np.complex128)
    cdef Py_ssize_t i, k
    cdef double phase, c, s
    cdef double complex step, cur
    for k in range(n):
        phase = 2.0 * M_PI * spacing_ratio * sin(ang[k])
        step = cos(phase) + 1j * sin(phase)
        cur = 1.0 + 0.0j
        for i in range(m):
            out[i, k] = cur
            cur = cur * step
    return out


def rootmusic_coeffs(proj):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] p = \
        np.ascontiguousarray(np.asarray(proj, dtype=np.complex128))
    cdef Py_ssize_t m = p.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = \
        np.zeros(2 * m - 1, dtype=np.complex128)
    cdef Py_ssize_t j, i, lo, hi
    cdef long off
    cdef double complex acc
    for j in range(2 * m - 1):
        off = m - 1 - j
        acc = 0.0 + 0.0j
        if off >= 0:
            for i in range(m - off):
                acc = acc + p[i, i + off]
        else:
            for i in range(m + off):
                acc = acc + p[i - off, i]
        out[j] = acc
    return out


cdef double _power(double[::1] evals, double[::1] weights, double lam):
    cdef Py_ssize_t i, n = evals.shape[0]
    cdef double acc = 0.0, d
    for i in range(n):
        d = evals[i] + lam
        acc += weights[i] / (d * d)
    return acc


def unit_power_lambda(evals, weights, double target=1.0, double tol=1e-11,
                      int max_doublings=200):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ev = \
        np.ascontiguousarray(np.asarray(evals, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = \
        np.ascontiguousarray(np.asarray(weights, dtype=np.float64).ravel())
    cdef double[::1] evv = ev
    cdef double[::1] wv = w
    cdef Py_ssize_t i, n = evv.shape[0]
    cdef double wmax = 0.0
    for i in range(n):
        if wv[i] > wmax:
            wmax = wv[i]
    if wmax <= 0.0:
        raise ValueError("unit_power_lambda: all weights are zero, no solution")

    cdef double d_min = evv[0]
    for i in range(n):
        if evv[i] < d_min:
            d_min = evv[i]

    cdef double p0
    if d_min > 0.0:
        p0 = _power(evv, wv, 0.0)
    else:
        p0 = float("inf")

    cdef double lo, hi, step, mid, p, new_lo
    cdef int k
    if p0 > target:
        lo = 0.0
        hi = 1.0
        k = 0
        while _power(evv, wv, hi) > target:
            hi *= 2.0
            k += 1
            if k > max_doublings:
                raise ValueError(
                    "unit_power_lambda: bracket expansion failed after "
                    "%d doublings (power %.3e > target %.3e)"
                    % (max_doublings, _power(evv, wv, hi), target))
    else:
        hi = 0.0
        step = d_min * 0.5
        lo = -d_min + step
        k = 0
        while _power(evv, wv, lo) < target:
            step *= 0.5
            new_lo = -d_min + step
            k += 1
            # a step that underflows onto the pole means the power stays
            # bounded below the target there (only zero-weight modes sit
            # at the smallest eigenvalue), so no multiplier exists
            if new_lo <= -d_min or new_lo == lo or k > max_doublings:
                raise ValueError(
                    "unit_power_lambda: no unit-power multiplier above the "
                    "pole at %.6e (power %.3e < target %.3e)"
                    % (-d_min, _power(evv, wv, lo), target))
            lo = new_lo
    for k in range(400):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        p = _power(evv, wv, mid)
        if fabs(p - target) <= tol * target:
            return mid
        if p > target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    # written so a non-finite power also fails rather than slipping out
    if not fabs(_power(evv, wv, mid) - target) <= 1e-8 * target:
        raise ValueError(
            "unit_power_lambda: bisection stalled at power %.12e vs target "
            "%.12e" % (_power(evv, wv, mid), target))
    return mid
