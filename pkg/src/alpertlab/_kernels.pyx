# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: quadratic-phase sums and piecewise Legendre evaluation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def phase_sum(const double complex[:] amp, const double[:, :] x,
              const double[:, :] u, const double[:] v):
    """out[p] = sum_j amp[j] * exp(-i (u[p].x[j] + v[p] |x[j]|^2))."""
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1], m = u.shape[0]
    cdef Py_ssize_t p, j, k
    cdef double ph, r2, sr, si, c, s
    cdef double[:] xsq = np.empty(n)
    out = np.empty(m, dtype=np.complex128)
    cdef double complex[:] o = out
    for j in range(n):
        r2 = 0.0
        for k in range(dim):
            r2 += x[j, k] * x[j, k]
        xsq[j] = r2
    for p in range(m):
        sr = 0.0
        si = 0.0
        for j in range(n):
            ph = v[p] * xsq[j]
            for k in range(dim):
                ph += u[p, k] * x[j, k]
            c = cos(ph)
            s = sin(ph)
            sr += amp[j].real * c + amp[j].imag * s
            si += amp[j].imag * c - amp[j].real * s
        o[p] = sr + 1j * si
    return out


def legendre_pp_eval(const double[:] breaks, const double[:, :] coeffs,
                     const double[:] x):
    """Evaluate a 1D piecewise Legendre series; zero outside [breaks[0], breaks[-1])."""
    cdef Py_ssize_t n = x.shape[0], nseg = coeffs.shape[0], deg = coeffs.shape[1] - 1
    cdef Py_ssize_t i, lo, hi, mid, k
    cdef double a, b, t, b0, b1, b2, xi
    out = np.zeros(n)
    cdef double[:] o = out
    for i in range(n):
        xi = x[i]
        if xi < breaks[0] or xi >= breaks[nseg]:
            continue
        lo = 0
        hi = nseg
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if breaks[mid] <= xi:
                lo = mid
            else:
                hi = mid
        a = breaks[lo]
        b = breaks[lo + 1]
        t = (2.0 * xi - a - b) / (b - a)
        # Clenshaw recurrence for Legendre series
        b1 = 0.0
        b2 = 0.0
        for k in range(deg, 0, -1):
            b0 = coeffs[lo, k] + (2.0 * k + 1.0) / (k + 1.0) * t * b1 - (k + 1.0) / (k + 2.0) * b2
            b2 = b1
            b1 = b0
        o[i] = coeffs[lo, 0] + t * b1 - 0.5 * b2
    return out
