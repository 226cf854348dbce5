# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels; signatures mirror _kernels_py exactly."""

from libc.math cimport exp, copysign

import numpy as np
cimport numpy as cnp

cnp.import_array()


def jacobi_table(x, int n_max, double a, double b):
    """P_n^(a,b)(x) for n = 0..n_max, shape (len(x), n_max+1)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = \
        np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t npts = xv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = \
        np.empty((npts, n_max + 1), dtype=np.float64)
    cdef Py_ssize_t i, n
    cdef double s = a + b
    cdef double xi, c0, c1, c2, c3, pm1, pm2, cur
    for i in range(npts):
        xi = xv[i]
        pm2 = 1.0
        out[i, 0] = pm2
        if n_max >= 1:
            pm1 = 0.5 * (a - b) + 0.5 * (s + 2.0) * xi
            out[i, 1] = pm1
            for n in range(2, n_max + 1):
                c0 = 2.0 * n * (n + s) * (2.0 * n + s - 2.0)
                c1 = (2.0 * n + s - 1.0) * (a * a - b * b)
                c2 = (2.0 * n + s - 1.0) * (2.0 * n + s) * (2.0 * n + s - 2.0)
                c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + s)
                cur = ((c1 + c2 * xi) * pm1 - c3 * pm2) / c0
                out[i, n] = cur
                pm2 = pm1
                pm1 = cur
    return out


def channel_values(x, coef, double a, double b, int chunk=65536):
    """sum_n coef[c, n] P_n^(a,b)(x[j]), fused recurrence, no order table."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = \
        np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cf = \
        np.ascontiguousarray(np.atleast_2d(coef), dtype=np.float64)
    cdef Py_ssize_t npts = xv.shape[0]
    cdef Py_ssize_t n_ch = cf.shape[0]
    cdef Py_ssize_t n_orders = cf.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = \
        np.zeros((n_ch, npts), dtype=np.float64)
    cdef Py_ssize_t i, n, c
    cdef double s = a + b
    cdef double xi, c0, c1, c2, c3, pm1, pm2, cur
    for i in range(npts):
        xi = xv[i]
        pm2 = 1.0
        for c in range(n_ch):
            out[c, i] = cf[c, 0]
        if n_orders >= 2:
            pm1 = 0.5 * (a - b) + 0.5 * (s + 2.0) * xi
            for c in range(n_ch):
                out[c, i] += cf[c, 1] * pm1
            for n in range(2, n_orders):
                c0 = 2.0 * n * (n + s) * (2.0 * n + s - 2.0)
                c1 = (2.0 * n + s - 1.0) * (a * a - b * b)
                c2 = (2.0 * n + s - 1.0) * (2.0 * n + s) * (2.0 * n + s - 2.0)
                c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + s)
                cur = ((c1 + c2 * xi) * pm1 - c3 * pm2) / c0
                for c in range(n_ch):
                    out[c, i] += cf[c, n] * cur
                pm2 = pm1
                pm1 = cur
    return out


def zero_energy_sweep(double depth, double width, double mu, double nu,
                      double z0, double z1, int n_steps):
    """RK4 for w'' = [nu^2 + 2 mu r^2 V(r)] w on z = ln r; see _kernels_py."""
    cdef double h = (z1 - z0) / n_steps
    cdef double z = z0
    cdef double w = 1.0
    cdef double wp = nu
    cdef int nodes = 0
    cdef double prev = 1.0
    cdef double two_mu_depth = 2.0 * mu * depth
    cdef double inv_w2 = 1.0 / (width * width)
    cdef double q1, qm, q4, k1w, k1p, k2w, k2p, k3w, k3p, k4w, k4p, r2, sgn
    cdef int i
    for i in range(n_steps):
        r2 = exp(2.0 * z)
        q1 = nu * nu - two_mu_depth * r2 * exp(-r2 * inv_w2)
        r2 = exp(2.0 * (z + 0.5 * h))
        qm = nu * nu - two_mu_depth * r2 * exp(-r2 * inv_w2)
        r2 = exp(2.0 * (z + h))
        q4 = nu * nu - two_mu_depth * r2 * exp(-r2 * inv_w2)
        k1w = wp
        k1p = q1 * w
        k2w = wp + 0.5 * h * k1p
        k2p = qm * (w + 0.5 * h * k1w)
        k3w = wp + 0.5 * h * k2p
        k3p = qm * (w + 0.5 * h * k2w)
        k4w = wp + h * k3p
        k4p = q4 * (w + h * k3w)
        w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        wp += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        z += h
        sgn = copysign(1.0, w)
        if sgn != prev and w != 0.0:
            nodes += 1
            prev = sgn
    return w, wp, nodes
