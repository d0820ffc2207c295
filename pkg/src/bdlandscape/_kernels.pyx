# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Polyak loop for the l1 bilinear objective.

Row-major ``A`` (m x d1) is read by BLAS as a column-major d1 x m matrix, so
``A @ w`` is a transposed gemv and ``A.T @ v`` a plain one.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport dgemv

cdef enum:
    VALUE_TOL = 0
    MAX_ITERS = 1
    ZERO_SUBGRADIENT = 2


cdef inline void _gemv(char trans, int rows, int cols, const double *a, const double *v,
                       double *out) noexcept nogil:
    cdef double one = 1.0, zero = 0.0
    cdef int inc = 1
    dgemv(&trans, &rows, &cols, &one, <double *>a, &rows, <double *>v, &inc, &zero, out, &inc)


cdef double _dot(const double[::1] u, const double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(u.shape[0]):
        acc += u[i] * v[i]
    return acc


cdef double _rel_err_expansion(double[::1] w, double[::1] x,
                               const double[::1] wbar, const double[::1] xbar,
                               double ref_sq) noexcept nogil:
    cdef double sq = (_dot(w, w) * _dot(x, x)
                      - 2.0 * _dot(w, wbar) * _dot(x, xbar) + ref_sq)
    if sq < 0.0:
        sq = 0.0
    return sqrt(sq / ref_sq)


def sample_value_and_subgradient(const double[:, ::1] A, const double[:, ::1] B,
                                 const double[::1] y, const double[::1] w,
                                 const double[::1] x):
    """Return ``(f, gw, gx)`` with the sign(0) = 0 selection."""
    cdef int m = A.shape[0], d1 = A.shape[1], d2 = B.shape[1]
    cdef double[::1] aw = np.empty(m), bx = np.empty(m)
    cdef double[::1] u = np.empty(m), v = np.empty(m)
    gw_arr = np.empty(d1)
    gx_arr = np.empty(d2)
    cdef double[::1] gw = gw_arr, gx = gx_arr
    cdef double f = 0.0, r, sgn, invm = 1.0 / m
    cdef Py_ssize_t i
    with nogil:
        _gemv(b'T', d1, m, &A[0, 0], &w[0], &aw[0])
        _gemv(b'T', d2, m, &B[0, 0], &x[0], &bx[0])
        for i in range(m):
            r = aw[i] * bx[i] - y[i]
            f += fabs(r)
            sgn = (r > 0.0) - (r < 0.0)
            u[i] = sgn * bx[i] * invm
            v[i] = sgn * aw[i] * invm
        _gemv(b'N', d1, m, &A[0, 0], &u[0], &gw[0])
        _gemv(b'N', d2, m, &B[0, 0], &v[0], &gx[0])
    return f * invm, gw_arr, gx_arr


def polyak_loop(const double[:, ::1] A, const double[:, ::1] B, const double[::1] y,
                double[::1] w, double[::1] x,
                const double[::1] wbar, const double[::1] xbar,
                long max_iters, double f_stop, double min_value,
                long trace_every):
    """Run Polyak subgradient steps in place on ``w`` and ``x``.

    Returns ``(iterations, final_value, code, trace)`` where code 0/1/2 means
    value tolerance / iteration cap / zero subgradient, and ``trace`` is an
    ``(n, 3)`` array of ``(iteration, value, relative_error)`` rows.  Trace
    relative errors use the inner-product expansion.
    """
    cdef int m = A.shape[0], d1 = A.shape[1], d2 = B.shape[1]
    cdef double[::1] aw = np.empty(m), bx = np.empty(m)
    cdef double[::1] u = np.empty(m), v = np.empty(m)
    cdef double[::1] gw = np.empty(d1), gx = np.empty(d2)
    cdef double f = 0.0, r, sgn, g2, t, invm = 1.0 / m
    cdef double ref_sq = _dot(wbar, wbar) * _dot(xbar, xbar)
    cdef long k = 0, last_traced = -1
    cdef int code = MAX_ITERS
    cdef Py_ssize_t i
    rows = []

    while True:
        with nogil:
            _gemv(b'T', d1, m, &A[0, 0], &w[0], &aw[0])
            _gemv(b'T', d2, m, &B[0, 0], &x[0], &bx[0])
            f = 0.0
            for i in range(m):
                r = aw[i] * bx[i] - y[i]
                f += fabs(r)
                sgn = (r > 0.0) - (r < 0.0)
                u[i] = sgn * bx[i]
                v[i] = sgn * aw[i]
            f *= invm
        if trace_every > 0 and k % trace_every == 0:
            rows.append((k, f, _rel_err_expansion(w, x, wbar, xbar, ref_sq)))
            last_traced = k
        if f < f_stop:
            code = VALUE_TOL
            break
        if k >= max_iters:
            code = MAX_ITERS
            break
        with nogil:
            _gemv(b'N', d1, m, &A[0, 0], &u[0], &gw[0])
            _gemv(b'N', d2, m, &B[0, 0], &v[0], &gx[0])
            g2 = 0.0
            for i in range(d1):
                gw[i] *= invm
                g2 += gw[i] * gw[i]
            for i in range(d2):
                gx[i] *= invm
                g2 += gx[i] * gx[i]
            if g2 > 0.0:
                t = (f - min_value) / g2
                for i in range(d1):
                    w[i] -= t * gw[i]
                for i in range(d2):
                    x[i] -= t * gx[i]
        if g2 == 0.0:
            code = ZERO_SUBGRADIENT
            break
        k += 1

    if trace_every > 0 and last_traced != k:
        rows.append((k, f, _rel_err_expansion(w, x, wbar, xbar, ref_sq)))
    trace = np.array(rows, dtype=float).reshape(-1, 3)
    return k, f, code, trace
