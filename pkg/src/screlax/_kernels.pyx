# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled hot-loop kernels.

BLAS-backed matvecs on Fortran-ordered matrices plus fused vector
passes.  Callers (``backend.py``) guarantee float64 dtype, contiguity
and non-empty dimensions; empty edge cases never reach these entry
points.
"""

import numpy as np

from scipy.linalg.cython_blas cimport ddot, dgemv


cdef void _gemv(char trans, double[::1, :] A, double *x, double *out,
                double alpha, double beta) noexcept nogil:
    cdef int m = <int> A.shape[0]
    cdef int n = <int> A.shape[1]
    cdef int one = 1
    dgemv(&trans, &m, &n, &alpha, &A[0, 0], &m, x, &one, &beta, out, &one)


def descent(double[::1] corr_c, double[::1] corr_p, double[::1] x,
            double[::1] xp, double[::1] lam, unsigned char[::1] forced,
            double eps, double omega, double step):
    """Fused extrapolate + gradient-combine + prox; returns (x_new, v)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    x_new = np.empty(n)
    v = np.empty(n)
    cdef double[::1] xn_v = x_new
    cdef double[::1] v_v = v
    cdef bint has_forced = forced.shape[0] == n
    cdef double vi, g
    with nogil:
        for i in range(n):
            vi = x[i] + omega * (x[i] - xp[i])
            v_v[i] = vi
            if has_forced and forced[i]:
                xn_v[i] = 0.0
            else:
                g = omega * corr_p[i] - (1.0 + omega) * corr_c[i] \
                    + eps * vi + lam[i]
                vi -= step * g
                xn_v[i] = vi if vi > 0.0 else 0.0
    return x_new, v


def residual(double[::1, :] A, double[::1] x, double[::1] y):
    """y - A @ x."""
    out = np.array(y, copy=True)
    cdef double[::1] out_v = out
    with nogil:
        _gemv(b'N', A, &x[0], &out_v[0], -1.0, 1.0)
    return out


def adjoint(double[::1, :] A, double[::1] c):
    """A.T @ c."""
    cdef Py_ssize_t n = A.shape[1]
    out = np.empty(n)
    cdef double[::1] out_v = out
    with nogil:
        _gemv(b'T', A, &c[0], &out_v[0], 1.0, 0.0)
    return out


def hinge_sq(double[::1] h, unsigned char[::1] mask):
    """sum(max(h, 0)^2) over the mask (empty mask = all entries)."""
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t i
    cdef bint has_mask = mask.shape[0] == n
    cdef double s = 0.0, z
    with nogil:
        for i in range(n):
            if has_mask and not mask[i]:
                continue
            z = h[i]
            if z > 0.0:
                s += z * z
    return s


def certificate(double[::1, :] A, double[::1] y, double[::1] lam,
                double eps, double[::1] x):
    """Full-problem certificate at x: (resid, corr, primal, dual)."""
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef int mi = <int> m
    cdef int ni = <int> n
    cdef int one = 1
    cdef Py_ssize_t i
    resid = np.array(y, copy=True)
    corr = np.empty(n)
    cdef double[::1] r_v = resid
    cdef double[::1] co_v = corr
    cdef double yy, rr, ax2, lx, xx, pen, z, a
    with nogil:
        _gemv(b'N', A, &x[0], &r_v[0], -1.0, 1.0)
        _gemv(b'T', A, &r_v[0], &co_v[0], 1.0, 0.0)
        yy = ddot(&mi, &y[0], &one, &y[0], &one)
        rr = ddot(&mi, &r_v[0], &one, &r_v[0], &one)
        lx = ddot(&ni, &lam[0], &one, &x[0], &one)
        xx = ddot(&ni, &x[0], &one, &x[0], &one)
        ax2 = 0.0
        for i in range(m):
            a = y[i] - r_v[i]
            ax2 += a * a
        pen = 0.0
        for i in range(n):
            z = co_v[i] - lam[i]
            if z > 0.0:
                pen += z * z
    primal = 0.5 * rr + lx + 0.5 * eps * xx
    dual = 0.5 * yy - 0.5 * ax2 - pen / (2.0 * eps)
    return resid, corr, primal, dual
