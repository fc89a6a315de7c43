# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``."""
import numpy as np

from libc.math cimport atanh, cosh, expm1, fabs, log, log1p, pow, sinh


def lag_weights(Py_ssize_t n, double s):
    cdef double[::1] out
    cdef Py_ssize_t k
    cdef double p, scale, kk, inv, m, d
    res = np.zeros(n)
    out = res
    if n < 2:
        return res
    if s == 0.5:
        out[1] = -log(2.0) + 1.0
        for k in range(2, n):
            inv = 1.0 / <double>k
            out[k] = -log1p(-inv * inv)
        return res
    p = 1.0 - 2.0 * s
    scale = 1.0 / (2.0 * s * (2.0 * s - 1.0))
    out[1] = scale * (pow(2.0, p) - 1.0) + 1.0 / (2.0 * s)
    for k in range(2, n):
        kk = <double>k
        inv = 1.0 / kk
        m = 0.5 * p * log1p(-inv * inv)
        d = p * atanh(inv)
        out[k] = scale * 2.0 * pow(kk, p) * (expm1(m) * cosh(d) + 2.0 * sinh(0.5 * d) ** 2)
    return res


def toeplitz_matvec(const double[::1] col, const double[::1] u):
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    res = np.empty(m)
    cdef double[::1] y = res
    for i in range(m):
        acc = 0.0
        for j in range(i):
            acc += col[i - j] * u[j]
        for j in range(i, m):
            acc += col[j - i] * u[j]
        y[i] = acc
    return res


def toeplitz_dense(const double[::1] col):
    cdef Py_ssize_t m = col.shape[0]
    cdef Py_ssize_t i, j
    res = np.empty((m, m))
    cdef double[:, ::1] t = res
    for i in range(m):
        for j in range(m):
            t[i, j] = col[i - j] if i >= j else col[j - i]
    return res


def solve_small_batched(mats, rhs):
    cdef double[:, :, ::1] a = np.array(mats, dtype=float, order="C", copy=True)
    cdef double[:, ::1] b = np.array(rhs, dtype=float, order="C", copy=True)
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    xres = np.empty((p, n))
    detres = np.ones(p)
    cdef double[:, ::1] x = xres
    cdef double[::1] det = detres
    cdef Py_ssize_t q, col, row, j, piv
    cdef double best, f, tmp, acc
    for q in range(p):
        for col in range(n):
            piv = col
            best = fabs(a[q, col, col])
            for row in range(col + 1, n):
                # strict comparison keeps the smallest index on ties
                if fabs(a[q, row, col]) > best:
                    best = fabs(a[q, row, col])
                    piv = row
            if piv != col:
                for j in range(n):
                    tmp = a[q, col, j]
                    a[q, col, j] = a[q, piv, j]
                    a[q, piv, j] = tmp
                tmp = b[q, col]
                b[q, col] = b[q, piv]
                b[q, piv] = tmp
            det[q] *= fabs(a[q, col, col])
            for row in range(col + 1, n):
                f = a[q, row, col] / a[q, col, col]
                for j in range(col, n):
                    a[q, row, j] -= f * a[q, col, j]
                b[q, row] -= f * b[q, col]
        for row in range(n - 1, -1, -1):
            acc = b[q, row]
            for j in range(row + 1, n):
                acc -= a[q, row, j] * x[q, j]
            x[q, row] = acc / a[q, row, row]
    return xres, detres


def vandermonde_products(values):
    cdef double[:, ::1] v = np.ascontiguousarray(values, dtype=float)
    cdef Py_ssize_t p = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    res = np.ones(p)
    cdef double[::1] out = res
    cdef Py_ssize_t q, m, l
    for q in range(p):
        for m in range(n):
            for l in range(m):
                out[q] *= v[q, m] - v[q, l]
    return res
