# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled quadrature kernels for the cone operators.

Each operator application is a forward cumulative product-Gauss sum followed by
a backward trapezoid sweep; both are sequential scans, so they are written as
plain loops here. Summation order matches ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, pow, sqrt

cnp.import_array()

cdef double _TINY = 1e-300
cdef int _MAX_INT_POWER = 16


cdef inline double _ipow(double x, int k) noexcept nogil:
    cdef double result = 1.0, base = x
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


cdef inline double _root(double x, int N, double inv) noexcept nogil:
    if x <= 0.0:
        return 0.0
    if N == 2:
        return sqrt(x)
    return pow(x, inv)


cdef inline int _integer_exponent(double gamma) noexcept nogil:
    cdef int k = <int>gamma
    if k == gamma and 1 <= k <= _MAX_INT_POWER:
        return k
    return -1


cdef void _inner(const double[::1] v, double gamma, double coef, int N,
                 const double[::1] s, const double[:, ::1] W, double[::1] g) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], m = s.shape[0], i, q
    cdef double cum = 0.0, acc, vl, inv = 1.0 / N
    cdef int k = _integer_exponent(gamma)
    g[0] = 0.0
    for i in range(n - 1):
        acc = 0.0
        for q in range(m):
            vl = v[i] * (1.0 - s[q]) + v[i + 1] * s[q]
            if vl > 0.0:
                if k > 0:
                    acc += W[i, q] * _ipow(vl, k)
                else:
                    if vl < _TINY:
                        vl = _TINY
                    acc += W[i, q] * exp(gamma * log(vl))
        cum += acc
        g[i + 1] = _root(coef * cum, N, inv)


cdef void _outer(const double[::1] g, double h, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = g.shape[0], i
    cdef double acc = 0.0
    out[n - 1] = 0.0
    for i in range(n - 2, -1, -1):
        acc += 0.5 * h * (g[i] + g[i + 1])
        out[i] = acc


def inner_root_power(v, double gamma, double coef, int N, s, W):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    g = np.empty(vv.shape[0])
    _inner(vv, gamma, coef, N, np.ascontiguousarray(s, dtype=np.float64),
           np.ascontiguousarray(W, dtype=np.float64), g)
    return g


def inner_root_source(fq, double coef, int N, W):
    cdef const double[:, ::1] F = np.ascontiguousarray(fq, dtype=np.float64)
    cdef const double[:, ::1] WW = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t n = F.shape[0] + 1, m = F.shape[1], i, q
    cdef double cum = 0.0, acc, inv = 1.0 / N
    g = np.empty(n)
    cdef double[::1] gv = g
    gv[0] = 0.0
    with nogil:
        for i in range(n - 1):
            acc = 0.0
            for q in range(m):
                acc += F[i, q] * WW[i, q]
            cum += acc
            gv[i + 1] = _root(coef * cum, N, inv)
    return g


def outer_tail(g, double h):
    cdef const double[::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    out = np.empty(gg.shape[0])
    _outer(gg, h, out)
    return out


def power_operator(v, double gamma, double coef, int N, s, W, double h):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    cdef double[::1] g = np.empty(n)
    out = np.empty(n)
    cdef double[::1] outv = out
    cdef const double[::1] ss = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[:, ::1] WW = np.ascontiguousarray(W, dtype=np.float64)
    with nogil:
        _inner(vv, gamma, coef, N, ss, WW, g)
        _outer(g, h, outv)
    return out
