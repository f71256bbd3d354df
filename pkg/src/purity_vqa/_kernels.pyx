# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gradient-scan kernels.

Same contract as ``_kernels_py``: each batch function takes a 2-D (or 1-D)
array of parameter draws and returns one value per draw. The loops release
the GIL so scans can be split across threads.
"""

import numpy as np

from libc.math cimport cos, sin, fabs

BACKEND = "cython"


cdef inline double _ipow(double x, int e) nogil:
    cdef double r = 1.0
    while e > 0:
        if e & 1:
            r *= x
        x *= x
        e >>= 1
    return r


cdef double _sphere_cost(double* th, Py_ssize_t m, const double* p, int k, double* w) nogil:
    cdef Py_ssize_t j
    cdef double tail = 1.0, c, s, x, num = 0.0, den = 0.0
    for j in range(m):
        c = cos(0.5 * th[j])
        s = sin(0.5 * th[j])
        w[j] = tail * c * c
        tail *= s * s
    w[m] = tail
    for j in range(m + 1):
        x = _ipow(w[j], 2 * k) * p[j]
        num += x * x
        den += x
    return num / (den * den)


def sphere_cost_batch(double[:, ::1] thetas, double[::1] spectrum, int k):
    cdef Py_ssize_t S = thetas.shape[0], m = thetas.shape[1], i
    if spectrum.shape[0] != m + 1:
        raise ValueError("spectrum length must be one more than the angle count")
    out = np.empty(S)
    cdef double[::1] o = out
    cdef double[::1] w = np.empty(m + 1)
    with nogil:
        for i in range(S):
            o[i] = _sphere_cost(&thetas[i, 0], m, &spectrum[0], k, &w[0])
    return out


def sphere_grad_batch(double[:, ::1] thetas, double[::1] spectrum, int k, double h):
    cdef Py_ssize_t S = thetas.shape[0], m = thetas.shape[1], i, j
    if spectrum.shape[0] != m + 1:
        raise ValueError("spectrum length must be one more than the angle count")
    out = np.empty(S)
    cdef double[::1] o = out
    cdef double[::1] w = np.empty(m + 1)
    cdef double[::1] t = np.empty(m)
    cdef double acc, orig, plus, minus
    with nogil:
        for i in range(S):
            for j in range(m):
                t[j] = thetas[i, j]
            acc = 0.0
            for j in range(m):
                orig = t[j]
                t[j] = orig + h
                plus = _sphere_cost(&t[0], m, &spectrum[0], k, &w[0])
                t[j] = orig - h
                minus = _sphere_cost(&t[0], m, &spectrum[0], k, &w[0])
                t[j] = orig
                acc += fabs(plus - minus) / (2.0 * h)
            o[i] = acc / m
    return out


cdef inline double _nd_ratio(double theta, double a, double b, double c) nogil:
    cdef double co = cos(0.5 * theta), si = sin(0.5 * theta)
    cdef double C = co * co, S = si * si, d = C + c * S
    return (C * C + b * C * S + a * S * S) / (d * d)


def correlated_grad_batch(double[::1] thetas, int n, double a, double b, double c, double h):
    cdef Py_ssize_t S = thetas.shape[0], i
    out = np.empty(S)
    cdef double[::1] o = out
    cdef double scale = 1.0 / _ipow(2.0, n)
    with nogil:
        for i in range(S):
            o[i] = fabs(
                scale * (_ipow(_nd_ratio(thetas[i] + h, a, b, c), n) - _ipow(_nd_ratio(thetas[i] - h, a, b, c), n))
            ) / (2.0 * h)
    return out


def product_grad_batch(double[:, ::1] thetas, double a, double b, double c, double h, int component=-1):
    cdef Py_ssize_t S = thetas.shape[0], n = thetas.shape[1], i, j, l
    out = np.empty(S)
    cdef double[::1] o = out
    cdef double[::1] r = np.empty(n)
    cdef double scale = 1.0 / _ipow(2.0, <int>n)
    cdef double rest, acc
    cdef Py_ssize_t lo = 0, hi = n
    if component >= 0:
        if component >= n:
            raise ValueError("component out of range")
        lo = component
        hi = component + 1
    with nogil:
        for i in range(S):
            for j in range(n):
                r[j] = _nd_ratio(thetas[i, j], a, b, c)
            acc = 0.0
            for j in range(lo, hi):
                rest = scale
                for l in range(n):
                    if l != j:
                        rest *= r[l]
                acc += fabs(rest * (_nd_ratio(thetas[i, j] + h, a, b, c) - _nd_ratio(thetas[i, j] - h, a, b, c))) / (2.0 * h)
            o[i] = acc / (hi - lo)
    return out
