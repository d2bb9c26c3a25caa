# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: sparse row-vector evolution and truncated convolution.

Operators arrive as raw CSR arrays (``indptr``, ``indices``, ``data``) of a
row-stochastic matrix ``P``; a step maps the row vector ``x`` to ``x P``.
"""

import numpy as np

from libc.math cimport fabs


cdef inline void _step(const int[::1] indptr, const int[::1] indices,
                       const double[::1] data, const double[::1] x,
                       double[::1] y) noexcept nogil:
    cdef Py_ssize_t i, k, n = x.shape[0]
    cdef double xi
    for i in range(n):
        y[i] = 0.0
    for i in range(n):
        xi = x[i]
        if xi != 0.0:
            for k in range(indptr[i], indptr[i + 1]):
                y[indices[k]] += xi * data[k]


def evolve(const int[::1] indptr, const int[::1] indices, const double[::1] data,
           x0, Py_ssize_t steps):
    """Return ``x0 P^steps``."""
    cdef double[::1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] y = np.empty_like(x)
    cdef double[::1] tmp
    cdef Py_ssize_t s
    with nogil:
        for s in range(steps):
            _step(indptr, indices, data, x, y)
            tmp = x
            x = y
            y = tmp
    return np.asarray(x)


def evolve_tv_trace(const int[::1] indptr, const int[::1] indices, const double[::1] data,
                    x0, target, Py_ssize_t steps):
    """Return ``(x0 P^steps, tv)`` with ``tv[s] = TV(x0 P^s, target)`` for ``s = 0..steps``."""
    cdef double[::1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] y = np.empty_like(x)
    cdef const double[::1] pi = np.ascontiguousarray(target, dtype=np.float64)
    cdef double[::1] tv = np.empty(steps + 1)
    cdef double[::1] tmp
    cdef Py_ssize_t s, i, n = x.shape[0]
    cdef double acc
    with nogil:
        acc = 0.0
        for i in range(n):
            acc += fabs(x[i] - pi[i])
        tv[0] = 0.5 * acc
        for s in range(steps):
            _step(indptr, indices, data, x, y)
            tmp = x
            x = y
            y = tmp
            acc = 0.0
            for i in range(n):
                acc += fabs(x[i] - pi[i])
            tv[s + 1] = 0.5 * acc
    return np.asarray(x), np.asarray(tv)


def convolve_truncated(a, b, Py_ssize_t length):
    """First ``length`` terms of the convolution ``a * b``."""
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] out = np.zeros(length)
    cdef Py_ssize_t i, j, jmax, na = av.shape[0], nb = bv.shape[0]
    cdef double ai
    with nogil:
        while nb > 0 and bv[nb - 1] == 0.0:
            nb -= 1
        while na > 0 and av[na - 1] == 0.0:
            na -= 1
        for i in range(min(na, length)):
            ai = av[i]
            if ai == 0.0:
                continue
            jmax = min(nb, length - i)
            for j in range(jmax):
                out[i + j] += ai * bv[j]
    return np.asarray(out)
