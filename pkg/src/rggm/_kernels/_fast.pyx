# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the incremental-update hot paths.

Operation-for-operation mirror of ``pure.py``; both backends must stay
bit-identical (same multiply/add order, libm scalar functions).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, log1p, sqrt

cnp.import_array()

DEF GUARD = 1e-12


cdef inline void _rank1(double[:, ::1] sigma, double[::1] u,
                        Py_ssize_t i, Py_ssize_t j, double c) noexcept nogil:
    cdef Py_ssize_t m = sigma.shape[0]
    cdef Py_ssize_t k, l
    for k in range(m):
        u[k] = sigma[k, i] - sigma[k, j]
    for k in range(m):
        for l in range(m):
            sigma[k, l] += c * (u[k] * u[l])


def gap_outer_update(double[:, ::1] sigma, Py_ssize_t i, Py_ssize_t j, double c):
    """In-place symmetric rank-1 update ``sigma += c * u u^T`` with
    ``u = sigma[:, i] - sigma[:, j]`` taken before the update."""
    cdef double[::1] u = np.empty(sigma.shape[0], dtype=np.float64)
    with nogil:
        _rank1(sigma, u, i, j, c)


def edge_sweep(double[:, ::1] sigma, cnp.uint8_t[::1] bits,
               cnp.int64_t[::1] ei, cnp.int64_t[::1] ej, double beta,
               double[::1] uniforms, cnp.int64_t[::1] order,
               double[::1] logdet_io):
    """One heat-bath sweep over edges in ``order``; see pure.edge_sweep."""
    cdef Py_ssize_t n_steps = order.shape[0]
    cdef double[::1] u = np.empty(sigma.shape[0], dtype=np.float64)
    cdef double logdet = logdet_io[0]
    cdef double d1, denom, d, q
    cdef Py_ssize_t t, k, i, j
    cdef long ops = 0
    cdef Py_ssize_t bad = -1
    cdef double bad_denom = 0.0
    with nogil:
        for t in range(n_steps):
            k = <Py_ssize_t> order[t]
            i = <Py_ssize_t> ei[k]
            j = <Py_ssize_t> ej[k]
            if bits[k]:
                d1 = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
                denom = 1.0 - beta * d1
                if denom <= GUARD:
                    bad = k
                    bad_denom = denom
                    break
                _rank1(sigma, u, i, j, beta / denom)
                logdet -= log(denom)
                bits[k] = 0
                ops += 1
            d = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
            q = 1.0 / (1.0 + sqrt(1.0 + beta * d))
            if uniforms[t] < q:
                _rank1(sigma, u, i, j, -(beta / (1.0 + beta * d)))
                logdet -= log1p(beta * d)
                bits[k] = 1
                ops += 1
    logdet_io[0] = logdet
    if bad >= 0:
        raise ArithmeticError(
            f"removal guard tripped at edge {bad}: 1 - beta*delta = {bad_denom}"
        )
    return ops


def gray_logdets(double[:, ::1] sigma, cnp.int64_t[::1] ei,
                 cnp.int64_t[::1] ej, double beta, double logdet0,
                 double[::1] out):
    """Gray-code walk over all 2^n configurations; see pure.gray_logdets."""
    cdef Py_ssize_t n = ei.shape[0]
    cdef unsigned long long total = 1ULL << n
    cdef cnp.uint8_t[::1] bits = np.zeros(n, dtype=np.uint8)
    cdef double[::1] u = np.empty(sigma.shape[0], dtype=np.float64)
    cdef double logdet = logdet0
    cdef double d1, denom, d
    cdef unsigned long long k, g = 0, low
    cdef Py_ssize_t b, i, j
    cdef long long bad = -1
    out[0] = logdet
    with nogil:
        for k in range(1, total):
            low = k & (~k + 1)
            b = 0
            while low > 1:
                low >>= 1
                b += 1
            i = <Py_ssize_t> ei[b]
            j = <Py_ssize_t> ej[b]
            if bits[b]:
                d1 = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
                denom = 1.0 - beta * d1
                if denom <= GUARD:
                    bad = <long long> k
                    break
                _rank1(sigma, u, i, j, beta / denom)
                logdet -= log(denom)
                bits[b] = 0
            else:
                d = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
                _rank1(sigma, u, i, j, -(beta / (1.0 + beta * d)))
                logdet -= log1p(beta * d)
                bits[b] = 1
            g ^= 1ULL << b
            out[g] = logdet
    if bad >= 0:
        raise ArithmeticError(f"removal guard tripped in Gray walk at step {bad}")
