# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: batched uniform permutations and batched Jacobi spectra.

Both routines must stay bit-for-bit identical to :mod:`permstat._fallback`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint32_t, uint64_t, int64_t

cnp.import_array()

cdef uint64_t PCG_MULT = 6364136223846793005ULL
cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t splitmix64(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint32_t pcg_next(uint64_t* state, uint64_t inc) noexcept nogil:
    cdef uint64_t old = state[0]
    state[0] = old * PCG_MULT + inc
    cdef uint32_t xs = <uint32_t>(((old >> 18) ^ old) >> 27)
    cdef uint32_t rot = <uint32_t>(old >> 59)
    return (xs >> rot) | (xs << ((32 - rot) & 31))


cdef inline uint32_t pcg_bounded(uint64_t* state, uint64_t inc, uint32_t bound) noexcept nogil:
    # rejection below 2**32 mod bound; the accepted range is a multiple of bound
    cdef uint32_t threshold = (<uint32_t>(0 - bound)) % bound
    cdef uint32_t r
    while True:
        r = pcg_next(state, inc)
        if r >= threshold:
            return r % bound


def permutation_batch(int n, uint64_t seed, uint64_t stream, uint64_t start, int count):
    cdef cnp.ndarray[int64_t, ndim=2] out = np.empty((count, n), dtype=np.int64)
    cdef int64_t[:, :] view = out
    cdef int b, i, j
    cdef int64_t tmp
    cdef uint64_t state, inc, sub
    with nogil:
        for b in range(count):
            sub = splitmix64(stream * GOLDEN + start + <uint64_t>b)
            inc = (sub << 1) | 1
            state = 0
            state = state * PCG_MULT + inc
            state = state + seed
            state = state * PCG_MULT + inc
            for i in range(n):
                view[b, i] = i
            for i in range(n - 1, 0, -1):
                j = <int>pcg_bounded(&state, inc, <uint32_t>(i + 1))
                tmp = view[b, i]
                view[b, i] = view[b, j]
                view[b, j] = tmp
    return out


cdef void _jacobi_one(double[:, :] a, int d, double tol, int max_sweeps) noexcept nogil:
    cdef int sweep, p, q, r
    cdef double fro2 = 0.0, off, apq, theta, t, c, s, tau, arp, arq
    for p in range(d):
        for q in range(d):
            fro2 = fro2 + a[p, q] * a[p, q]
    if fro2 == 0.0:
        return
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                off = off + a[p, q] * a[p, q]
        if 2.0 * off <= tol * tol * fro2:
            return
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = a[p, p] - t * apq
                a[q, q] = a[q, q] + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(d):
                    if r == p or r == q:
                        continue
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = arp - s * (arq + tau * arp)
                    a[r, q] = arq + s * (arp - tau * arq)
                    a[p, r] = a[r, p]
                    a[q, r] = a[r, q]


def jacobi_eigvals_batch(const double[:, :, :] mats, double tol, int max_sweeps):
    cdef int count = mats.shape[0]
    cdef int d = mats.shape[1]
    work_arr = np.array(mats, dtype=np.float64, copy=True)
    cdef double[:, :, :] work = work_arr
    out_arr = np.empty((count, d), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef int b, i
    with nogil:
        for b in range(count):
            _jacobi_one(work[b], d, tol, max_sweeps)
            for i in range(d):
                out[b, i] = work[b, i, i]
    return out_arr
