# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cohort-selection kernels.

Bit-compatible with chainnet._kernels_py: identical score expression and
evaluation order (the build disables FP contraction so exact-tie breaking
agrees across backends).
"""

from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "compiled"


cdef inline double _score(double price, double lead, double rel,
                          double p_lo, double p_hi, double l_lo, double l_hi,
                          double w_price, double w_lead, double w_rel) noexcept nogil:
    cdef double norm_p = 1.0
    cdef double norm_l = 1.0
    if p_hi != p_lo:
        norm_p = (p_hi - price) / (p_hi - p_lo)
    if l_hi != l_lo:
        norm_l = (l_hi - lead) / (l_hi - l_lo)
    return w_price * norm_p + w_lead * norm_l + w_rel * rel


cdef Py_ssize_t _pick(const double* p, const double* l, const double* r,
                      const long long* rank, Py_ssize_t n,
                      double w_price, double w_lead, double w_rel) noexcept nogil:
    cdef Py_ssize_t i, best = 0
    cdef double p_lo = p[0], p_hi = p[0], l_lo = l[0], l_hi = l[0]
    cdef double score, best_score = 0.0
    cdef long long best_rank = 0
    for i in range(1, n):
        if p[i] < p_lo: p_lo = p[i]
        if p[i] > p_hi: p_hi = p[i]
        if l[i] < l_lo: l_lo = l[i]
        if l[i] > l_hi: l_hi = l[i]
    for i in range(n):
        score = _score(p[i], l[i], r[i], p_lo, p_hi, l_lo, l_hi,
                       w_price, w_lead, w_rel)
        if i == 0 or score > best_score or (score == best_score and rank[i] < best_rank):
            best = i
            best_score = score
            best_rank = rank[i]
    return best


def pick_best(prices, leads, rels, ranks, double w_price, double w_lead, double w_rel):
    """Index of the winning cohort member (same contract as the fallback)."""
    cdef Py_ssize_t n = len(prices)
    cdef Py_ssize_t i, best
    if n == 0:
        raise ValueError("empty cohort")
    cdef double* p = <double*> malloc(3 * n * sizeof(double))
    cdef long long* rk = <long long*> malloc(n * sizeof(long long))
    if p == NULL or rk == NULL:
        free(p); free(rk)
        raise MemoryError()
    try:
        for i in range(n):
            p[i] = prices[i]
            p[n + i] = leads[i]
            p[2 * n + i] = rels[i]
            rk[i] = ranks[i]
        best = _pick(p, p + n, p + 2 * n, rk, n, w_price, w_lead, w_rel)
    finally:
        free(p)
        free(rk)
    return best


def sweep_pick_best(double[:, ::1] attrs, signed char[:, ::1] combs,
                    double w_price, double w_lead, double w_rel):
    """Winning member position for each cohort row (same contract as the
    fallback); the per-cohort selection is the same routine pick_best uses."""
    cdef Py_ssize_t n = combs.shape[0]
    cdef Py_ssize_t k = combs.shape[1]
    cdef Py_ssize_t row, j, best
    cdef double p_lo, p_hi, l_lo, l_hi, score, best_score
    cdef double pj, lj
    cdef signed char idx
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] winners = out
    with nogil:
        for row in range(n):
            idx = combs[row, 0]
            p_lo = attrs[idx, 0]; p_hi = p_lo
            l_lo = attrs[idx, 1]; l_hi = l_lo
            for j in range(1, k):
                idx = combs[row, j]
                pj = attrs[idx, 0]
                lj = attrs[idx, 1]
                if pj < p_lo: p_lo = pj
                if pj > p_hi: p_hi = pj
                if lj < l_lo: l_lo = lj
                if lj > l_hi: l_hi = lj
            best = 0
            best_score = 0.0
            for j in range(k):
                idx = combs[row, j]
                score = _score(attrs[idx, 0], attrs[idx, 1], attrs[idx, 2],
                               p_lo, p_hi, l_lo, l_hi, w_price, w_lead, w_rel)
                if j == 0 or score > best_score:
                    best = j
                    best_score = score
            winners[row] = <signed char> best
    return out
