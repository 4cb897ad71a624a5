# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``; same semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

cdef enum:
    SUM_SATURATED = 1
    ACC_SATURATED = 2


cdef inline void _scan(const double[::1] p, const double[::1] g, Py_ssize_t M,
                       int64_t* m_star, bint* hit, double* s_star, double* s_tot) noexcept nogil:
    cdef double s = 0.0, d
    cdef Py_ssize_t m
    hit[0] = False
    m_star[0] = M
    s_star[0] = 0.0
    for m in range(1, M + 1):
        s += p[m - 1]
        if not hit[0] and m < M:
            d = p[m] - p[m - 1]
            if d > 0.0 and <double>m * d >= g[m - 1] * s:
                hit[0] = True
                m_star[0] = m
                s_star[0] = s
    if not hit[0]:
        s_star[0] = s
    s_tot[0] = s


def scan_boundary(p, gammas):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef int64_t m_star
    cdef bint hit
    cdef double s_star, s_tot
    _scan(pv, gv, pv.shape[0], &m_star, &hit, &s_star, &s_tot)
    return int(m_star), bool(hit), s_star, s_tot


def scan_boundary_batch(P, gammas):
    cdef const double[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef Py_ssize_t T = Pv.shape[0], M = Pv.shape[1], t
    m_star = np.empty(T, dtype=np.int64)
    hit = np.empty(T, dtype=bool)
    s_star = np.empty(T, dtype=np.float64)
    s_tot = np.empty(T, dtype=np.float64)
    cdef int64_t[::1] ms = m_star
    cdef cnp.npy_bool[::1] hv = hit
    cdef double[::1] ss = s_star, st = s_tot
    cdef bint h
    with nogil:
        for t in range(T):
            _scan(Pv[t], gv, M, &ms[t], &h, &ss[t], &st[t])
            hv[t] = h
    return m_star, hit, s_star, s_tot


def systolic_sort(raw):
    cdef int64_t[::1] vals = np.ascontiguousarray(raw, dtype=np.int64).copy()
    cdef Py_ssize_t M = vals.shape[0], i, pos = 0, n_inflight = 0
    out = np.zeros(M, dtype=np.int64)
    cdef int64_t[::1] held = out
    cdef int64_t[::1] infl = np.zeros(M + 1, dtype=np.int64)
    cdef int64_t[::1] nxt = np.zeros(M + 1, dtype=np.int64)
    cdef cnp.uint8_t[::1] held_ok = np.zeros(M, dtype=np.uint8)
    cdef cnp.uint8_t[::1] infl_ok = np.zeros(M + 1, dtype=np.uint8)
    cdef cnp.uint8_t[::1] nxt_ok = np.zeros(M + 1, dtype=np.uint8)
    cdef long load = 0, flush = 0
    cdef int64_t v, h
    with nogil:
        while pos < M or n_inflight > 0:
            for i in range(M + 1):
                nxt_ok[i] = 0
            if pos < M:
                infl[0] = vals[pos]
                infl_ok[0] = 1
                pos += 1
                load += 1
            else:
                flush += 1
            n_inflight = 0
            for i in range(M):
                if not infl_ok[i]:
                    continue
                v = infl[i]
                if not held_ok[i]:
                    held[i] = v
                    held_ok[i] = 1
                    continue
                h = held[i]
                if v < h:
                    held[i] = v
                    nxt[i + 1] = h
                else:
                    nxt[i + 1] = v
                nxt_ok[i + 1] = 1
                n_inflight += 1
            for i in range(M + 1):
                infl[i] = nxt[i]
                infl_ok[i] = nxt_ok[i]
    return out, (int(load), int(flush), int(M))


cdef inline int64_t _shl_sat(int64_t v, int k, int64_t vmax, bint* sat) noexcept nogil:
    if v > (vmax >> k):
        sat[0] = True
        return vmax
    return v << k


def separate_fx(p, shifts, int64_t sum_max, int64_t acc_max):
    cdef const int64_t[::1] pv = np.ascontiguousarray(p, dtype=np.int64)
    cdef const int64_t[::1] zv = np.ascontiguousarray(shifts, dtype=np.int64)
    cdef Py_ssize_t M = pv.shape[0], m
    cdef int64_t s = 0, d, lhs, rhs, s_star = 0, m_star = M
    cdef int flags = 0
    cdef bint hit = False, sat
    with nogil:
        for m in range(1, M + 1):
            s += pv[m - 1]
            if s > sum_max:
                s = sum_max
                flags |= SUM_SATURATED
            if not hit and m < M:
                d = pv[m] - pv[m - 1]
                if d > 0:
                    sat = False
                    lhs = m * d
                    rhs = s
                    if lhs > acc_max:
                        lhs = acc_max
                        sat = True
                    if zv[m - 1] >= 0:
                        rhs = _shl_sat(rhs, <int>zv[m - 1], acc_max, &sat)
                    else:
                        lhs = _shl_sat(lhs, <int>(-zv[m - 1]), acc_max, &sat)
                    if sat:
                        flags |= ACC_SATURATED
                    if lhs >= rhs:
                        hit = True
                        m_star = m
                        s_star = s
    if not hit:
        s_star = s
    return int(m_star), bool(hit), int(s_star), int(s), int(flags)
