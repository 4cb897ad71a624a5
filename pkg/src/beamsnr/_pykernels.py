"""Pure-Python reference implementations of the hot loops.

These define the semantics; ``_ckernels.pyx`` must reproduce them bit for bit.
"""

import numpy as np

SUM_SATURATED = 1
ACC_SATURATED = 2


def scan_boundary(p, gammas):
    """Single forward pass of the boundary search over sorted powers.

    Hit at the first ``m`` (1-based, ``m < M``) with a positive gap and
    ``m * (p[m] - p[m-1]) >= gammas[m-1] * S_m``. Returns
    ``(m_star, hit, S_mstar, S_M)``; without a hit ``m_star = M``.
    """
    p = list(map(float, p))
    g = list(map(float, gammas))
    M = len(p)
    s = 0.0
    hit = False
    m_star = M
    s_star = 0.0
    for m in range(1, M + 1):
        s += p[m - 1]
        if not hit and m < M:
            d = p[m] - p[m - 1]
            if d > 0.0 and m * d >= g[m - 1] * s:
                hit = True
                m_star = m
                s_star = s
    if not hit:
        s_star = s
    return m_star, hit, s_star, s


def scan_boundary_batch(P, gammas):
    """Vectorized :func:`scan_boundary` over the rows of ``P``."""
    P = np.ascontiguousarray(P, dtype=float)
    T, M = P.shape
    S = np.cumsum(P, axis=1)
    m = np.arange(1, M, dtype=float)
    D = P[:, 1:] - P[:, :-1]
    hits = (D > 0.0) & (m * D >= np.asarray(gammas, dtype=float) * S[:, :-1])
    hit = hits.any(axis=1)
    m_star = np.where(hit, hits.argmax(axis=1) + 1, M).astype(np.int64)
    s_star = S[np.arange(T), m_star - 1]
    return m_star, hit, s_star, S[:, -1].copy()


def systolic_sort(raw):
    """Value-level model of a systolic insertion sorter.

    One sample enters stage 0 per cycle; a stage holding a value keeps the
    smaller of (held, incoming) and forwards the larger to the next stage one
    cycle later. After loading, the pipeline flushes until nothing is in
    flight, then the held values are read out from stage 0 upward.

    Returns ``(sorted_values, (load_cycles, flush_cycles, output_cycles))``.
    """
    vals = [int(v) for v in raw]
    M = len(vals)
    held = [None] * M
    inflight = [None] * M
    load = flush = 0
    pos = 0
    while pos < M or any(v is not None for v in inflight):
        nxt = [None] * M
        if pos < M:
            inflight[0] = vals[pos]
            pos += 1
            load += 1
        else:
            flush += 1
        for i in range(M):
            v = inflight[i]
            if v is None:
                continue
            h = held[i]
            if h is None:
                held[i] = v
            elif v < h:
                held[i] = v
                nxt[i + 1] = h
            else:
                nxt[i + 1] = v
        inflight = nxt
    return np.array(held, dtype=np.int64), (load, flush, M)


def _shl_sat(v, k, vmax):
    if v > (vmax >> k):
        return vmax, True
    return v << k, False


def separate_fx(p, shifts, sum_max, acc_max, trace=None):
    """Integer separating unit.

    ``p`` holds ascending unsigned raw powers, ``shifts[m-1]`` the exponent
    ``z`` of the power-of-two threshold at index ``m``. The running sum
    saturates at ``sum_max``; both hit-test operands saturate at ``acc_max``.
    Negative ``z`` is applied as a left shift of ``m * delta`` so the test
    ``m * delta >= S_m * 2**z`` stays exact.

    ``trace``, if given, is called as ``trace(m, p_m, S_m, lhs, rhs, hit)`` once
    per index (``lhs``/``rhs`` are ``None`` where no test is made).

    Returns ``(m_star, hit, S_mstar, S_M, flags)``.
    """
    p = [int(v) for v in p]
    z = [int(v) for v in shifts]
    M = len(p)
    s = 0
    flags = 0
    hit = False
    m_star = M
    s_star = 0
    for m in range(1, M + 1):
        s += p[m - 1]
        if s > sum_max:
            s = sum_max
            flags |= SUM_SATURATED
        lhs = rhs = None
        if not hit and m < M:
            d = p[m] - p[m - 1]
            if d > 0:
                lhs = m * d
                rhs = s
                sat_l = sat_r = False
                if lhs > acc_max:
                    lhs, sat_l = acc_max, True
                if z[m - 1] >= 0:
                    rhs, sat_r = _shl_sat(rhs, z[m - 1], acc_max)
                else:
                    lhs, sat_l2 = _shl_sat(lhs, -z[m - 1], acc_max)
                    sat_l = sat_l or sat_l2
                if sat_l or sat_r:
                    flags |= ACC_SATURATED
                if lhs >= rhs:
                    hit = True
                    m_star = m
                    s_star = s
        if trace is not None:
            trace(m, p[m - 1], s, lhs, rhs, hit and m_star == m)
    if not hit:
        s_star = s
    return m_star, hit, s_star, s, flags
