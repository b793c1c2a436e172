"""Numba backend: event-driven n-particle kernel.

Candidate events are generated stream-by-stream as exponential walks off the
counter-based generator, collected window by window into packed 32-byte
records, sorted by a two-level bucket sort (coarse scatter, then per-bucket
fine counting sort + insertion, all cache-resident), and processed in global
(t, y, z, src) order with incremental rate aggregates.  Semantics match
kernels_numpy bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U11 = np.uint64(11)
U27 = np.uint64(27)
U30 = np.uint64(30)
U31 = np.uint64(31)
UG = np.uint64(0x9E3779B97F4A7C15)
UM1 = np.uint64(0xBF58476D1CE4E5B9)
UM2 = np.uint64(0x94D049BB133111EB)
U1 = np.uint64(1)
U2 = np.uint64(2)
UNIT = 2.0 ** -53

STATUS_OK = 0
STATUS_CLOSURE = 1
STATUS_NODELOG_FULL = 2
STATUS_EDGELOG_FULL = 3
STATUS_AGG_MISMATCH = 4
STATUS_BUFFER_FULL = 5

_COARSE = 256  # coarse buckets per window

# packed event record: [time, z, src, meta]; meta = (ei << 27) | ((ej+1) << 6) | yi
_FT, _FZ, _FSRC, _FMETA = 0, 1, 2, 3


@njit(inline="always")
def _fin(z):
    z = (z ^ (z >> U30)) * UM1
    z = (z ^ (z >> U27)) * UM2
    return z ^ (z >> U31)


@njit(inline="always")
def _draw_unit(key, c):
    return float(_fin(key + UG * c) >> U11) * UNIT


@njit(inline="always")
def _skey(seed, kind, a, b, mark):
    k = _fin(seed + UG * kind)
    k = _fin(k + UG * (a + U1))
    k = _fin(k + UG * (b + U1))
    return _fin(k + UG * (mark + U1))


@njit(inline="always")
def _first_arrival(stt, s, useed, kind, a, b, yi, rate, t_start):
    if rate <= 0.0:
        stt[s, 0] = np.inf
        stt[s, 1] = 0.0
        return
    key = _skey(useed, kind, np.uint64(a), np.uint64(b), np.uint64(yi))
    u = _draw_unit(key, U1)
    t = -math.log1p(-u) / rate
    k = 0
    while t <= t_start:  # consume events already applied before t_start
        k += 1
        u = _draw_unit(key, U2 * np.uint64(k) + U1)
        t += -math.log1p(-u) / rate
    stt[s, 0] = t
    stt[s, 1] = float(k)


@njit(inline="always")
def _rec_after(buf, c, te, ye, ze, se):
    """True iff record c must come strictly after key (te, ye, ze, se)."""
    tf = buf[c, _FT]
    if tf > te:
        return True
    if tf < te:
        return False
    yf = int(buf[c, _FMETA]) & 63
    if yf > ye:
        return True
    if yf < ye:
        return False
    zf = buf[c, _FZ]
    if zf > ze:
        return True
    if zf < ze:
        return False
    return buf[c, _FSRC] > se


@njit(cache=True, nogil=True)
def run_system_kernel(seed, n, t_start, t_end,
                      gamma, gtilde, node_tgt, edge_tgt, rho,
                      node_env, edge_env,
                      beta, beta_ceiling,
                      X, Xi, A,
                      log_node_limit, nodelog_i, nodelog_t, nodelog_s,
                      log_edges, edgelog_i, edgelog_j, edgelog_t, edgelog_s,
                      snap_times, snap_counts,
                      n_windows, max_window_events,
                      check_aggregates, err_info):
    n_y = gamma.shape[0]
    n_sx = gamma.shape[1]
    s_node = n * n_y
    has_edges = beta_ceiling > 0.0
    n_streams = s_node + (n * n * n_y if has_edges else 0)
    fn = float(n)
    useed = np.uint64(seed)
    span = t_end - t_start

    node_rate = np.empty(n_y)
    edge_rate = np.empty(n_y)
    edge_ceil = np.empty(n_y)
    for yi in range(n_y):
        node_rate[yi] = rho[yi] * node_env[yi]
        edge_ceil[yi] = beta_ceiling * edge_env[yi]
        edge_rate[yi] = rho[yi] * edge_ceil[yi]

    # stream walk state: [:, 0] next event time, [:, 1] events emitted (as f8)
    stt = np.empty((n_streams, 2))
    s = 0
    for p in range(n):
        for yi in range(n_y):
            _first_arrival(stt, s, useed, U1, p + 1, 0, yi, node_rate[yi],
                           t_start)
            s += 1
    if has_edges:
        for pi in range(n):
            for pj in range(n):
                for yi in range(n_y):
                    _first_arrival(stt, s, useed, U2, pi + 1, pj + 1, yi,
                                   edge_rate[yi], t_start)
                    s += 1

    cnt = np.zeros(n_sx, dtype=np.int64)
    for p in range(n):
        cnt[X[p]] += 1

    ev = np.empty((max_window_events, 4))
    sv = np.empty((max_window_events, 4))
    c1 = np.empty(_COARSE + 1, dtype=np.int64)
    cur = np.empty(_COARSE, dtype=np.int64)
    c2 = np.zeros(max_window_events // 3 + 2, dtype=np.int64)

    n_nodelog = 0
    n_edgelog = 0
    sp = 0
    n_snap = snap_times.shape[0]

    for w in range(n_windows):
        w1 = t_end if w == n_windows - 1 else t_start + span * (w + 1) / n_windows
        w0 = t_start + span * w / n_windows

        # ---- generate candidates with next arrival in (w0, w1] --------------
        m = 0
        s = 0
        for p in range(n):
            for yi in range(n_y):
                if stt[s, 0] <= w1:
                    key = _skey(useed, U1, np.uint64(p + 1), np.uint64(0),
                                np.uint64(yi))
                    meta = float((p << 27) | yi)
                    rate = node_rate[yi]
                    lam = node_env[yi]
                    t = stt[s, 0]
                    k = np.uint64(stt[s, 1])
                    fs = float(s)
                    while t <= w1:
                        if m >= max_window_events:
                            return STATUS_BUFFER_FULL, n_nodelog, n_edgelog
                        ev[m, _FT] = t
                        ev[m, _FZ] = lam * _draw_unit(key, U2 * k + U2)
                        ev[m, _FSRC] = fs
                        ev[m, _FMETA] = meta
                        m += 1
                        k += U1
                        u = _draw_unit(key, U2 * k + U1)
                        t += -math.log1p(-u) / rate
                    stt[s, 0] = t
                    stt[s, 1] = float(k)
                s += 1
        if has_edges:
            for pi in range(n):
                for pj in range(n):
                    for yi in range(n_y):
                        if stt[s, 0] <= w1:
                            key = _skey(useed, U2, np.uint64(pi + 1),
                                        np.uint64(pj + 1), np.uint64(yi))
                            meta = float((pi << 27) | ((pj + 1) << 6) | yi)
                            rate = edge_rate[yi]
                            lam = edge_ceil[yi]
                            t = stt[s, 0]
                            k = np.uint64(stt[s, 1])
                            fs = float(s)
                            while t <= w1:
                                if m >= max_window_events:
                                    return (STATUS_BUFFER_FULL, n_nodelog,
                                            n_edgelog)
                                ev[m, _FT] = t
                                ev[m, _FZ] = lam * _draw_unit(key, U2 * k + U2)
                                ev[m, _FSRC] = fs
                                ev[m, _FMETA] = meta
                                m += 1
                                k += U1
                                u = _draw_unit(key, U2 * k + U1)
                                t += -math.log1p(-u) / rate
                            stt[s, 0] = t
                            stt[s, 1] = float(k)
                        s += 1

        # ---- coarse scatter by time into _COARSE ordered regions ------------
        b1inv = _COARSE / (w1 - w0) if w1 > w0 else 0.0
        for b in range(_COARSE + 1):
            c1[b] = 0
        for e in range(m):
            b = int((ev[e, _FT] - w0) * b1inv)
            if b >= _COARSE:
                b = _COARSE - 1
            c1[b + 1] += 1
        for b in range(1, _COARSE + 1):
            c1[b] += c1[b - 1]
        for b in range(_COARSE):
            cur[b] = c1[b]
        for e in range(m):
            b = int((ev[e, _FT] - w0) * b1inv)
            if b >= _COARSE:
                b = _COARSE - 1
            q = cur[b]
            cur[b] = q + 1
            sv[q, 0] = ev[e, 0]
            sv[q, 1] = ev[e, 1]
            sv[q, 2] = ev[e, 2]
            sv[q, 3] = ev[e, 3]

        # ---- per coarse bucket: fine sort in cache, then process ------------
        cw = (w1 - w0) / _COARSE
        for b in range(_COARSE):
            lo = c1[b]
            hi = c1[b + 1]
            mb = hi - lo
            if mb == 0:
                continue
            b0 = w0 + b * cw
            n2 = mb // 3 + 1
            f2inv = n2 / cw if cw > 0.0 else 0.0
            for f in range(n2 + 1):
                c2[f] = 0
            for q in range(lo, hi):
                f = int((sv[q, _FT] - b0) * f2inv)
                if f >= n2:
                    f = n2 - 1
                elif f < 0:
                    f = 0
                c2[f + 1] += 1
            for f in range(1, n2 + 1):
                c2[f] += c2[f - 1]
            for q in range(lo, hi):
                f = int((sv[q, _FT] - b0) * f2inv)
                if f >= n2:
                    f = n2 - 1
                elif f < 0:
                    f = 0
                d = lo + c2[f]
                c2[f] = c2[f] + 1
                ev[d, 0] = sv[q, 0]
                ev[d, 1] = sv[q, 1]
                ev[d, 2] = sv[q, 2]
                ev[d, 3] = sv[q, 3]
            # c2[f] now holds end offsets; insertion-sort each fine bucket
            prev = 0
            for f in range(n2):
                flo = lo + prev
                fhi = lo + c2[f]
                prev = c2[f]
                for a_ in range(flo + 1, fhi):
                    te = ev[a_, _FT]
                    ze = ev[a_, _FZ]
                    se = ev[a_, _FSRC]
                    me = ev[a_, _FMETA]
                    ye = int(me) & 63
                    c = a_ - 1
                    while c >= flo and _rec_after(ev, c, te, ye, ze, se):
                        c -= 1
                    c += 1
                    if c < a_:
                        for mv in range(a_, c, -1):
                            ev[mv, 0] = ev[mv - 1, 0]
                            ev[mv, 1] = ev[mv - 1, 1]
                            ev[mv, 2] = ev[mv - 1, 2]
                            ev[mv, 3] = ev[mv - 1, 3]
                        ev[c, 0] = te
                        ev[c, 1] = ze
                        ev[c, 2] = se
                        ev[c, 3] = me

            # ---- process this bucket while it is cache-resident -------------
            for a_ in range(lo, hi):
                t = ev[a_, _FT]
                while sp < n_snap and snap_times[sp] < t:
                    for xx in range(n_sx):
                        snap_counts[sp, xx] = cnt[xx]
                    sp += 1
                z = ev[a_, _FZ]
                mi = int(ev[a_, _FMETA])
                yi = mi & 63
                ejp = (mi >> 6) & 0x1FFFFF
                pi = mi >> 27
                if ejp == 0:
                    xcur = X[pi]
                    if z <= A[pi, yi, xcur] / fn:
                        xn = node_tgt[yi, xcur]
                        if xn < 0:
                            err_info[0] = 0.0
                            err_info[1] = pi + 1.0
                            err_info[2] = 0.0
                            err_info[3] = t
                            return STATUS_CLOSURE, n_nodelog, n_edgelog
                        for kk in range(n):
                            ee = Xi[kk, pi]
                            for yy in range(n_y):
                                for xx in range(n_sx):
                                    A[kk, yy, xx] += (gamma[yy, xx, xn, ee]
                                                      - gamma[yy, xx, xcur, ee])
                        X[pi] = xn
                        cnt[xcur] -= 1
                        cnt[xn] += 1
                        if pi < log_node_limit:
                            if n_nodelog >= nodelog_i.shape[0]:
                                return (STATUS_NODELOG_FULL, n_nodelog,
                                        n_edgelog)
                            nodelog_i[n_nodelog] = pi
                            nodelog_t[n_nodelog] = t
                            nodelog_s[n_nodelog] = xn
                            n_nodelog += 1
                        if check_aggregates:
                            if not _aggregates_ok(gamma, X, Xi, A, n):
                                return (STATUS_AGG_MISMATCH, n_nodelog,
                                        n_edgelog)
                else:
                    pj = ejp - 1
                    ecur = Xi[pi, pj]
                    if z <= beta * gtilde[yi, ecur, X[pi], X[pj]]:
                        en = edge_tgt[yi, ecur]
                        if en < 0:
                            err_info[0] = 1.0
                            err_info[1] = pi + 1.0
                            err_info[2] = pj + 1.0
                            err_info[3] = t
                            return STATUS_CLOSURE, n_nodelog, n_edgelog
                        xj = X[pj]
                        for yy in range(n_y):
                            for xx in range(n_sx):
                                A[pi, yy, xx] += (gamma[yy, xx, xj, en]
                                                  - gamma[yy, xx, xj, ecur])
                        Xi[pi, pj] = en
                        if log_edges:
                            if n_edgelog >= edgelog_i.shape[0]:
                                return (STATUS_EDGELOG_FULL, n_nodelog,
                                        n_edgelog)
                            edgelog_i[n_edgelog] = pi
                            edgelog_j[n_edgelog] = pj
                            edgelog_t[n_edgelog] = t
                            edgelog_s[n_edgelog] = en
                            n_edgelog += 1
                        if check_aggregates:
                            if not _aggregates_ok(gamma, X, Xi, A, n):
                                return (STATUS_AGG_MISMATCH, n_nodelog,
                                        n_edgelog)

    while sp < n_snap:
        for xx in range(n_sx):
            snap_counts[sp, xx] = cnt[xx]
        sp += 1
    return STATUS_OK, n_nodelog, n_edgelog


@njit(cache=True, nogil=True)
def _aggregates_ok(gamma, X, Xi, A, n):
    n_y = gamma.shape[0]
    n_sx = gamma.shape[1]
    for i in range(n):
        for yy in range(n_y):
            for xx in range(n_sx):
                acc = 0.0
                for j in range(n):
                    acc += gamma[yy, xx, X[j], Xi[i, j]]
                if abs(acc - A[i, yy, xx]) > 1e-9 * (1.0 + abs(acc)):
                    return False
    return True
