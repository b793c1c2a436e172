"""Pure numpy/Python backend: reference implementation of the event kernel.

Materializes every candidate event up front, sorts once by (t, y, z, src),
and processes them in a Python loop using the same scalar arithmetic as the
numba kernel (libm log1p, identical update order), so both backends produce
bit-identical trajectories.  Intended for tests, small systems, and installs
without numba; large sweeps should run the numba backend.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng

STATUS_OK = 0
STATUS_CLOSURE = 1
STATUS_NODELOG_FULL = 2
STATUS_EDGELOG_FULL = 3
STATUS_AGG_MISMATCH = 4
STATUS_BUFFER_FULL = 5


def _walk_events(key: int, rate: float, lam: float, t_lo: float, t_hi: float):
    """Exponential walk of one (stream, mark): events in (t_lo, t_hi]."""
    ts, zs = [], []
    t = 0.0
    k = 0
    while True:
        u = rng.draw_unit(key, 2 * k + 1)
        t += -math.log1p(-u) / rate
        if t > t_hi:
            break
        if t > t_lo:
            ts.append(t)
            zs.append(lam * rng.draw_unit(key, 2 * k + 2))
        k += 1
    return ts, zs


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
    useed = int(seed) & rng.MASK64

    all_t, all_z, all_src = [], [], []
    for s in range(n_streams):
        yi = s % n_y
        if s < s_node:
            rate = rho[yi] * node_env[yi]
            lam = node_env[yi]
            key = rng.stream_key(useed, rng.KIND_NODE, s // n_y + 1, 0, yi)
        else:
            lam = beta_ceiling * edge_env[yi]
            rate = rho[yi] * lam
            pair = (s - s_node) // n_y
            key = rng.stream_key(useed, rng.KIND_EDGE,
                                 pair // n + 1, pair % n + 1, yi)
        if rate <= 0.0:
            continue
        ts, zs = _walk_events(key, rate, lam, t_start, t_end)
        all_t.extend(ts)
        all_z.extend(zs)
        all_src.extend([s] * len(ts))

    ev_t = np.array(all_t, dtype=np.float64)
    ev_z = np.array(all_z, dtype=np.float64)
    ev_src = np.array(all_src, dtype=np.int64)
    ev_y = ev_src % n_y
    order = np.lexsort((ev_src, ev_z, ev_y, ev_t))

    cnt = np.zeros(n_sx, dtype=np.int64)
    for p in range(n):
        cnt[X[p]] += 1

    n_nodelog = 0
    n_edgelog = 0
    sp = 0
    n_snap = snap_times.shape[0]

    for e in order:
        t = float(ev_t[e])
        while sp < n_snap and snap_times[sp] < t:
            snap_counts[sp, :] = cnt
            sp += 1
        s = int(ev_src[e])
        yi = s % n_y
        z = float(ev_z[e])
        if s < s_node:
            p = s // n_y
            xcur = int(X[p])
            if z <= A[p, yi, xcur] / fn:
                xn = int(node_tgt[yi, xcur])
                if xn < 0:
                    err_info[:] = (0.0, p + 1.0, 0.0, t)
                    return STATUS_CLOSURE, n_nodelog, n_edgelog
                col = Xi[:, p].astype(np.int64)
                A += gamma[:, :, xn, :][:, :, col].transpose(2, 0, 1) \
                    - gamma[:, :, xcur, :][:, :, col].transpose(2, 0, 1)
                X[p] = xn
                cnt[xcur] -= 1
                cnt[xn] += 1
                if p < log_node_limit:
                    if n_nodelog >= nodelog_i.shape[0]:
                        return STATUS_NODELOG_FULL, n_nodelog, n_edgelog
                    nodelog_i[n_nodelog] = p
                    nodelog_t[n_nodelog] = t
                    nodelog_s[n_nodelog] = xn
                    n_nodelog += 1
                if check_aggregates and not _aggregates_ok(gamma, X, Xi, A, n):
                    return STATUS_AGG_MISMATCH, n_nodelog, n_edgelog
        else:
            epair = (s - s_node) // n_y
            pi = epair // n
            pj = epair % n
            ecur = int(Xi[pi, pj])
            if z <= beta * gtilde[yi, ecur, X[pi], X[pj]]:
                en = int(edge_tgt[yi, ecur])
                if en < 0:
                    err_info[:] = (1.0, pi + 1.0, pj + 1.0, t)
                    return STATUS_CLOSURE, n_nodelog, n_edgelog
                xj = int(X[pj])
                A[pi] += gamma[:, :, xj, en] - gamma[:, :, xj, ecur]
                Xi[pi, pj] = en
                if log_edges:
                    if n_edgelog >= edgelog_i.shape[0]:
                        return STATUS_EDGELOG_FULL, n_nodelog, n_edgelog
                    edgelog_i[n_edgelog] = pi
                    edgelog_j[n_edgelog] = pj
                    edgelog_t[n_edgelog] = t
                    edgelog_s[n_edgelog] = en
                    n_edgelog += 1
                if check_aggregates and not _aggregates_ok(gamma, X, Xi, A, n):
                    return STATUS_AGG_MISMATCH, n_nodelog, n_edgelog

    while sp < n_snap:
        snap_counts[sp, :] = cnt
        sp += 1
    return STATUS_OK, n_nodelog, n_edgelog


def _aggregates_ok(gamma, X, Xi, A, n):
    ref = np.zeros_like(A)
    xl = X.astype(np.int64)
    for i in range(n):
        ref[i] = gamma[:, :, xl, Xi[i].astype(np.int64)].sum(axis=2)
    return bool(np.all(np.abs(ref - A) <= 1e-9 * (1.0 + np.abs(ref))))
