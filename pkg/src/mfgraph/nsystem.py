"""Exact event-driven simulation of the coupled n-particle system.

State: node vector X in S_x^n, directed edge-color matrix Xi in S_xi^{n x n}
(diagonal included), and per-node aggregates A[i, y, x] = sum_j
gamma(y, x, X_j, Xi_ij) maintained incrementally so each candidate event is
thinned in O(1).  Node indices are 0-based here; PRM stream ids are 1-based,
node p reads stream ("node", p + 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .backend import get_kernels
from .model import ModelSpec
from .prm import StreamFamily

DEFAULT_EVENT_BUDGET = int(5e8)
_WINDOW_TARGET = 2_000_000  # events per processing window


class SimulationError(RuntimeError):
    pass


class BudgetExceededError(SimulationError):
    def __init__(self, expected, budget):
        super().__init__(
            f"expected candidate-event count {expected:.3g} exceeds the "
            f"event budget {budget:.3g}; raise the budget or shrink the run")
        self.expected = expected
        self.budget = budget


class ClosureViolationError(SimulationError):
    def __init__(self, kind, i, j, t):
        where = f"node {i}" if kind == "node" else f"edge ({i},{j})"
        super().__init__(f"jump at t={t} drives {where} off its state space")
        self.kind = kind
        self.i = i
        self.j = j
        self.t = t


@dataclass
class SystemState:
    spec: ModelSpec
    n: int
    t: float
    X: np.ndarray  # int16[n], state indices
    Xi: np.ndarray  # int16[n, n], color indices
    A: np.ndarray  # f8[n, n_y, n_sx]

    def node_values(self) -> np.ndarray:
        return self.spec.spaces.node_states[self.X.astype(np.int64)]

    def edge_values(self) -> np.ndarray:
        return self.spec.spaces.edge_states[self.Xi.astype(np.int64)]

    def copy(self) -> "SystemState":
        return SystemState(self.spec, self.n, self.t,
                           self.X.copy(), self.Xi.copy(), self.A.copy())


@dataclass
class TrajectoryLog:
    """Jump records (state values, not indices); times strictly increase
    per entity.  Node jumps cover nodes < tracked_nodes only."""

    spec: ModelSpec
    n: int
    t0: float
    t1: float
    tracked_nodes: int
    node_initial: np.ndarray  # values, all n nodes
    node_i: np.ndarray
    node_t: np.ndarray
    node_v: np.ndarray
    edges_logged: bool = False
    edge_initial: np.ndarray | None = None  # values [n, n] when logged
    edge_i: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    edge_j: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    edge_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    edge_v: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def node_path(self, i: int):
        """(times, values) of node i's piecewise-constant path on [t0, t1]."""
        if i >= self.tracked_nodes:
            raise ValueError(f"node {i} was not tracked (< {self.tracked_nodes})")
        sel = self.node_i == i
        times = np.concatenate(([self.t0], self.node_t[sel]))
        vals = np.concatenate(([self.node_initial[i]], self.node_v[sel]))
        return times, vals

    def edge_path(self, i: int, j: int):
        if not self.edges_logged:
            raise ValueError("edge jumps were not logged")
        sel = (self.edge_i == i) & (self.edge_j == j)
        times = np.concatenate(([self.t0], self.edge_t[sel]))
        vals = np.concatenate(([self.edge_initial[i, j]], self.edge_v[sel]))
        return times, vals

    def to_csv(self, path) -> None:
        """entity_kind,i,j,time,new_state; time-0 rows carry initial states."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["entity_kind", "i", "j", "time", "new_state"])
            for i in range(self.n):
                w.writerow(["node", i, "", repr(self.t0),
                            int(self.node_initial[i])])
            if self.edges_logged:
                for i in range(self.n):
                    for j in range(self.n):
                        w.writerow(["edge", i, j, repr(self.t0),
                                    int(self.edge_initial[i, j])])
            for k in range(self.node_t.size):
                w.writerow(["node", int(self.node_i[k]), "",
                            repr(float(self.node_t[k])), int(self.node_v[k])])
            for k in range(self.edge_t.size):
                w.writerow(["edge", int(self.edge_i[k]), int(self.edge_j[k]),
                            repr(float(self.edge_t[k])), int(self.edge_v[k])])


def sample_initial_indices(spec: ModelSpec, n: int, seed: int):
    """i.i.d. initial node/edge states, keyed per entity so they are shared
    across coupled systems of any size."""
    cum_mu = np.cumsum(spec.mu0)
    cum_th = np.cumsum(spec.theta0)
    ii = np.arange(1, n + 1, dtype=np.uint64)
    keys = rng.stream_key_np(seed, rng.KIND_NODE_INIT, ii, 0, 0)
    u = rng.draw_unit_np(keys, np.uint64(1))
    X = np.searchsorted(cum_mu, u, side="right").astype(np.int16)
    kk = rng.stream_key_np(seed, rng.KIND_EDGE_INIT,
                           ii[:, None], ii[None, :], 0)
    u2 = rng.draw_unit_np(kk, np.uint64(1))
    Xi = np.searchsorted(cum_th, u2, side="right").astype(np.int16)
    return X, Xi


def build_aggregates(spec: ModelSpec, X: np.ndarray, Xi: np.ndarray) -> np.ndarray:
    """A[i, y, x] = sum_j gamma[y, x, X_j, Xi_ij], via per-row pair counts."""
    sp = spec.spaces
    n = X.shape[0]
    flat = (X.astype(np.int64)[None, :] * sp.n_xi + Xi.astype(np.int64))
    M = np.zeros((n, sp.n_x * sp.n_xi))
    for i in range(n):
        M[i] = np.bincount(flat[i], minlength=sp.n_x * sp.n_xi)
    M = M.reshape(n, sp.n_x, sp.n_xi)
    return np.einsum("ive,yxve->iyx", M, spec.gamma)


def init(spec: ModelSpec, n: int, seed: int) -> SystemState:
    if n < 1:
        raise ValueError("n must be >= 1")
    X, Xi = sample_initial_indices(spec, n, seed)
    return SystemState(spec, n, 0.0, X, Xi, build_aggregates(spec, X, Xi))


def run(state: SystemState, family: StreamFamily, until: float,
        beta: float | None = None, tracked_nodes: int | None = None,
        log_edges: bool = False, snapshot_times=None,
        budget: float = DEFAULT_EVENT_BUDGET,
        check_aggregates: bool = False):
    """Advance the system to `until`, returning (state, TrajectoryLog).

    The state is advanced in place (and also returned).  Candidate events
    are read from `family`; the acceptance rate for edges is beta * Gamma~
    with beta defaulting to the model's schedule at this n.
    """
    spec = state.spec
    sp = spec.spaces
    n = state.n
    if until > family.horizon + 1e-12:
        raise ValueError(f"until={until} exceeds stream horizon {family.horizon}")
    if until < state.t:
        raise ValueError("cannot run backwards")
    if beta is None:
        beta = spec.beta(n)
    if beta > family.beta_ceiling + 1e-12:
        raise ValueError(f"beta={beta} exceeds the family ceiling "
                         f"{family.beta_ceiling}")
    expected = family.expected_candidates(n, state.t, until)
    if expected > budget:
        raise BudgetExceededError(expected, budget)

    if tracked_nodes is None:
        tracked_nodes = n
    tracked_nodes = min(tracked_nodes, n)
    snap = (np.empty(0) if snapshot_times is None
            else np.asarray(snapshot_times, dtype=np.float64))
    if snap.size and (np.any(np.diff(snap) < 0) or snap[0] < state.t
                      or snap[-1] > until + 1e-12):
        raise ValueError("snapshot times must be sorted within (t, until]")
    snap_counts = np.zeros((snap.size, sp.n_x), dtype=np.int64)

    kern = get_kernels()
    span = until - state.t
    rate_node = float(np.sum(family.rho * family.node_ceiling))
    rate_edge = float(np.sum(family.rho * family.edge_ceiling))
    node_cap = int(tracked_nodes * span * rate_node * 2 + 256)
    edge_cap = int(n * n * span * rate_edge * 1.2 + 256) if log_edges else 1
    # cap the window count so the per-window scan of all streams stays a
    # small fraction of the per-event work
    n_y = sp.n_y
    n_streams = n * n_y + (n * n * n_y if family.beta_ceiling > 0 else 0)
    max_windows = max(1, int(20.0 * expected / max(n_streams, 1)))
    n_windows = max(1, min(int(math.ceil(expected / _WINDOW_TARGET)),
                           max_windows))
    per_win = expected / n_windows
    win_cap = int(per_win * 1.35 + 12.0 * math.sqrt(per_win + 1.0) + 4096)

    pristine = (state.X.copy(), state.Xi.copy(), state.A.copy())
    node_init_vals = state.node_values().copy()
    edge_init_vals = state.edge_values().copy() if log_edges else None

    err = np.zeros(4)
    while True:
        nodelog_i = np.empty(node_cap, dtype=np.int32)
        nodelog_t = np.empty(node_cap)
        nodelog_s = np.empty(node_cap, dtype=np.int16)
        edgelog_i = np.empty(edge_cap, dtype=np.int32)
        edgelog_j = np.empty(edge_cap, dtype=np.int32)
        edgelog_t = np.empty(edge_cap)
        edgelog_s = np.empty(edge_cap, dtype=np.int16)
        status, n_nl, n_el = kern.run_system_kernel(
            np.uint64(family.seed), n, float(state.t), float(until),
            spec.gamma, spec.gamma_tilde,
            sp.node_targets(), sp.edge_targets(),
            family.rho, family.node_ceiling, family.edge_env,
            float(beta), float(family.beta_ceiling),
            state.X, state.Xi, state.A,
            tracked_nodes, nodelog_i, nodelog_t, nodelog_s,
            log_edges, edgelog_i, edgelog_j, edgelog_t, edgelog_s,
            snap, snap_counts,
            n_windows, win_cap,
            check_aggregates, err)
        if status == kern.STATUS_OK:
            break
        # restore and retry with bigger buffers, or raise
        state.X[:], state.Xi[:], state.A[:] = pristine
        if status == kern.STATUS_NODELOG_FULL:
            node_cap *= 4
        elif status == kern.STATUS_EDGELOG_FULL:
            edge_cap *= 4
        elif status == kern.STATUS_BUFFER_FULL:
            win_cap *= 2
        elif status == kern.STATUS_CLOSURE:
            kind = "node" if err[0] == 0.0 else "edge"
            raise ClosureViolationError(kind, int(err[1]) - 1,
                                        int(err[2]) - 1, err[3])
        else:
            raise SimulationError("incremental aggregates diverged from "
                                  "recomputation (debug check)")

    log = TrajectoryLog(
        spec=spec, n=n, t0=state.t, t1=until, tracked_nodes=tracked_nodes,
        node_initial=node_init_vals,
        node_i=nodelog_i[:n_nl].astype(np.int64),
        node_t=nodelog_t[:n_nl].copy(),
        node_v=sp.node_states[nodelog_s[:n_nl].astype(np.int64)],
        edges_logged=log_edges,
        edge_initial=edge_init_vals,
        edge_i=edgelog_i[:n_el].astype(np.int64),
        edge_j=edgelog_j[:n_el].astype(np.int64),
        edge_t=edgelog_t[:n_el].copy(),
        edge_v=sp.edge_states[edgelog_s[:n_el].astype(np.int64)],
    )
    state.t = until
    snapshots = (snap, snap_counts / float(n)) if snap.size else None
    return state, log, snapshots


def local_empirical(state: SystemState, i: int) -> np.ndarray:
    """nu_i^n as a matrix on S_x x S_xi: (1/n) sum_j delta(X_j, Xi_ij)."""
    sp = state.spec.spaces
    flat = state.X.astype(np.int64) * sp.n_xi + state.Xi[i].astype(np.int64)
    cnt = np.bincount(flat, minlength=sp.n_x * sp.n_xi)
    return cnt.reshape(sp.n_x, sp.n_xi) / float(state.n)


def global_empirical(state: SystemState) -> np.ndarray:
    """mu^n as a vector on S_x."""
    sp = state.spec.spaces
    cnt = np.bincount(state.X.astype(np.int64), minlength=sp.n_x)
    return cnt / float(state.n)


def snapshots_to_csv(path, times, dists, states) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"p_{int(s)}" for s in states])
        for k in range(len(times)):
            w.writerow([repr(float(times[k]))] + [repr(float(v))
                                                  for v in dists[k]])
