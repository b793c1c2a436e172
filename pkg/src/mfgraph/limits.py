"""Solvers and samplers for the computable limiting systems.

  - stationary edge-color laws Q(x, x~, .) of the frozen-endpoint edge chain,
  - the quadratic (averaged-edge) forward equation for the node marginal,
  - the product-law forward equation for exogenous i.i.d. edge processes,
  - thinning samplers of both one-particle limit processes, driven by the
    same node PRM streams as the finite system,
  - a large finite reference system standing in for the fixed-speed limit,
    whose conditional edge law has no closed form.

All forward equations use fixed-step classical RK4 on a uniform grid; the
vector fields are polynomial in the state, so step-halving Richardson checks
the error order directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import nsystem
from .model import ModelSpec
from .prm import PrmStream, StreamFamily

DEFAULT_STEPS = 2000
STATIONARITY_TOL = 1e-10
SIMPLEX_TOL = 1e-8


class ReducibleChainError(ValueError):
    def __init__(self, context, classes):
        self.classes = classes
        super().__init__(
            f"edge chain {context} is reducible; communicating classes: "
            + ", ".join(str(sorted(c)) for c in classes))


@dataclass
class MarginalLaw:
    """Probability vectors over a state space on a uniform time grid."""

    times: np.ndarray  # K+1 grid points, times[0] = 0
    p: np.ndarray  # (K+1, n_states)

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation between grid points."""
        times = self.times
        if t <= times[0]:
            return self.p[0]
        if t >= times[-1]:
            return self.p[-1]
        k = int(np.searchsorted(times, t, side="right")) - 1
        h = times[k + 1] - times[k]
        w = (t - times[k]) / h
        return (1.0 - w) * self.p[k] + w * self.p[k + 1]

    def to_csv(self, path, states) -> None:
        nsystem.snapshots_to_csv(path, self.times, self.p, states)


# ---------------------------------------------------------------------------
# invariant measures of the frozen-endpoint edge chain
# ---------------------------------------------------------------------------

def edge_rate_matrix(spec: ModelSpec, x: int, x_tilde: int,
                     beta: float = 1.0) -> np.ndarray:
    """Generator of the edge-color chain with endpoints frozen at (x, x~);
    off-diagonal R[e, e'] = beta * rho(y) * gamma_tilde(y, e, x, x~) for
    e' = e + y."""
    sp = spec.spaces
    xi = sp.node_index(x)
    xti = sp.node_index(x_tilde)
    tgt = sp.edge_targets()
    R = np.zeros((sp.n_xi, sp.n_xi))
    for yi in range(sp.n_y):
        for e in range(sp.n_xi):
            e2 = tgt[yi, e]
            if e2 >= 0:
                R[e, e2] += beta * spec.rho.masses[yi] * \
                    spec.gamma_tilde[yi, e, xi, xti]
    np.fill_diagonal(R, R.diagonal() - R.sum(axis=1))
    return R


def invariant_measure(spec: ModelSpec, x: int, x_tilde: int) -> np.ndarray:
    """Unique stationary law pi of the frozen-endpoint edge chain.

    Raises ReducibleChainError when the chain has more than one
    communicating class (stationary law not unique)."""
    R = edge_rate_matrix(spec, x, x_tilde)
    m = R.shape[0]
    support = (R > 0).astype(np.int8)
    n_cc, labels = connected_components(csr_matrix(support), directed=True,
                                        connection="strong")
    if n_cc > 1:
        classes = [np.flatnonzero(labels == c).tolist() for c in range(n_cc)]
        raise ReducibleChainError(f"at endpoints ({x}, {x_tilde})", classes)
    scale = max(np.abs(R).max(), 1.0)
    A = np.vstack([R.T / scale, np.ones((1, m))])
    b = np.zeros(m + 1)
    b[m] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.abs(pi @ R).max())
    if residual > STATIONARITY_TOL:
        raise ArithmeticError(
            f"stationary solve residual {residual:.3e} > {STATIONARITY_TOL}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def invariant_measure_map(spec: ModelSpec) -> np.ndarray:
    """Q[x_idx, x~_idx, e_idx] over every endpoint pair."""
    sp = spec.spaces
    Q = np.empty((sp.n_x, sp.n_x, sp.n_xi))
    for a, x in enumerate(sp.node_states):
        for b, xt in enumerate(sp.node_states):
            Q[a, b] = invariant_measure(spec, int(x), int(xt))
    return Q


def invariant_map_to_csv(path, spec: ModelSpec, Q: np.ndarray) -> None:
    import csv as _csv

    sp = spec.spaces
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["x", "x_tilde", "xi", "mass"])
        for a, x in enumerate(sp.node_states):
            for b, xt in enumerate(sp.node_states):
                for c, e in enumerate(sp.edge_states):
                    w.writerow([int(x), int(xt), int(e), repr(float(Q[a, b, c]))])


# ---------------------------------------------------------------------------
# forward equations (fixed-step RK4)
# ---------------------------------------------------------------------------

def _rk4(field, p0: np.ndarray, horizon: float, steps: int):
    times = np.linspace(0.0, horizon, steps + 1)
    h = horizon / steps
    out = np.empty((steps + 1, p0.size))
    out[0] = p0
    p = p0.copy()
    for k in range(steps):
        t = times[k]
        k1 = field(t, p)
        k2 = field(t + 0.5 * h, p + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, p + 0.5 * h * k2)
        k4 = field(t + h, p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = p
    return times, out


def _check_simplex(p: np.ndarray, steps: int, horizon: float) -> None:
    worst_sum = float(np.abs(p.sum(axis=1) - 1.0).max())
    worst_neg = float(p.min())
    if worst_sum > SIMPLEX_TOL or worst_neg < -SIMPLEX_TOL:
        raise ArithmeticError(
            f"forward equation left the simplex (sum error {worst_sum:.2e}, "
            f"min entry {worst_neg:.2e}); retry with more than {steps} steps "
            f"over horizon {horizon}")


def averaged_flow_tensor(spec: ModelSpec, Q: np.ndarray) -> np.ndarray:
    """G[k, k2, x~] = rho(k2 - k) * sum_e gamma(k2-k, k, x~, e) Q[k, x~, e]:
    the node flow rate k -> k2 given a neighbor at x~, edges averaged."""
    sp = spec.spaces
    G = np.zeros((sp.n_x, sp.n_x, sp.n_x))
    tgt = sp.node_targets()
    for yi in range(sp.n_y):
        for a in range(sp.n_x):
            k2 = tgt[yi, a]
            if k2 < 0:
                continue
            # sum over edge colors of gamma * Q, leaving the neighbor free
            G[a, k2, :] += spec.rho.masses[yi] * np.einsum(
                "ve,ve->v", spec.gamma[yi, a], Q[a])
    return G


def forward_equation_accel(spec: ModelSpec, Q: np.ndarray,
                           steps: int = DEFAULT_STEPS,
                           horizon: float | None = None) -> MarginalLaw:
    """Marginal node law of the accelerated-edge limit: quadratic forward
    equation with edge colors averaged under Q."""
    if horizon is None:
        horizon = spec.horizon
    G = averaged_flow_tensor(spec, Q)

    def field(t, p):
        M = G @ p  # M[k, k2] = flow rate k -> k2 under neighbor law p
        return p @ M - p * M.sum(axis=1)

    times, p = _rk4(field, spec.mu0.astype(np.float64), horizon, steps)
    _check_simplex(p, steps, horizon)
    return MarginalLaw(times, p)


def edge_marginal_flow(spec: ModelSpec, beta: float,
                       steps: int = DEFAULT_STEPS,
                       horizon: float | None = None) -> MarginalLaw:
    """theta(t) for exogenous Markov edges; requires gamma_tilde independent
    of the endpoint nodes."""
    gt = spec.gamma_tilde
    if not (np.ptp(gt, axis=2).max() == 0.0 and np.ptp(gt, axis=3).max() == 0.0):
        raise ValueError("edge marginal flow needs endpoint-independent "
                         "edge rates")
    if horizon is None:
        horizon = spec.horizon
    R = edge_rate_matrix(spec, int(spec.spaces.node_states[0]),
                         int(spec.spaces.node_states[0]), beta=beta)

    def field(t, p):
        return R.T @ p

    times, p = _rk4(field, spec.theta0.astype(np.float64), horizon, steps)
    _check_simplex(p, steps, horizon)
    return MarginalLaw(times, p)


def forward_equation_iid(spec: ModelSpec, theta, steps: int = DEFAULT_STEPS,
                         horizon: float | None = None) -> MarginalLaw:
    """Marginal node law when edges are exogenous i.i.d. processes with
    marginal flow theta; the node rate integrates gamma against mu(t) x
    theta(t).

    theta may be a MarginalLaw (interpolated at RK4 substeps) or None, in
    which case it is produced from the model's edge chain at beta = beta(1)
    by joint integration."""
    sp = spec.spaces
    if horizon is None:
        horizon = spec.horizon
    tgt = sp.node_targets()

    if theta is None:
        if spec.beta.kind != "constant":
            raise ValueError("internal edge flow needs a constant beta")
        R = edge_rate_matrix(spec, int(sp.node_states[0]),
                             int(sp.node_states[0]), beta=spec.beta(1))
        gt = spec.gamma_tilde
        if not (np.ptp(gt, axis=2).max() == 0.0
                and np.ptp(gt, axis=3).max() == 0.0):
            raise ValueError("internal edge flow needs endpoint-independent "
                             "edge rates")
        n_x = sp.n_x

        def field(t, v):
            mu = v[:n_x]
            th = v[n_x:]
            dmu = _iid_node_field(spec, tgt, mu, th)
            return np.concatenate([dmu, R.T @ th])

        v0 = np.concatenate([spec.mu0, spec.theta0]).astype(np.float64)
        times, v = _rk4(field, v0, horizon, steps)
        mu = v[:, :n_x]
        _check_simplex(mu, steps, horizon)
        _check_simplex(v[:, n_x:], steps, horizon)
        return MarginalLaw(times, mu)

    def field(t, p):
        return _iid_node_field(spec, tgt, p, theta.at(t))

    times, p = _rk4(field, spec.mu0.astype(np.float64), horizon, steps)
    _check_simplex(p, steps, horizon)
    return MarginalLaw(times, p)


def _iid_node_field(spec: ModelSpec, tgt, mu, th):
    sp = spec.spaces
    dmu = np.zeros(sp.n_x)
    for yi in range(sp.n_y):
        # rate[x] = rho(y) * sum_{x~, e} gamma(y, x, x~, e) mu(x~) th(e)
        rate = spec.rho.masses[yi] * np.einsum("xve,v,e->x",
                                               spec.gamma[yi], mu, th)
        for a in range(sp.n_x):
            k2 = tgt[yi, a]
            if k2 < 0:
                continue
            flow = mu[a] * rate[a]
            dmu[a] -= flow
            dmu[k2] += flow
    return dmu


# ---------------------------------------------------------------------------
# limit-process samplers (PRM-coupled thinning)
# ---------------------------------------------------------------------------

def _thinning_path(stream: PrmStream, spec: ModelSpec, x0_idx: int,
                   until: float, rate_fn):
    """Generic thinning loop over one node stream; rate_fn(s, y_idx, x_idx)
    must stay within the stream's per-mark ceiling."""
    sp = spec.spaces
    tgt = sp.node_targets()
    s_arr, y_arr, z_arr = stream.events_between(0.0, until)
    times = [0.0]
    vals = [int(sp.node_states[x0_idx])]
    x = x0_idx
    for k in range(s_arr.size):
        yi = sp.mark_index(int(y_arr[k]))
        rate = rate_fn(float(s_arr[k]), yi, x)
        if rate > stream.ceiling[yi] + 1e-9:
            raise AssertionError(
                f"limit sampler rate {rate} exceeds ceiling "
                f"{stream.ceiling[yi]} for mark {y_arr[k]}")
        if z_arr[k] <= rate:
            xn = int(tgt[yi, x])
            if xn < 0:
                raise nsystem.ClosureViolationError("node", stream.id.i - 1,
                                                    -1, float(s_arr[k]))
            x = xn
            times.append(float(s_arr[k]))
            vals.append(int(sp.node_states[x]))
    return np.array(times), np.array(vals, dtype=np.int64)


def sample_accel_limit(spec: ModelSpec, Q: np.ndarray, mu: MarginalLaw,
                       stream: PrmStream, x0_idx: int,
                       until: float | None = None):
    """One path of the accelerated-edge limit process: thinning against
    sum_{x~, e} gamma(y, x, x~, e) mu_t(x~) Q[x, x~, e]."""
    if until is None:
        until = spec.horizon
    # r[y, x, x~] = sum_e gamma(y, x, x~, e) Q[x, x~, e]
    r = np.einsum("yxve,xve->yxv", spec.gamma, Q)

    def rate_fn(s, yi, x):
        return float(r[yi, x] @ mu.at(s))

    return _thinning_path(stream, spec, x0_idx, until, rate_fn)


def sample_iid_limit(spec: ModelSpec, mu: MarginalLaw, theta: MarginalLaw,
                     stream: PrmStream, x0_idx: int,
                     until: float | None = None):
    """One path of the i.i.d.-edge limit process: thinning against
    gamma integrated over mu_t x theta_t."""
    if until is None:
        until = spec.horizon

    def rate_fn(s, yi, x):
        return float(spec.gamma[yi, x] @ theta.at(s) @ mu.at(s))

    return _thinning_path(stream, spec, x0_idx, until, rate_fn)


def reference_limit_beta(spec: ModelSpec, n_ref: int, seed: int,
                         beta: float, until: float | None = None,
                         tracked_nodes: int = 10,
                         budget: float = nsystem.DEFAULT_EVENT_BUDGET):
    """Surrogate for the fixed-speed limit: the same system at size n_ref,
    sharing every stream with the smaller coupled systems.  Node paths of
    the first tracked_nodes nodes estimate their limit paths up to the
    surrogate's own O(1/sqrt(n_ref)) bias."""
    if until is None:
        until = spec.horizon
    family = StreamFamily(spec, seed, beta_ceiling=beta)
    state = nsystem.init(spec, n_ref, seed)
    state, log, _ = nsystem.run(state, family, until, beta=beta,
                                tracked_nodes=tracked_nodes, budget=budget)
    return state, log


# ---------------------------------------------------------------------------
# autonomous single-node chain (separable-rate experiments)
# ---------------------------------------------------------------------------

def autonomous_rate_table(spec: ModelSpec) -> np.ndarray:
    """r[y, x] = c0(y) b0(x) + c3(y), clamped at closure boundaries."""
    ce = spec.clt_example
    if ce is None:
        raise ValueError("model has no clt_example block")
    sp = spec.spaces
    r = ce.c0[:, None] * ce.b0[None, :] + ce.c3[:, None]
    return r * (sp.node_targets() >= 0)


def autonomous_forward_flow(spec: ModelSpec, steps: int = DEFAULT_STEPS,
                            horizon: float | None = None) -> MarginalLaw:
    """Linear forward equation of the autonomous chain with rate r[y, x]."""
    sp = spec.spaces
    if horizon is None:
        horizon = spec.horizon
    r = autonomous_rate_table(spec)
    R = np.zeros((sp.n_x, sp.n_x))
    tgt = sp.node_targets()
    for yi in range(sp.n_y):
        for a in range(sp.n_x):
            k2 = tgt[yi, a]
            if k2 >= 0:
                R[a, k2] += spec.rho.masses[yi] * r[yi, a]
    np.fill_diagonal(R, R.diagonal() - R.sum(axis=1))

    def field(t, p):
        return R.T @ p

    times, p = _rk4(field, spec.mu0.astype(np.float64), horizon, steps)
    _check_simplex(p, steps, horizon)
    return MarginalLaw(times, p)


def autonomous_second_moment(spec: ModelSpec, steps: int = DEFAULT_STEPS,
                             horizon: float | None = None) -> float:
    """E[X(T)^2] for the autonomous chain, from its forward equation."""
    flow = autonomous_forward_flow(spec, steps=steps, horizon=horizon)
    states = spec.spaces.node_states.astype(np.float64)
    return float(flow.p[-1] @ states**2)


def simulate_autonomous_grid(spec: ModelSpec, m: int, grid,
                             rng_: np.random.Generator) -> np.ndarray:
    """m i.i.d. autonomous-chain paths sampled at the given times (sorted).

    Exact: between grid points each chain takes Poisson candidates at the
    dominating rate, thinned by r(y, x)/env(y).  Returns values (m, K)."""
    sp = spec.spaces
    grid = np.asarray(grid, dtype=np.float64)
    r = autonomous_rate_table(spec)
    env = r.max(axis=1)
    lam = spec.rho.masses * env
    lam_tot = float(lam.sum())
    tgt = sp.node_targets()
    cum_mu = np.cumsum(spec.mu0)
    x = np.searchsorted(cum_mu, rng_.random(m), side="right").astype(np.int64)
    out = np.empty((m, grid.size), dtype=np.int64)
    if lam_tot <= 0.0:
        out[:] = x[:, None]
        return sp.node_states[out]
    cum_mark = np.cumsum(lam / lam_tot)
    t_next = rng_.exponential(1.0 / lam_tot, size=m)
    for gi in range(grid.size):
        tg = float(grid[gi])
        while True:
            live = t_next <= tg
            if not np.any(live):
                break
            idx = np.flatnonzero(live)
            yi = np.searchsorted(cum_mark, rng_.random(idx.size), side="right")
            u = rng_.random(idx.size)
            xi_cur = x[idx]
            accept = u * env[yi] <= r[yi, xi_cur]
            x2 = tgt[yi, xi_cur]
            ok = accept & (x2 >= 0)
            x[idx[ok]] = x2[ok]
            t_next[idx] = t_next[idx] + rng_.exponential(1.0 / lam_tot,
                                                         size=idx.size)
        out[:, gi] = x
    return sp.node_states[out]
