"""Built-in model instances for experiments and the verification suite.

All rate tables are clamped to zero wherever a jump would leave the finite
state space, and envelopes are tight (the per-mark maximum over both
kernels), so candidate streams carry no avoidable rejection mass.
"""

from __future__ import annotations

import numpy as np

from .model import (BaseMeasure, BetaSchedule, CltExampleSpec, EdgeKernel,
                    ModelSpec, NodeKernel, StateSpaces, build_clt_model)


def _tables(spaces: StateSpaces, node_rate, edge_rate):
    """Build closure-clamped dense tables from rate callables."""
    marks = spaces.jump_marks
    xs = spaces.node_states
    es = spaces.edge_states
    g = np.zeros((spaces.n_y, spaces.n_x, spaces.n_x, spaces.n_xi))
    gt = np.zeros((spaces.n_y, spaces.n_xi, spaces.n_x, spaces.n_x))
    node_ok = set(xs.tolist())
    edge_ok = set(es.tolist())
    for yi, y in enumerate(marks):
        for a, x in enumerate(xs):
            if int(x + y) not in node_ok:
                continue
            for b, xt in enumerate(xs):
                for c, e in enumerate(es):
                    g[yi, a, b, c] = node_rate(int(y), int(x), int(xt), int(e))
        for c, e in enumerate(es):
            if int(e + y) not in edge_ok:
                continue
            for a, x in enumerate(xs):
                for b, xt in enumerate(xs):
                    gt[yi, c, a, b] = edge_rate(int(y), int(e), int(x), int(xt))
    if g.min() < 0 or gt.min() < 0:
        raise ValueError("negative rate in preset tables")
    return g, gt


def _assemble(spaces, rho_masses, g, gt, beta, horizon, mu0, theta0):
    env = np.maximum(g.max(axis=(1, 2, 3)), gt.max(axis=(1, 2, 3)))
    return ModelSpec(spaces, BaseMeasure(rho_masses), NodeKernel(g, env),
                     EdgeKernel(gt), beta, horizon, mu0, theta0)


def demo_model(horizon: float = 3.0, beta=1.0) -> ModelSpec:
    """Default interacting test model.

    Nodes on {-1, 0, 1} jump by +-1; edge colors on {-2, 0, 2} jump by +-2,
    so the two kernels carry disjoint marks and each gets a tight envelope.
    Node rates react strongly to neighbor states and edge colors (high
    activity, cheap candidates); edge rates react to both endpoint nodes
    and carry a moderate envelope, which bounds the O(beta n^2) candidate
    volume."""
    spaces = StateSpaces([-1, 0, 1], [-2, 0, 2], [-2, -1, 1, 2])

    def node_rate(y, x, xt, e):
        if abs(y) != 1:
            return 0.0
        return 0.5 + 0.25 * y * xt + 0.20 * xt * (e / 2.0)

    def edge_rate(y, e, x, xt):
        if abs(y) != 2:
            return 0.0
        return 0.15 + 0.06 * (y / 2.0) * (x + xt)

    g, gt = _tables(spaces, node_rate, edge_rate)
    return _assemble(spaces, [0.1, 0.75, 0.75, 0.1], g, gt, beta, horizon,
                     [0.25, 0.5, 0.25], [0.2, 0.6, 0.2])


def demo_iid_model(horizon: float = 3.0) -> ModelSpec:
    """Same node kernel as demo_model but endpoint-independent edge rates,
    so edges are exogenous i.i.d. Markov colors."""
    spaces = StateSpaces([-1, 0, 1], [-2, 0, 2], [-2, -1, 1, 2])

    def node_rate(y, x, xt, e):
        if abs(y) != 1:
            return 0.0
        return 0.5 + 0.25 * y * xt + 0.20 * xt * (e / 2.0)

    def edge_rate(y, e, x, xt):
        if abs(y) != 2:
            return 0.0
        return 0.15 + 0.05 * (y / 2.0) * (e / 2.0)

    g, gt = _tables(spaces, node_rate, edge_rate)
    return _assemble(spaces, [0.1, 0.75, 0.75, 0.1], g, gt, 1.0, horizon,
                     [0.25, 0.5, 0.25], [0.2, 0.6, 0.2])


def autonomous_model(horizon: float = 1.0) -> ModelSpec:
    """Three-state single-particle chain: node rates depend only on own
    state, edges frozen; the node law solves a linear Kolmogorov equation."""
    spaces = StateSpaces([0, 1, 2], [0], [-1, 1])
    table = {(1, 0): 0.9, (1, 1): 0.5, (-1, 1): 0.3, (-1, 2): 0.7}

    def node_rate(y, x, xt, e):
        return table.get((y, x), 0.0)

    def edge_rate(y, e, x, xt):
        return 0.0

    g, gt = _tables(spaces, node_rate, edge_rate)
    env = np.maximum(g.max(axis=(1, 2, 3)), 1e-12)
    spec = ModelSpec(spaces, BaseMeasure([0.7, 1.1]), NodeKernel(g, env),
                     EdgeKernel(gt), 0.0, horizon, [1.0, 0.0, 0.0], [1.0])
    return spec


def clt_example_model(horizon: float = 1.0) -> ModelSpec:
    """Separable-rate fluctuation example: symmetric spaces, even base
    measure, odd neighbor/edge terms; rate bounded in [0.2, 0.95]."""
    spaces = StateSpaces(list(range(-4, 5)), [-1, 0, 1], [-1, 1])
    xs = spaces.node_states.astype(np.float64)
    clt = CltExampleSpec(
        c0=[0.1, 0.1],
        c1=[-0.2, 0.2],
        c2=[0.15, 0.15],
        c3=[0.5, 0.5],
        b0=1.0 - 0.5 * (xs / 4.0) ** 2,
        b1=xs / 4.0,
        b2=spaces.edge_states.astype(np.float64),
        epsilon=0.2,
    )

    def edge_rate(y, e, x, xt):
        return 0.30 + 0.10 * (x * x + xt * xt) / 32.0

    marks = spaces.jump_marks
    es = spaces.edge_states
    gt = np.zeros((spaces.n_y, spaces.n_xi, spaces.n_x, spaces.n_x))
    for yi, y in enumerate(marks):
        for c, e in enumerate(es):
            if int(e + y) not in set(es.tolist()):
                continue
            for a, x in enumerate(spaces.node_states):
                for b, xt in enumerate(spaces.node_states):
                    gt[yi, c, a, b] = edge_rate(int(y), int(e), int(x), int(xt))
    return build_clt_model(spaces, BaseMeasure([0.3, 0.3]), gt, 1.0,
                           horizon, clt)


def mixture_model(coupled: bool, horizon: float = 1.0,
                  beta: float = 0.5) -> ModelSpec:
    """Neighbor-edge fluctuation setups: nearly frozen nodes started from a
    spread law.  In the coupled variant the edge speed depends strongly on
    the endpoint node states, so the tagged node's path modulates the
    conditional variance (variance mixture); in the plain variant edges are
    i.i.d. and the fluctuation is asymptotically Gaussian."""
    spaces = StateSpaces([-1, 0, 1], [-1, 0, 1], [-1, 1])

    def node_rate(y, x, xt, e):
        return 0.05

    if coupled:
        def edge_rate(y, e, x, xt):
            return 0.04 + 0.80 * x * x + 0.08 * xt * xt
    else:
        def edge_rate(y, e, x, xt):
            return 0.35

    g, gt = _tables(spaces, node_rate, edge_rate)
    return _assemble(spaces, [0.3, 0.3], g, gt,
                     BetaSchedule("constant", beta), horizon,
                     [1 / 3, 1 / 3, 1 / 3], [0.0, 1.0, 0.0])


def random_edge_kernel_model(seed: int, n_states: int = 4,
                             low: float = 300.0, high: float = 900.0,
                             horizon: float = 200.0) -> ModelSpec:
    """Fast-mixing random birth-death edge chain on n_states colors; node
    dynamics frozen.  Used for stationarity verification."""
    gen = np.random.default_rng(seed)
    spaces = StateSpaces([0], list(range(n_states)), [-1, 1])
    g = np.zeros((2, 1, 1, n_states))
    gt = np.zeros((2, n_states, 1, 1))
    for yi, y in enumerate(spaces.jump_marks):
        for c, e in enumerate(spaces.edge_states):
            if 0 <= e + y < n_states:
                gt[yi, c, 0, 0] = gen.uniform(low, high)
    env = np.maximum(g.max(axis=(1, 2, 3)), gt.max(axis=(1, 2, 3)))
    theta0 = np.zeros(n_states)
    theta0[0] = 1.0
    return ModelSpec(spaces, BaseMeasure([1.0, 1.0]), NodeKernel(g, env),
                     EdgeKernel(gt), 1.0, horizon, [1.0], theta0)


def random_interacting_model(seed: int, horizon: float = 1.0) -> ModelSpec:
    """Random dense small model with strictly positive in-space rates;
    used for forward-equation conservation checks."""
    gen = np.random.default_rng(seed)
    spaces = StateSpaces([-1, 0, 1], [0, 1], [-1, 1])

    def node_rate(y, x, xt, e):
        return gen.uniform(0.1, 1.0)

    def edge_rate(y, e, x, xt):
        return gen.uniform(0.1, 1.0)

    g, gt = _tables(spaces, node_rate, edge_rate)
    mu0 = gen.dirichlet(np.ones(spaces.n_x))
    theta0 = gen.dirichlet(np.ones(spaces.n_xi))
    return _assemble(spaces, [0.5, 0.5], g, gt, 1.0, horizon, mu0, theta0)


PRESETS = {
    "demo": demo_model,
    "demo_iid": demo_iid_model,
    "autonomous": autonomous_model,
    "clt_example": clt_example_model,
    "mixture_coupled": lambda: mixture_model(True),
    "mixture_plain": lambda: mixture_model(False),
}


def get_preset(name: str) -> ModelSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return PRESETS[name]()
