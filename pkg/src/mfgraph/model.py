"""Model definitions: finite state spaces, jump kernels, and validation.

A model instance consists of
  - node states S_x, edge colors S_xi, jump marks Y (finite sets of integers),
  - a base measure rho on Y (positive atom masses),
  - a node jump-rate table gamma(y, x, x~, xi~) with per-mark envelope,
  - an edge jump-rate table gamma_tilde(y, xi~, x, x~) under the same envelope,
  - an edge speed schedule beta(n), a horizon T, and initial laws mu0, theta0.

Rate tables are dense ndarrays in index space; helpers translate between
state values and indices.  Instances are immutable after construction and
safe to share across worker threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
NU_SUM_TOL = 1e-9


def _as_value_array(values: Sequence[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("state space must be a nonempty 1-d integer collection")
    if len(set(arr.tolist())) != arr.size:
        raise ValueError("state space elements must be distinct")
    return np.sort(arr)


@dataclass(frozen=True)
class StateSpaces:
    """Ordered finite node states, edge colors, and nonzero jump marks."""

    node_states: np.ndarray
    edge_states: np.ndarray
    jump_marks: np.ndarray

    def __init__(self, node_states, edge_states, jump_marks):
        object.__setattr__(self, "node_states", _as_value_array(node_states))
        object.__setattr__(self, "edge_states", _as_value_array(edge_states))
        object.__setattr__(self, "jump_marks", _as_value_array(jump_marks))

    @property
    def n_x(self) -> int:
        return self.node_states.size

    @property
    def n_xi(self) -> int:
        return self.edge_states.size

    @property
    def n_y(self) -> int:
        return self.jump_marks.size

    def node_index(self, value: int) -> int:
        idx = int(np.searchsorted(self.node_states, value))
        if idx >= self.n_x or self.node_states[idx] != value:
            raise KeyError(f"{value} not a node state")
        return idx

    def edge_index(self, value: int) -> int:
        idx = int(np.searchsorted(self.edge_states, value))
        if idx >= self.n_xi or self.edge_states[idx] != value:
            raise KeyError(f"{value} not an edge state")
        return idx

    def mark_index(self, value: int) -> int:
        idx = int(np.searchsorted(self.jump_marks, value))
        if idx >= self.n_y or self.jump_marks[idx] != value:
            raise KeyError(f"{value} not a jump mark")
        return idx

    def node_targets(self) -> np.ndarray:
        """int16[n_y, n_x]: index of x + y, or -1 if x + y leaves S_x."""
        return _targets(self.jump_marks, self.node_states)

    def edge_targets(self) -> np.ndarray:
        """int16[n_y, n_xi]: index of xi + y, or -1 if it leaves S_xi."""
        return _targets(self.jump_marks, self.edge_states)


def _targets(marks: np.ndarray, states: np.ndarray) -> np.ndarray:
    out = np.full((marks.size, states.size), -1, dtype=np.int16)
    lookup = {int(v): k for k, v in enumerate(states)}
    for yi, y in enumerate(marks):
        for si, s in enumerate(states):
            out[yi, si] = lookup.get(int(s + y), -1)
    return out


@dataclass(frozen=True)
class BaseMeasure:
    """Atom masses of the finite jump-mark measure, aligned with jump_marks."""

    masses: np.ndarray

    def __init__(self, masses):
        arr = np.asarray(masses, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "masses", arr)

    @property
    def total(self) -> float:
        return float(self.masses.sum())


@dataclass(frozen=True)
class NodeKernel:
    """Node jump rates gamma[y, x, x~, xi~] plus per-mark envelope."""

    gamma: np.ndarray
    envelope: np.ndarray

    def __init__(self, gamma, envelope):
        g = np.asarray(gamma, dtype=np.float64)
        e = np.asarray(envelope, dtype=np.float64)
        g.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "envelope", e)


@dataclass(frozen=True)
class EdgeKernel:
    """Edge jump rates gamma_tilde[y, xi~, x, x~] (endpoint-node dependent)."""

    gamma_tilde: np.ndarray

    def __init__(self, gamma_tilde):
        g = np.asarray(gamma_tilde, dtype=np.float64)
        g.setflags(write=False)
        object.__setattr__(self, "gamma_tilde", g)


@dataclass(frozen=True)
class BetaSchedule:
    """Edge speed as a function of system size: constant, sqrt, or linear."""

    kind: str  # "constant" | "sqrt" | "linear"
    value: float = 1.0  # constant level, or multiplier for sqrt/linear

    def __post_init__(self):
        if self.kind not in ("constant", "sqrt", "linear"):
            raise ValueError(f"unknown beta schedule kind {self.kind!r}")
        if self.value < 0:
            raise ValueError("beta schedule value must be >= 0")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "sqrt":
            return float(self.value) * float(np.sqrt(n))
        return float(self.value) * float(n)

    def to_json(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @staticmethod
    def from_json(obj) -> "BetaSchedule":
        if isinstance(obj, (int, float)):
            return BetaSchedule("constant", float(obj))
        return BetaSchedule(str(obj["kind"]), float(obj["value"]))


@dataclass(frozen=True)
class CltExampleSpec:
    """Coefficients of the separable rate gamma = c0 b0 + c1 b1 + c2 b2 + c3.

    c0..c3 are aligned with jump_marks; b0, b1 with node_states; b2 with
    edge_states.  epsilon is the two-sided rate bound.
    """

    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    epsilon: float

    def __init__(self, c0, c1, c2, c3, b0, b1, b2, epsilon):
        for name, v in (("c0", c0), ("c1", c1), ("c2", c2), ("c3", c3),
                        ("b0", b0), ("b1", b1), ("b2", b2)):
            arr = np.asarray(v, dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "epsilon", float(epsilon))

    def expansion(self) -> np.ndarray:
        """The separable rate table on (y, x, x~, xi~), before closure clamping."""
        return (self.c0[:, None, None, None] * self.b0[None, :, None, None]
                + self.c1[:, None, None, None] * self.b1[None, None, :, None]
                + self.c2[:, None, None, None] * self.b2[None, None, None, :]
                + self.c3[:, None, None, None])

    def drift_coefficient(self) -> float:
        """sum_y y * c1(y) * rho(y) requires rho; see ModelSpec.clt_drift."""
        raise NotImplementedError("use ModelSpec.clt_drift()")


@dataclass(frozen=True)
class ModelSpec:
    spaces: StateSpaces
    rho: BaseMeasure
    node_kernel: NodeKernel
    edge_kernel: EdgeKernel
    beta: BetaSchedule
    horizon: float
    mu0: np.ndarray
    theta0: np.ndarray
    clt_example: CltExampleSpec | None = None

    def __init__(self, spaces, rho, node_kernel, edge_kernel, beta, horizon,
                 mu0, theta0, clt_example=None):
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "node_kernel", node_kernel)
        object.__setattr__(self, "edge_kernel", edge_kernel)
        if isinstance(beta, (int, float)):
            beta = BetaSchedule("constant", float(beta))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "horizon", float(horizon))
        m = np.asarray(mu0, dtype=np.float64)
        t = np.asarray(theta0, dtype=np.float64)
        m.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "mu0", m)
        object.__setattr__(self, "theta0", t)
        object.__setattr__(self, "clt_example", clt_example)

    # -- convenience -------------------------------------------------------

    @property
    def gamma(self) -> np.ndarray:
        return self.node_kernel.gamma

    @property
    def gamma_tilde(self) -> np.ndarray:
        return self.edge_kernel.gamma_tilde

    @property
    def envelope(self) -> np.ndarray:
        return self.node_kernel.envelope

    def c_gamma(self) -> float:
        """sum_y |y| * envelope(y) * rho(y), a diagnostic total-drift bound."""
        y = np.abs(self.spaces.jump_marks)
        return float(np.sum(y * self.node_kernel.envelope * self.rho.masses))

    def clt_drift(self) -> float:
        """sum_y y * c1(y) * rho(y) for the path-functional centering term."""
        if self.clt_example is None:
            raise ValueError("model has no clt_example block")
        y = self.spaces.jump_marks.astype(np.float64)
        return float(np.sum(y * self.clt_example.c1 * self.rho.masses))

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        out = {
            "spaces": {
                "node_states": self.spaces.node_states.tolist(),
                "edge_states": self.spaces.edge_states.tolist(),
                "jump_marks": self.spaces.jump_marks.tolist(),
            },
            "rho": self.rho.masses.tolist(),
            "gamma": self.node_kernel.gamma.tolist(),
            "gamma_tilde": self.edge_kernel.gamma_tilde.tolist(),
            "beta": self.beta.to_json(),
            "T": self.horizon,
            "mu0": self.mu0.tolist(),
            "theta0": self.theta0.tolist(),
        }
        if self.clt_example is not None:
            ce = self.clt_example
            out["clt_example"] = {
                "c0": ce.c0.tolist(), "c1": ce.c1.tolist(),
                "c2": ce.c2.tolist(), "c3": ce.c3.tolist(),
                "b0": ce.b0.tolist(), "b1": ce.b1.tolist(),
                "b2": ce.b2.tolist(), "epsilon": ce.epsilon,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False)

    @staticmethod
    def from_json_dict(obj: dict) -> "ModelSpec":
        spaces = StateSpaces(obj["spaces"]["node_states"],
                             obj["spaces"]["edge_states"],
                             obj["spaces"]["jump_marks"])
        rho = BaseMeasure(obj["rho"])
        gamma = np.asarray(obj["gamma"], dtype=np.float64)
        gtilde = np.asarray(obj["gamma_tilde"], dtype=np.float64)
        # envelope is the tight per-mark bound over both kernels
        env = np.maximum(gamma.max(axis=(1, 2, 3)), gtilde.max(axis=(1, 2, 3)))
        clt = None
        if "clt_example" in obj:
            ce = obj["clt_example"]
            clt = CltExampleSpec(ce["c0"], ce["c1"], ce["c2"], ce["c3"],
                                 ce["b0"], ce["b1"], ce["b2"], ce["epsilon"])
        return ModelSpec(spaces, rho, NodeKernel(gamma, env), EdgeKernel(gtilde),
                         BetaSchedule.from_json(obj["beta"]), obj["T"],
                         obj["mu0"], obj["theta0"], clt)

    @staticmethod
    def from_json(text: str) -> "ModelSpec":
        return ModelSpec.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, rule: str, detail: str, where: tuple = ()):
        self.violations.append({"rule": rule, "detail": detail, "where": where})

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "model valid"
        lines = [f"{len(self.violations)} violation(s):"]
        for v in self.violations:
            loc = f" at {v['where']}" if v["where"] else ""
            lines.append(f"  [{v['rule']}]{loc}: {v['detail']}")
        return "\n".join(lines)


def validate(spec: ModelSpec, check_clt: bool = False) -> ValidationReport:
    """Check every structural invariant; returns a report, never raises."""
    rep = ValidationReport()
    sp = spec.spaces
    marks = sp.jump_marks

    if np.any(marks == 0):
        rep.add("marks", "jump marks must be nonzero integers")
    if np.any(spec.rho.masses <= 0):
        bad = int(np.argmin(spec.rho.masses))
        rep.add("rho", f"rho mass must be > 0, got {spec.rho.masses[bad]}",
                (int(marks[bad]),))

    g = spec.gamma
    gt = spec.gamma_tilde
    env = spec.envelope
    want_g = (sp.n_y, sp.n_x, sp.n_x, sp.n_xi)
    want_gt = (sp.n_y, sp.n_xi, sp.n_x, sp.n_x)
    if g.shape != want_g:
        rep.add("shape", f"gamma shape {g.shape} != {want_g}")
        return rep
    if gt.shape != want_gt:
        rep.add("shape", f"gamma_tilde shape {gt.shape} != {want_gt}")
        return rep

    if np.any(g < 0):
        w = np.argwhere(g < 0)[0]
        rep.add("envelope", f"gamma entry {g[tuple(w)]} < 0", _loc_g(sp, w))
    if np.any(gt < 0):
        w = np.argwhere(gt < 0)[0]
        rep.add("envelope", f"gamma_tilde entry {gt[tuple(w)]} < 0", _loc_gt(sp, w))
    over = g > env[:, None, None, None]
    if np.any(over):
        w = np.argwhere(over)[0]
        rep.add("envelope",
                f"gamma {g[tuple(w)]} exceeds envelope {env[w[0]]}", _loc_g(sp, w))
    over = gt > env[:, None, None, None]
    if np.any(over):
        w = np.argwhere(over)[0]
        rep.add("envelope",
                f"gamma_tilde {gt[tuple(w)]} exceeds envelope {env[w[0]]}",
                _loc_gt(sp, w))

    # closure: a positive rate must not move the state off its space
    node_tgt = sp.node_targets()
    for yi in range(sp.n_y):
        for xi in range(sp.n_x):
            if node_tgt[yi, xi] < 0 and np.any(g[yi, xi] > 0):
                rep.add("closure",
                        f"gamma({marks[yi]},{sp.node_states[xi]},.,.) > 0 but "
                        f"{sp.node_states[xi] + marks[yi]} is not a node state",
                        (int(marks[yi]), int(sp.node_states[xi])))
    edge_tgt = sp.edge_targets()
    for yi in range(sp.n_y):
        for ei in range(sp.n_xi):
            if edge_tgt[yi, ei] < 0 and np.any(gt[yi, ei] > 0):
                rep.add("closure",
                        f"gamma_tilde({marks[yi]},{sp.edge_states[ei]},.,.) > 0 "
                        f"but {sp.edge_states[ei] + marks[yi]} is not an edge state",
                        (int(marks[yi]), int(sp.edge_states[ei])))

    for name, vec, m in (("mu0", spec.mu0, sp.n_x), ("theta0", spec.theta0, sp.n_xi)):
        if vec.shape != (m,):
            rep.add("initial", f"{name} length {vec.shape} != {m}")
        else:
            if np.any(vec < 0):
                rep.add("initial", f"{name} has a negative entry")
            if abs(vec.sum() - 1.0) > SIMPLEX_TOL:
                rep.add("initial", f"{name} sums to {vec.sum()!r}, not 1")

    if spec.horizon <= 0:
        rep.add("horizon", f"T must be > 0, got {spec.horizon}")

    if check_clt or spec.clt_example is not None:
        _validate_clt(spec, rep)
    return rep


def _loc_g(sp, w):
    return (int(sp.jump_marks[w[0]]), int(sp.node_states[w[1]]),
            int(sp.node_states[w[2]]), int(sp.edge_states[w[3]]))


def _loc_gt(sp, w):
    return (int(sp.jump_marks[w[0]]), int(sp.edge_states[w[1]]),
            int(sp.node_states[w[2]]), int(sp.node_states[w[3]]))


def _is_even_map(values: np.ndarray, table: np.ndarray) -> bool:
    """table indexed by sorted symmetric values: table(v) == table(-v)."""
    order = np.argsort(-values)  # index of -v
    return bool(np.allclose(table, table[order], atol=0, rtol=0))


def _validate_clt(spec: ModelSpec, rep: ValidationReport) -> None:
    ce = spec.clt_example
    if ce is None:
        rep.add("clt", "CLT check requested but model has no clt_example block")
        return
    sp = spec.spaces
    if not (0 < ce.epsilon <= 1):
        rep.add("clt", f"epsilon must lie in (0, 1], got {ce.epsilon}")

    for name, states in (("node_states", sp.node_states),
                         ("edge_states", sp.edge_states),
                         ("jump_marks", sp.jump_marks)):
        if not np.array_equal(np.sort(-states), states):
            rep.add("clt-parity", f"{name} must be symmetric about 0")
            return

    if not _is_even_map(sp.jump_marks, spec.rho.masses):
        rep.add("clt-parity", "rho must be even in y")
    # the color chain must be invariant under the joint flip
    # (y, xi~) -> (-y, -xi~); this is the finite-space form of an even-in-y
    # rate (closure clamps at symmetric boundaries flip consistently)
    gt = spec.gamma_tilde
    y_flip = np.argsort(-sp.jump_marks)
    xi_flip = np.argsort(-sp.edge_states)
    if not np.array_equal(gt, gt[y_flip][:, xi_flip]):
        rep.add("clt-parity", "gamma_tilde must be invariant under "
                              "(y, xi~) -> (-y, -xi~)")
    for name, vals, vec, odd in (("b1", sp.node_states, ce.b1, True),
                                 ("b2", sp.edge_states, ce.b2, True),
                                 ("b0", sp.node_states, ce.b0, False),
                                 ("c0", sp.jump_marks, ce.c0, False),
                                 ("c3", sp.jump_marks, ce.c3, False)):
        order = np.argsort(-vals)
        want = -vec[order] if odd else vec[order]
        if not np.array_equal(vec, want):
            kind = "odd" if odd else "even"
            rep.add("clt-parity", f"{name} must be an {kind} function", (name,))

    for name, vec, m in (("c0", ce.c0, sp.n_y), ("c1", ce.c1, sp.n_y),
                         ("c2", ce.c2, sp.n_y), ("c3", ce.c3, sp.n_y),
                         ("b0", ce.b0, sp.n_x), ("b1", ce.b1, sp.n_x),
                         ("b2", ce.b2, sp.n_xi)):
        if vec.shape != (m,):
            rep.add("clt", f"{name} length {vec.shape[0]} != {m}")
            return

    expansion = ce.expansion()
    lo, hi = expansion.min(), expansion.max()
    if lo < ce.epsilon - 1e-12 or hi > 1.0 / ce.epsilon + 1e-12:
        rep.add("clt-bounds",
                f"separable rate range [{lo}, {hi}] escapes "
                f"[{ce.epsilon}, {1.0 / ce.epsilon}]")

    # initial states identically 0
    for name, vec, states in (("mu0", spec.mu0, sp.node_states),
                              ("theta0", spec.theta0, sp.edge_states)):
        zero = np.searchsorted(states, 0)
        want = np.zeros_like(vec)
        if zero < states.size and states[zero] == 0:
            want[zero] = 1.0
        if not np.array_equal(vec, want):
            rep.add("clt-initial", f"{name} must be a point mass at 0")

    if spec.beta.kind != "constant":
        rep.add("clt", "CLT experiments require a constant beta schedule")

    # the stored gamma table must equal the expansion except where closure
    # forces boundary-exit rates to 0
    node_tgt = sp.node_targets()
    g = spec.gamma
    clamp = (node_tgt >= 0).astype(np.float64)[:, :, None, None]
    if not np.allclose(g, expansion * clamp, atol=1e-12, rtol=0):
        rep.add("clt", "gamma table does not match the separable expansion "
                       "(with boundary-exit rates clamped to 0)")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def aggregate_rate(spec: ModelSpec, y: int, x: int, nu: np.ndarray) -> float:
    """Average node jump rate against a law nu on S_x x S_xi.

    nu is indexed [x~, xi~]; returns sum gamma(y, x, x~, xi~) nu(x~, xi~).
    """
    nu = np.asarray(nu, dtype=np.float64)
    sp = spec.spaces
    if nu.shape != (sp.n_x, sp.n_xi):
        raise ValueError(f"nu shape {nu.shape} != {(sp.n_x, sp.n_xi)}")
    if np.any(nu < 0):
        raise ValueError("nu has negative entries")
    if abs(nu.sum() - 1.0) > NU_SUM_TOL:
        raise ValueError(f"nu sums to {nu.sum()!r}, not 1 within {NU_SUM_TOL}")
    yi = sp.mark_index(y)
    xi = sp.node_index(x)
    return float(np.sum(spec.gamma[yi, xi] * nu))


def build_clt_model(spaces: StateSpaces, rho: BaseMeasure,
                    gamma_tilde: np.ndarray, beta: float, horizon: float,
                    clt: CltExampleSpec) -> ModelSpec:
    """Assemble a ModelSpec whose node kernel is the separable CLT rate.

    Boundary-exit rates are clamped to 0 so the finite node space stays
    closed; the clamped mass is negligible when the space is wide enough
    for the horizon.
    """
    expansion = clt.expansion()
    node_tgt = spaces.node_targets()
    clamp = (node_tgt >= 0).astype(np.float64)[:, :, None, None]
    gamma = expansion * clamp
    gt = np.asarray(gamma_tilde, dtype=np.float64)
    env = np.maximum(gamma.max(axis=(1, 2, 3)), gt.max(axis=(1, 2, 3)))
    nx = spaces.n_x
    nxi = spaces.n_xi
    mu0 = np.zeros(nx)
    mu0[spaces.node_index(0)] = 1.0
    theta0 = np.zeros(nxi)
    theta0[spaces.edge_index(0)] = 1.0
    return ModelSpec(spaces, rho, NodeKernel(gamma, env), EdgeKernel(gt),
                     BetaSchedule("constant", beta), horizon, mu0, theta0, clt)
