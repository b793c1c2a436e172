"""Seeded Poisson-random-measure streams on [0, T] x Y x [0, Lambda_y].

Each stream (node i, or directed edge (i, j)) carries, per jump mark y, a
homogeneous Poisson point process of intensity rho(y) * Lambda_y in time,
with an auxiliary uniform coordinate z in [0, Lambda_y].  Events are a pure
function of (seed, stream id, mark, event ordinal): event k consumes
counters 2k+1 (exponential inter-arrival) and 2k+2 (z), so the same stream
read by two coupled systems yields identical (s, y, z) triples, and thinning
bands nested in the rate produce nested acceptance sets.

Per-mark event lists are merged by (s, y, z) lexicographic order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import rng
from .model import ModelSpec


@dataclass(frozen=True)
class StreamId:
    kind: str  # "node" | "edge"
    i: int
    j: int = 0

    def __post_init__(self):
        if self.kind not in ("node", "edge"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.i < 1 or (self.kind == "edge" and self.j < 1):
            raise ValueError("stream indices are 1-based and must be >= 1")

    @property
    def kind_code(self) -> int:
        return rng.KIND_NODE if self.kind == "node" else rng.KIND_EDGE


class StreamFamily:
    """All PRM streams of one experiment run, sharing a seed and ceilings.

    Node streams use the tight per-mark bound of the node kernel as ceiling;
    edge streams use beta_ceiling times the edge kernel's own per-mark
    bound, where beta_ceiling is the largest edge speed in the experiment
    family, so every beta in a sweep reads the same underlying point set.
    (Both tight bounds are dominated by the shared rate envelope, so the
    thinning indicators never leave their bands.)
    """

    def __init__(self, spec: ModelSpec, seed: int, beta_ceiling: float | None = None):
        self.spec = spec
        self.seed = int(seed) & rng.MASK64
        self.horizon = spec.horizon
        self.marks = spec.spaces.jump_marks
        self.rho = spec.rho.masses
        self.node_ceiling = spec.gamma.max(axis=(1, 2, 3))
        self.edge_env = spec.gamma_tilde.max(axis=(1, 2, 3))
        if beta_ceiling is None:
            beta_ceiling = spec.beta(1) if spec.beta.kind == "constant" else 0.0
        self.beta_ceiling = float(beta_ceiling)
        self.edge_ceiling = self.beta_ceiling * self.edge_env

    def stream(self, sid: StreamId) -> "PrmStream":
        ceiling = self.node_ceiling if sid.kind == "node" else self.edge_ceiling
        return PrmStream(sid, self.seed, self.horizon, self.marks, self.rho, ceiling)

    def node_stream(self, i: int) -> "PrmStream":
        return self.stream(StreamId("node", i))

    def edge_stream(self, i: int, j: int) -> "PrmStream":
        return self.stream(StreamId("edge", i, j))

    def expected_candidates(self, n: int, t0: float = 0.0, t1: float | None = None) -> float:
        """Predicted candidate-event count of an n-node system over (t0, t1]."""
        if t1 is None:
            t1 = self.horizon
        span = max(0.0, t1 - t0)
        node = float(np.sum(self.rho * self.node_ceiling)) * n
        edge = float(np.sum(self.rho * self.edge_ceiling)) * n * n
        return span * (node + edge)


class PrmStream:
    """One seeded stream; events materialize lazily and reproducibly."""

    def __init__(self, sid: StreamId, seed: int, horizon: float,
                 marks: np.ndarray, rho: np.ndarray, ceiling: np.ndarray):
        self.id = sid
        self.seed = seed
        self.horizon = float(horizon)
        self.marks = marks
        self.rho = rho
        self.ceiling = np.asarray(ceiling, dtype=np.float64)

    def mark_key(self, yi: int) -> int:
        return rng.stream_key(self.seed, self.id.kind_code, self.id.i, self.id.j, yi)

    def events_between(self, t0: float, t1: float):
        """All events with s in (t0, t1], sorted by (s, y, z).

        Returns (s, y, z) float64/int64/float64 arrays.  y holds mark values.
        """
        if not (0.0 <= t0 <= t1 <= self.horizon):
            raise ValueError(f"need 0 <= t0 <= t1 <= T={self.horizon}, "
                             f"got ({t0}, {t1})")
        parts = []
        for yi in range(self.marks.size):
            lam = self.ceiling[yi]
            rate = self.rho[yi] * lam
            if rate <= 0.0:
                continue
            s, z = _materialize_mark(self.mark_key(yi), rate, lam, t1)
            keep = s > t0
            if np.any(keep):
                parts.append((s[keep], np.full(keep.sum(), self.marks[yi],
                                               dtype=np.int64), z[keep]))
        if not parts:
            empty = np.empty(0)
            return empty, np.empty(0, dtype=np.int64), empty.copy()
        s = np.concatenate([p[0] for p in parts])
        y = np.concatenate([p[1] for p in parts])
        z = np.concatenate([p[2] for p in parts])
        order = np.lexsort((z, y, s))
        return s[order], y[order], z[order]

    def events(self):
        return self.events_between(0.0, self.horizon)

    # -- binary debug dump --------------------------------------------------

    def dump(self, path) -> None:
        """Little-endian binary dump: header + packed (s, y, z) records."""
        s, y, z = self.events()
        kind_byte = 0 if self.id.kind == "node" else 1
        with open(path, "wb") as fh:
            fh.write(b"PRMS")
            fh.write(struct.pack("<I", 1))  # format version
            fh.write(struct.pack("<BQQQd", kind_byte, self.id.i, self.id.j,
                                 self.seed, self.horizon))
            fh.write(struct.pack("<I", self.marks.size))
            for yi in range(self.marks.size):
                fh.write(struct.pack("<id", int(self.marks[yi]),
                                     float(self.ceiling[yi])))
            fh.write(struct.pack("<Q", s.size))
            for k in range(s.size):
                fh.write(struct.pack("<did", s[k], int(y[k]), z[k]))

    @staticmethod
    def load_dump(path):
        """Parse a dump back into (header dict, (s, y, z) arrays)."""
        with open(path, "rb") as fh:
            if fh.read(4) != b"PRMS":
                raise ValueError("not a PRM stream dump")
            (version,) = struct.unpack("<I", fh.read(4))
            kind_byte, i, j, seed, horizon = struct.unpack("<BQQQd", fh.read(33))
            (n_marks,) = struct.unpack("<I", fh.read(4))
            marks, ceils = [], []
            for _ in range(n_marks):
                m, c = struct.unpack("<id", fh.read(12))
                marks.append(m)
                ceils.append(c)
            (count,) = struct.unpack("<Q", fh.read(8))
            s = np.empty(count)
            y = np.empty(count, dtype=np.int64)
            z = np.empty(count)
            for k in range(count):
                s[k], y[k], z[k] = struct.unpack("<did", fh.read(20))
        header = {"version": version,
                  "kind": "node" if kind_byte == 0 else "edge",
                  "i": i, "j": j, "seed": seed, "horizon": horizon,
                  "marks": np.array(marks), "ceilings": np.array(ceils)}
        return header, (s, y, z)


def _materialize_mark(key: int, rate: float, lam: float, t_max: float):
    """Events of one (stream, mark): exponential walk, counters 2k+1 / 2k+2."""
    times = []
    zs = []
    t = 0.0
    k = 0
    block = max(16, int(rate * t_max + 10.0 * np.sqrt(rate * t_max) + 16))
    while True:
        counters = 2 * np.arange(k, k + block, dtype=np.uint64) + np.uint64(1)
        u = rng.draw_unit_np(np.uint64(key), counters)
        # scalar libm log1p: numpy's SIMD log1p is off by 1 ulp from the
        # scalar walk the simulation kernels perform, which must agree bitwise
        gaps = np.array([-math.log1p(-v) for v in u]) / rate
        # seed the cumsum with the carried time so the accumulation order
        # matches a scalar walk exactly (t += gap), bit for bit
        ts = np.cumsum(np.concatenate(([t], gaps)))[1:]
        cut = np.searchsorted(ts, t_max, side="right")
        if cut > 0:
            zc = rng.draw_unit_np(np.uint64(key),
                                  counters[:cut] + np.uint64(1)) * lam
            times.append(ts[:cut])
            zs.append(zc)
        if cut < block:
            break
        t = float(ts[-1])
        k += block
    if not times:
        return np.empty(0), np.empty(0)
    return np.concatenate(times), np.concatenate(zs)


def thin(event, rate: float, ceiling: float) -> bool:
    """Accept a candidate (s, y, z) iff z <= rate; rate must fit the band."""
    s, y, z = event
    if rate < 0 or rate > ceiling + 1e-12:
        raise ValueError(f"rate {rate} outside thinning band [0, {ceiling}] "
                         "(kernel/ceiling mismatch)")
    return z <= rate
