"""Counter-based pseudorandom primitives.

All randomness in the simulator is derived from a single 64-bit seed through
keyed splitmix64 finalizer chains.  A stream is identified by
(seed, kind, a, b, mark) and its k-th variate is a pure function of
(stream key, k), so streams can be materialized independently, in any order,
and are bit-identical across processes and backends.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# stream kinds (key namespaces)
KIND_NODE = 1
KIND_EDGE = 2
KIND_NODE_INIT = 3
KIND_EDGE_INIT = 4
KIND_AUX = 5

# (h >> 11) * 2**-53 maps a u64 to [0, 1)
UNIT = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def draw_u64(key: int, counter: int) -> int:
    """counter-th raw variate of the stream with the given key (counter >= 1)."""
    return mix64((key + GOLDEN * counter) & MASK64)


def draw_unit(key: int, counter: int) -> float:
    """counter-th uniform variate in [0, 1)."""
    return (draw_u64(key, counter) >> 11) * UNIT


def stream_key(seed: int, kind: int, a: int = 0, b: int = 0, mark: int = 0) -> int:
    """Derive the 64-bit key of stream (kind, a, b, mark) under a seed."""
    k = mix64((seed + GOLDEN * kind) & MASK64)
    k = mix64((k + GOLDEN * (a + 1)) & MASK64)
    k = mix64((k + GOLDEN * (b + 1)) & MASK64)
    return mix64((k + GOLDEN * (mark + 1)) & MASK64)


def substream_seed(seed: int, index: int) -> int:
    """Derive an independent 64-bit seed, e.g. one per replica."""
    return mix64((seed + GOLDEN * (index + 1)) & MASK64)


# ---------------------------------------------------------------------------
# vectorized variants (uint64 arrays, identical bit-level results)
# ---------------------------------------------------------------------------

_GOLD_NP = np.uint64(GOLDEN)
_M1_NP = np.uint64(_M1)
_M2_NP = np.uint64(_M2)


def mix64_np(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> np.uint64(30))) * _M1_NP
        z = (z ^ (z >> np.uint64(27))) * _M2_NP
        return z ^ (z >> np.uint64(31))


def draw_u64_np(key, counters) -> np.ndarray:
    with np.errstate(over="ignore"):
        key = np.asarray(key, dtype=np.uint64)
        counters = np.asarray(counters, dtype=np.uint64)
        arg = key + _GOLD_NP * counters
    return mix64_np(arg)


def draw_unit_np(key, counters) -> np.ndarray:
    return (draw_u64_np(key, counters) >> np.uint64(11)) * UNIT


def stream_key_np(seed: int, kind: int, a, b, mark) -> np.ndarray:
    """Vectorized stream_key; a, b, mark broadcast against each other."""
    with np.errstate(over="ignore"):
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        mark = np.asarray(mark, dtype=np.uint64)
        k = mix64_np(np.uint64(seed) + _GOLD_NP * np.uint64(kind))
        k = mix64_np(k + _GOLD_NP * (a + np.uint64(1)))
        k = mix64_np(k + _GOLD_NP * (b + np.uint64(1)))
        return mix64_np(k + _GOLD_NP * (mark + np.uint64(1)))
