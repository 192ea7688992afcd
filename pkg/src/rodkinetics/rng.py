"""Stateless counter-based uniforms.

Each variate is a pure function of (seed, stream, counter, lane): the
64-bit inputs are folded through chained SplitMix64 finalizers. Streams
are agent indices, counters are step numbers and lanes distinguish the
draws made within one step, so results never depend on evaluation order.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def random_bits(seed: int, stream, counter: int, lane: int) -> np.ndarray:
    stream = np.asarray(stream, dtype=np.uint64)
    h = _mix(np.full(stream.shape, np.uint64(seed % 2**64), dtype=np.uint64))
    h = _mix(h ^ stream)
    h = _mix(h ^ np.uint64(counter % 2**64))
    return _mix(h ^ np.uint64(lane % 2**64))


def uniform(seed: int, stream, counter: int, lane: int) -> np.ndarray:
    """Uniform doubles on [0, 1) from the top 53 bits."""
    bits = random_bits(seed, stream, counter, lane)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)
