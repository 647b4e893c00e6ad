"""Portable deterministic randomness for the QSNR experiments.

Every sampled vector gets its own independent xoshiro256++ stream whose
state is derived from (seed, vector index) through SplitMix64.  The
stream assignment is purely counter-based, so results do not depend on
how vectors are batched or scheduled, and the bit streams can be
reproduced from the written-down constants alone.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_INV53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 output scrambler (finalizer of Steele et al.).
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << _U64(k)) | (x >> _U64(64 - k))


class LaneRng:
    """A bank of xoshiro256++ generators, one lane per vector index.

    Lane ``i`` (counting from ``first_lane``) is seeded with four
    SplitMix64 outputs of ``seed + (i+1)*GOLDEN``.
    """

    def __init__(self, seed: int, n_lanes: int, first_lane: int = 0):
        lanes = np.arange(first_lane, first_lane + n_lanes, dtype=np.uint64)
        base = _U64(seed & 0xFFFFFFFFFFFFFFFF) + (lanes + _U64(1)) * _GOLDEN
        self._s = [_mix(base + _U64(((j + 1) * int(_GOLDEN)) & 0xFFFFFFFFFFFFFFFF))
                   for j in range(4)]
        self.n_lanes = n_lanes

    def next_u64(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        out = _rotl(s0 + s3, 23) + s0
        t = s1 << _U64(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def uniform(self) -> np.ndarray:
        """One double in [0, 1) per lane (53 significant bits)."""
        return (self.next_u64() >> _U64(11)).astype(np.float64) * _INV53

    def uniform_open(self) -> np.ndarray:
        """One double in (0, 1] per lane; safe to pass to log()."""
        return ((self.next_u64() >> _U64(11)) + _U64(1)).astype(np.float64) * _INV53

    def normal_block(self, n_cols: int) -> np.ndarray:
        """(n_lanes, n_cols) standard normals via Box-Muller."""
        out = np.empty((self.n_lanes, n_cols))
        for c in range(0, n_cols, 2):
            u1 = self.uniform_open()
            u2 = self.uniform()
            r = np.sqrt(-2.0 * np.log(u1))
            out[:, c] = r * np.cos(2.0 * np.pi * u2)
            if c + 1 < n_cols:
                out[:, c + 1] = r * np.sin(2.0 * np.pi * u2)
        return out

    def uniform_block(self, n_cols: int) -> np.ndarray:
        out = np.empty((self.n_lanes, n_cols))
        for c in range(n_cols):
            out[:, c] = self.uniform()
        return out
