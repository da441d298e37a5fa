"""Deterministic hash and value-noise primitives.

Constants are frozen: replays and golden tests rely on these exact bit
patterns.  Everything operates on float64 numpy arrays and depends only
on (seed, arguments).
"""

from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_K_I = np.uint64(0xD6E8FEB86659FD93)
_K_K = np.uint64(0xA0761D6478BD642F)
_INV_2_64 = float(2.0 ** -64)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _to_u64(x: np.ndarray) -> np.ndarray:
    # floor() first so fractional arguments land in a stable bucket
    return np.floor(x).astype(np.int64).astype(np.uint64)


def hash01(seed: int, i: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Uniform values in [0,1), a pure function of (seed, floor(i), floor(k))."""
    with np.errstate(over="ignore"):
        z = (np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN
             + _to_u64(np.asarray(i, dtype=np.float64)) * _K_I
             + _to_u64(np.asarray(k, dtype=np.float64)) * _K_K)
        return _mix(z).astype(np.float64) * _INV_2_64


def _lattice(seed: int, xi, yi, zi) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN
             + xi.astype(np.uint64) * _K_I
             + yi.astype(np.uint64) * _K_K
             + zi.astype(np.uint64) * _M1)
        return _mix(z).astype(np.float64) * _INV_2_64


def noise3(seed: int, v: np.ndarray) -> np.ndarray:
    """Trilinear value noise over a hashed integer lattice, in [-1,1].

    v is (n,3); smooth fade keeps the field C1-continuous.
    """
    p = np.floor(v)
    f = v - p
    pi = p.astype(np.int64)
    fade = f * f * (3.0 - 2.0 * f)

    acc = np.zeros(len(v))
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                corner = _lattice(seed, pi[:, 0] + dx, pi[:, 1] + dy, pi[:, 2] + dz)
                wx = fade[:, 0] if dx else (1.0 - fade[:, 0])
                wy = fade[:, 1] if dy else (1.0 - fade[:, 1])
                wz = fade[:, 2] if dz else (1.0 - fade[:, 2])
                acc = acc + corner * (wx * wy * wz)
    return 2.0 * acc - 1.0
