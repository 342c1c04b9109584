"""Deterministic randomness: seed derivation and counter-based pair variates.

Every stochastic routine in the package draws from one of two sources:

* a numpy ``Generator`` seeded through :func:`derive_seed` (sequential draws
  such as Poisson counts, positions, marks), or
* the stateless hash generator :func:`pair_uniform`, which maps an unordered
  index pair to a uniform variate.  Because the variate is a pure function of
  ``(stream, min(i,j), max(i,j))``, edge sampling is reproducible regardless
  of enumeration order or work partitioning.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
_C1 = 0x9E3779B97F4A7C15
_C2 = 0xBF58476D1CE4E5B9
_C3 = 0x94D049BB133111EB

# stream tags: one per purpose so independent uses never share variates
STREAM_PPP = 1
STREAM_PALM = 2
STREAM_EDGE = 3
STREAM_RETENTION = 4
STREAM_ABA = 5
STREAM_CONNECTOR = 6
STREAM_HIERARCHY = 7


def derive_seed(master: int, *labels: int) -> int:
    """Collision-resistant 64-bit stream seed from a master seed and labels.

    blake2b over the packed little-endian sequence ``(master, *labels)``.
    Label order matters: ``derive_seed(s, 1, 2) != derive_seed(s, 2, 1)``.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master) & _MASK64))
    for lab in labels:
        h.update(struct.pack("<Q", int(lab) & _MASK64))
    return int.from_bytes(h.digest(), "little")


def _mix64_int(x: int) -> int:
    """splitmix64 finalizer on a Python int (masked 64-bit arithmetic)."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _C2) & _MASK64
    x = ((x ^ (x >> 27)) * _C3) & _MASK64
    return x ^ (x >> 31)


def _mix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on uint64 arrays."""
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_C2)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_C3)
    return x ^ (x >> np.uint64(31))


def pair_uniform(stream: int, i, j):
    """Uniform variate on (0, 1] for the unordered index pair ``{i, j}``.

    ``i`` and ``j`` may be scalars or equal-length integer arrays.  The value
    is a pure function of ``(stream, min(i,j), max(i,j))``; two rounds of
    splitmix64 mixing give i.i.d.-quality variates for Monte Carlo use.
    """
    key = _mix64_int(stream ^ _C1)
    if np.isscalar(i) and np.isscalar(j):
        lo, hi = (int(i), int(j)) if i <= j else (int(j), int(i))
        z = ((lo * _C1) & _MASK64) ^ ((hi * _C2) & _MASK64) ^ key
        z = _mix64_int(_mix64_int(z) ^ _C3)
        return ((z >> 11) + 1) * (2.0 ** -53)
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    z = (lo * np.uint64(_C1)) ^ (hi * np.uint64(_C2)) ^ np.uint64(key)
    z = _mix64(z)
    z = _mix64(z ^ np.uint64(_C3))
    return ((z >> np.uint64(11)) + np.uint64(1)) * (2.0 ** -53)


def indexed_uniform(stream: int, idx):
    """Uniform variate on (0, 1] keyed by a single counter index."""
    key = _mix64_int(stream ^ _C2)
    if np.isscalar(idx):
        z = ((int(idx) * _C1) & _MASK64) ^ key
        z = _mix64_int(_mix64_int(z) ^ _C3)
        return ((z >> 11) + 1) * (2.0 ** -53)
    idx = np.asarray(idx, dtype=np.uint64)
    z = _mix64((idx * np.uint64(_C1)) ^ np.uint64(key))
    z = _mix64(z ^ np.uint64(_C3))
    return ((z >> np.uint64(11)) + np.uint64(1)) * (2.0 ** -53)


def generator(master: int, *labels: int) -> np.random.Generator:
    """numpy Generator seeded from the derived stream seed."""
    return np.random.default_rng(derive_seed(master, *labels))
