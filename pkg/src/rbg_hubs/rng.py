"""Counter-based random streams.

Every random quantity in the package is a pure function of a top-level seed
and a path of integers/strings (experiment -> grid point -> replication).
Streams are numpy Philox generators keyed by (seed, stream id); edge
indicators use a stateless SplitMix64-style hash of (seed, id_a, id_b) so the
Bernoulli draw of a pair never depends on iteration order.
"""
from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# pair_uniforms domain tags
TAG_BIPARTITE = 0xB1
TAG_UNIPARTITE = 0xA1

PathItem = Union[int, str]


def _splitmix(x: int) -> int:
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def _item_key(item: PathItem) -> int:
    if isinstance(item, str):
        return int.from_bytes(hashlib.blake2b(item.encode(), digest_size=8).digest(), "little")
    return int(item) & MASK64


def derive_seed(seed: int, *path: PathItem) -> int:
    """Fold a path of labels into a 64-bit seed."""
    h = _splitmix(int(seed) & MASK64)
    for item in path:
        h = _splitmix(h ^ _item_key(item))
    return h


def generator(seed: int, *path: PathItem) -> np.random.Generator:
    key = np.array([int(seed) & MASK64, derive_seed(seed, *path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mix_array(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def pair_uniforms(seed: int, a_ids: np.ndarray, b_ids: np.ndarray, tag: int = TAG_BIPARTITE) -> np.ndarray:
    """One uniform in [0, 1) per (seed, a, b) pair, order-sensitive in (a, b)."""
    a = np.atleast_1d(np.asarray(a_ids, dtype=np.uint64))
    b = np.atleast_1d(np.asarray(b_ids, dtype=np.uint64))
    key = np.uint64(derive_seed(seed, "pairs", tag))
    with np.errstate(over="ignore"):
        h = _mix_array(np.full(a.shape, key, dtype=np.uint64) ^ a)
        h = _mix_array(h ^ (b * np.uint64(_GOLDEN)))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


__all__ = [
    "derive_seed",
    "generator",
    "pair_uniforms",
    "TAG_BIPARTITE",
    "TAG_UNIPARTITE",
    "MASK64",
]
