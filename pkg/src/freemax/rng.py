"""Splittable, reproducible random streams.

Every stream is identified by ``(seed, stream_id)``; two streams with the same
pair produce the same numbers, and streams with different ids are derived
through :class:`numpy.random.SeedSequence` spawning so they are statistically
independent.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["RngStream", "split", "block_streams", "map_blocks", "thread_count"]

_MASK64 = (1 << 64) - 1


class RngStream:
    """A seeded PCG64 generator tagged with the ``(seed, stream_id)`` it came from."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # thin forwarding layer, so callers never touch the global numpy state
    def uniform_open(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        u = self.generator.random(size)
        # random() is on [0, 1); 0 has probability 2**-53 per draw
        return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)

    def random(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def standard_exponential(self, size=None):
        return self.generator.standard_exponential(size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def spawn(self, child_id: int) -> "RngStream":
        """Derive a child stream; deterministic in ``(seed, stream_id, child_id)``."""
        return RngStream(hash_ids(self.seed, self.stream_id), child_id)


def hash_ids(*ids: int) -> int:
    """Collapse integers into one 64-bit seed via SeedSequence state."""
    ss = np.random.SeedSequence([int(i) & _MASK64 for i in ids])
    a, b = ss.generate_state(2, dtype=np.uint32)
    return (int(a) << 32) | int(b)


def split(seed: int, worker_id: int) -> RngStream:
    """Independent stream number ``worker_id`` of the family rooted at ``seed``."""
    return RngStream(seed, worker_id)


def block_streams(rng: RngStream, n_items: int, block_size: int):
    """Yield ``(start, stop, stream)`` for fixed-size blocks of a batch.

    The partition depends only on ``n_items`` and ``block_size``, so results
    are identical no matter how many workers consume the blocks. One draw is
    taken from ``rng`` to root the block family.
    """
    base = int(rng.integers(0, 2**63))
    for b, start in enumerate(range(0, n_items, block_size)):
        yield start, min(start + block_size, n_items), RngStream(base, b)


def thread_count(default: int = 1) -> int:
    """Worker cap from ``FREEMAX_THREADS``; never affects results."""
    raw = os.environ.get("FREEMAX_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


def map_blocks(func, n_items: int, rng: RngStream, block_size: int = 1000,
               threads: int | None = None) -> np.ndarray:
    """Concatenate ``func(count, stream)`` over fixed blocks of a batch.

    Blocks are merged in block order, so the output does not depend on
    ``threads``.
    """
    blocks = list(block_streams(rng, n_items, block_size))
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(blocks) <= 1:
        parts = [func(stop - start, s) for start, stop, s in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: func(b[1] - b[0], b[2]), blocks))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)
