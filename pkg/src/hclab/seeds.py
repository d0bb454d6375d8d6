"""Deterministic seed derivation for parallel experiments.

Every random quantity in the library is drawn from a ``numpy`` PCG64
generator whose seed is derived from a single 64-bit master seed plus an
integer task key.  The derivation is a counter-based split: the key is
passed as the ``spawn_key`` of a :class:`numpy.random.SeedSequence`, so a
task's stream depends only on ``(master, key)`` and never on scheduling
order.  Running the same configuration with any number of workers
therefore produces identical results.
"""

from __future__ import annotations

import numpy as np

__all__ = ["seed_sequence", "task_rng"]


def seed_sequence(master: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for task ``key`` under ``master`` (both order-sensitive)."""
    if not 0 <= int(master) < 2**64:
        raise ValueError("master seed must be a 64-bit unsigned integer")
    return np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))


def task_rng(master: int, *key: int) -> np.random.Generator:
    """PCG64 generator for task ``key`` under ``master``."""
    return np.random.default_rng(seed_sequence(master, *key))
