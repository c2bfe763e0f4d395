"""Reproducible random streams.

All randomness in the package flows through counter-based Philox generators
keyed by (master seed, purpose tag, replicate).  Independent replicates get
independent streams, so parallel runs and serial runs give the same numbers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _purpose_key(purpose: str) -> int:
    digest = hashlib.sha256(purpose.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, purpose: str, replicate: int = 0) -> np.random.Generator:
    """Generator for one (seed, purpose, replicate) triple."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, _purpose_key(purpose)],
                   dtype=np.uint64)
    counter = np.array([0, 0, 0, replicate & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def kernel_seed(master_seed: int, purpose: str, replicate: int = 0) -> int:
    """32-bit seed for the compiled walk kernels, derived from the stream.

    The kernels use numba's internal generator; seeding it from the Philox
    stream keeps replicates independent and the whole run reproducible.
    """
    return int(stream(master_seed, purpose, replicate).integers(0, 2**32 - 1))
