"""Deterministic random-stream derivation.

Every random draw in this package flows from an explicit 64-bit seed
through counter-based Philox streams addressed by (seed, purpose, index).
Streams with distinct addresses never overlap (each index owns a disjoint
2^192 slice of the Philox counter space), so components can be generated
in any order, in parallel, or re-generated in isolation, and the results
are bit-identical.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _key_words(seed: int, purpose: str) -> np.ndarray:
    data = f"{seed & MASK64}:{purpose}".encode()
    digest = hashlib.blake2b(data, digest_size=16).digest()
    return np.frombuffer(digest, dtype="<u8")


def stream(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, purpose, index) stream.

    The key is a 128-bit hash of (seed, purpose); the index is placed in
    the top word of the Philox counter.
    """
    if index < 0:
        raise ValueError(f"stream index must be nonnegative, got {index}")
    counter = np.array([0, 0, 0, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=_key_words(seed, purpose)))


def derive_seed(seed: int, purpose: str, index: int = 0) -> int:
    """64-bit sub-seed for tagging derived artifacts (e.g. sampled matrices)."""
    return int.from_bytes(stream(seed, purpose, index).bytes(8), "little")
