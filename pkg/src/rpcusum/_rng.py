"""Reproducible random-stream derivation.

Every stochastic component draws from a counter-based generator (Philox)
whose seed material is derived by hashing a master seed together with a
tuple of string/int tokens. Derived streams are independent for distinct
token tuples and bit-stable across runs and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _digest(seed: int, tokens: tuple) -> bytes:
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("ascii"))
    for tok in tokens:
        h.update(b"\x1f")
        if isinstance(tok, bool) or not isinstance(tok, (int, str)):
            raise TypeError(f"stream token must be int or str, got {tok!r}")
        h.update(repr(tok).encode("utf-8"))
    return h.digest()


def seed_sequence(seed: int, *tokens: int | str) -> np.random.SeedSequence:
    """SeedSequence for the stream keyed by (seed, tokens)."""
    words = np.frombuffer(_digest(seed, tokens), dtype=np.uint32)
    return np.random.SeedSequence(entropy=[int(w) for w in words])


def generator(seed: int, *tokens: int | str) -> np.random.Generator:
    """Philox generator for the stream keyed by (seed, tokens)."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *tokens)))


def child_seed(seed: int, *tokens: int | str) -> int:
    """64-bit sub-seed, usable as the master seed of a nested component."""
    return int.from_bytes(_digest(seed, tokens)[:8], "little")
