"""Seed plumbing: every random draw in the workbench flows from one master seed
through named substreams, so that runs are reproducible and substreams for
different purposes (trace, topology, policy, eval) never collide."""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def substream_seed(master: int, *names: int | str) -> int:
    """Derive a 64-bit seed from a master seed and a path of stream names.

    Uses SHA-256 over the canonical name path, so the mapping is stable across
    processes and Python versions (unlike hash()).
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest()[:8], "little")


def generator(master: int, *names: int | str) -> np.random.Generator:
    """numpy Generator for the named substream."""
    return np.random.default_rng(substream_seed(master, *names))


def splitmix64(x: int) -> int:
    """One splitmix64 step; the finalizer is used as a counter-based hash."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash_u64(*words: int) -> int:
    """Order-sensitive 64-bit mix of integer words (counter-based, stateless)."""
    acc = 0x243F6A8885A308D3
    for w in words:
        acc = splitmix64((acc ^ (w & MASK64)) & MASK64)
    return acc


def hash_unit(*words: int) -> float:
    """Uniform float in (0, 1) derived from hash_u64; never exactly 0 or 1."""
    return ((hash_u64(*words) >> 11) + 0.5) * (1.0 / 9007199254740992.0)
