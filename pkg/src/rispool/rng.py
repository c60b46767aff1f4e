"""Keyed random streams.

Every random draw in the simulator comes from a counter-based generator keyed
by a (seed, purpose, *context) tuple, so streams are independent per link,
per epoch, and per purpose: adding a UE or reordering evaluation never
perturbs another link's draws, and any draw can be reproduced in isolation.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(*parts) -> int:
    """128-bit key derived from the canonical string form of the parts."""
    text = "\x1f".join("" if p is None else str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def make_rng(*parts) -> np.random.Generator:
    """Independent Philox stream for the given key tuple."""
    return np.random.Generator(np.random.Philox(key=stream_key(*parts)))
