"""Deterministic RNG derivation for simulation components.

Every random draw in the simulator flows from a root seed plus a path of
tags (round index, client id, purpose string), so results are reproducible
bit-for-bit regardless of evaluation order or worker-thread count.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    if tag < 0:
        raise ValueError(f"seed tags must be non-negative, got {tag}")
    return int(tag)


def derive_rng(seed: int, *tags: int | str) -> np.random.Generator:
    """Return a generator keyed by (seed, *tags), independent across paths."""
    entropy = [_tag_to_int(seed)] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
