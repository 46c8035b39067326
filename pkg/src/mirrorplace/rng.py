"""Seed handling: one top-level seed, named deterministic sub-streams."""

import hashlib

import numpy as np


def substream(seed: int, *labels) -> np.random.Generator:
    """Return a generator for the sub-stream identified by ``labels``.

    The same (seed, labels) pair always yields the same stream, independent
    of how many other streams were drawn before it. Labels are stringified,
    so any hashable run coordinates (algorithm name, k, repetition index)
    can be used directly.
    """
    tag = "/".join(str(label) for label in labels)
    digest = hashlib.blake2s(tag.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *words]))
