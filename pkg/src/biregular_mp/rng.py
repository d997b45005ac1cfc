"""Seed handling.

Splitting rule: an integer master seed ``s`` gives sample ``k`` the
stream ``PCG64(SeedSequence(s).spawn(n)[k])``.  A ``Generator`` passed
instead is split with ``Generator.spawn``.
"""
from __future__ import annotations

import numpy as np


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(rng))
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng))))


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    if isinstance(seed, np.random.Generator):
        return seed.spawn(n)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n)]
