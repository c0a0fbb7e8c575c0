"""Deterministic seeding helpers.

Every stochastic choice in the engine derives from a single global seed
via named subseeds, so that independent components never share RNG state.
"""
from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h


def subseed(global_seed: int, component: str) -> int:
    """Derive a component-specific 64-bit seed from the global seed."""
    return fnv1a64(component.encode("utf-8")) ^ (global_seed & _MASK64)


def component_rng(global_seed: int, component: str) -> np.random.Generator:
    """A fresh generator keyed to (global seed, component name)."""
    return np.random.default_rng(subseed(global_seed, component))
