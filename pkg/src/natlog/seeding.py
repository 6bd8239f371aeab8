"""Deterministic named random streams derived from one master seed.

Every piece of randomness in an experiment (data generation, parameter
initialization, epoch shuffling, fold assignment, ...) draws from its own
stream, keyed by the master seed plus a path of names/indices.  Streams are
stable across processes and Python versions (no builtin ``hash``), so runs
can be varied or parallelized independently while staying reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np


def _component_entropy(component) -> int:
    if isinstance(component, str):
        return zlib.crc32(component.encode("utf-8"))
    if isinstance(component, (int, np.integer)):
        return int(component) & 0xFFFFFFFF
    raise TypeError(f"stream path components must be str or int, got {component!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """A generator for the stream named by ``path`` under ``master_seed``."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_component_entropy(c) for c in path)
    return np.random.default_rng(np.random.SeedSequence(entropy))
