"""Deterministic seed derivation.

Every random stream in the package is derived from a single master seed and a
tuple of labels (strings or integers). The derivation is a hash, so the stream
a job receives depends only on its labels and never on scheduling order or the
number of workers.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Return a 63-bit integer seed for ``(master, *labels)``."""
    h = hashlib.sha256(repr((int(master),) + tuple(labels)).encode())
    return int.from_bytes(h.digest()[:8], "little") >> 1


def rng_for(master: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
