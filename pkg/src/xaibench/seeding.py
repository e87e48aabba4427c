"""Stable seed derivation so every randomized stage is reproducible.

Seeds for sub-stages are derived by hashing the master seed together with
string labels (stage name, model kind, perturbation level, ...).  This makes
a subset run reproduce exactly the values it would have inside a full run.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Return a 63-bit seed determined by ``master`` and the label tuple."""
    key = str(int(master)) + "|" + "|".join(str(l) for l in labels)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


def rng_for(master: int, *labels: object) -> np.random.Generator:
    """Generator seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, *labels))
