"""Counter-based random substreams.

Every model variable (and every synthetic run) gets its own Philox stream
keyed by (seed, domain, index). Element i of a keyed stream depends only on
the key and i, so sampled values are reproducible regardless of batch size,
evaluation order, or thread count, and a shorter sample is always a prefix
of a longer one. Domains keep the generator, predictor, and online streams
disjoint even when a pipeline reuses one seed throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

MAX_SEED = 2**64 - 1

DOMAIN_PREDICT = 1
DOMAIN_ONLINE = 2
DOMAIN_SYNTH = 3

_INDEX_BITS = 56


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= MAX_SEED:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


def substream(seed: int, domain: int, index: int) -> np.random.Generator:
    if not 0 <= index < (1 << _INDEX_BITS):
        raise ValidationError(f"substream index {index} out of range")
    key = np.array([seed, (domain << _INDEX_BITS) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
