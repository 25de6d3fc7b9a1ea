"""
Seeded random streams

Every run draws from its own counter-based (Philox) stream derived from
(master seed, tag, index), so results do not depend on execution order.
"""

import zlib
from typing import Optional, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, None]


def substream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """
    Build the random stream for one (master seed, tag, index) identity

    Args:
        master_seed: Experiment-wide seed
        tag: Stream name, e.g. an algorithm tag or "world"
        index: Seed index within the experiment

    Returns:
        Independent Philox-backed generator
    """
    seq = np.random.SeedSequence([int(master_seed), zlib.crc32(tag.encode("utf-8")), int(index)])
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed: SeedLike, default: Optional[int] = None) -> np.random.Generator:
    """Return ``seed`` if it already is a Generator, otherwise seed a Philox stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = default
    return np.random.Generator(np.random.Philox(seed))
