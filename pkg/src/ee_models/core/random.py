"""
Seeded random streams.

Every generator is a counter-based Philox stream. Replicates get children of
one SeedSequence, so replicate r sees the same numbers regardless of how many
replicates run or in which order.
"""
from typing import List

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Generator for a single reproducible stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def replicate_streams(seed: int, nsim: int) -> List[np.random.Generator]:
    """Independent substreams, one per replicate."""
    if nsim < 1:
        raise ValueError(f"nsim must be positive, got {nsim}")
    children = np.random.SeedSequence(seed).spawn(nsim)
    return [np.random.Generator(np.random.Philox(child)) for child in children]
