"""Seed splitting and block-parallel execution with deterministic merging.

Replicas are grouped in fixed-size blocks.  Block ``i`` always receives the
``i``-th child of the root :class:`numpy.random.SeedSequence`, so results do
not depend on how many workers process the blocks.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

BLOCK = 1000


def as_seed_sequence(rng) -> np.random.SeedSequence:
    """Accept an int, a SeedSequence or a Generator."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        seq = rng.bit_generator.seed_seq
        if isinstance(seq, np.random.SeedSequence):
            # child of the generator's own sequence so repeated calls differ
            return seq.spawn(1)[0]
        return np.random.SeedSequence(int(rng.integers(2**63)))
    if rng is None:
        raise ValueError("a seed is required; no wall-clock default is used")
    return np.random.SeedSequence(int(rng))


def blocks(n: int, block: int = BLOCK):
    """``[(start, size), ...]`` covering ``range(n)``."""
    return [(s, min(block, n - s)) for s in range(0, n, block)]


def run_blocks(fn, n: int, rng, args=(), workers: int = 1, block: int = BLOCK):
    """Call ``fn(seed_sequence, start, size, *args)`` per block and return the list of results."""
    root = as_seed_sequence(rng)
    parts = blocks(n, block)
    seeds = root.spawn(len(parts))
    if workers is None or workers <= 1 or len(parts) <= 1:
        return [fn(sd, s, m, *args) for sd, (s, m) in zip(seeds, parts)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, sd, s, m, *args) for sd, (s, m) in zip(seeds, parts)]
        return [f.result() for f in futs]
