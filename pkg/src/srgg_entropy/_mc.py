"""Deterministic chunked Monte-Carlo engine.

Work is split into fixed-size chunks. Chunk ``i`` draws from the ``i``-th
child of the master ``SeedSequence``, and per-chunk statistics are merged in
chunk order, so results are bit-identical for any number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 1 << 16


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int, ``SeedSequence`` or ``Generator`` into a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed))


@dataclass(frozen=True)
class MCResult:
    means: np.ndarray
    std_errors: np.ndarray
    n: int


def _chunk_stats(sampler, funcs, seed_seq, m):
    rng = np.random.default_rng(seed_seq)
    sample = sampler(rng, m)
    vals = np.stack([np.asarray(f(sample), dtype=float) for f in funcs])
    mean = vals.mean(axis=1)
    m2 = ((vals - mean[:, None]) ** 2).sum(axis=1)
    return mean, m2, m


def mc_means(sampler: Callable, funcs: Sequence[Callable], n: int, seed,
             chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCResult:
    """Sample means and standard errors of several statistics at once.

    ``sampler(rng, m)`` returns a batch of ``m`` draws and each ``f`` in
    ``funcs`` maps a batch to ``m`` values.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    n_chunks = -(-n // chunk_size)
    children = as_seed_sequence(seed).spawn(n_chunks)
    sizes = [chunk_size] * (n_chunks - 1) + [n - chunk_size * (n_chunks - 1)]
    args = list(zip(children, sizes))
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _chunk_stats(sampler, funcs, *a), args))
    else:
        parts = [_chunk_stats(sampler, funcs, *a) for a in args]
    # Chan et al. pairwise merge, always in chunk order.
    mean, m2, count = parts[0]
    for pm, pm2, pc in parts[1:]:
        total = count + pc
        delta = pm - mean
        mean = mean + delta * (pc / total)
        m2 = m2 + pm2 + delta * delta * (count * pc / total)
        count = total
    var = m2 / (count - 1)
    return MCResult(mean, np.sqrt(var / count), count)
