"""Seed-derived substreams and ordered thread-pool maps for Monte Carlo work."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from config import get_mc_config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def chunk_sizes(n: int, chunk: int | None = None) -> list[int]:
    """Split n samples into fixed-size chunks; the last one takes the remainder."""
    if chunk is None:
        chunk, _, _ = get_mc_config()
    chunk = max(1, int(chunk))
    full, rest = divmod(int(n), chunk)
    sizes = [chunk] * full
    if rest:
        sizes.append(rest)
    return sizes


def spawn_streams(seed: int | np.random.SeedSequence, count: int) -> list[np.random.Generator]:
    """One independent generator per chunk, derived from a single seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    children = root.spawn(count)
    return [np.random.default_rng(s) for s in children]


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Apply fn concurrently; results come back in input order."""
    items = list(items)
    if workers is None:
        _, workers, _ = get_mc_config()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_chunked(
    worker: Callable[[np.random.Generator, int], T],
    n: int,
    seed: int | np.random.SeedSequence,
    chunk: int | None = None,
    workers: int | None = None,
) -> list[T]:
    """Run worker(rng, size) over seed-derived chunks and return per-chunk results in order.

    The chunk layout depends on n and the chunk size only, so the merged
    result is the same for any worker count.
    """
    sizes = chunk_sizes(n, chunk)
    streams = spawn_streams(seed, len(sizes))
    logger.debug(f"run_chunked: n={n} seed={seed} chunks={len(sizes)}")
    return map_ordered(lambda job: worker(job[0], job[1]), zip(streams, sizes), workers)
