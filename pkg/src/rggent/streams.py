"""Seeded random streams and an order-preserving worker pool.

Every random stream is identified by a root seed plus a tuple of integer
counters (the *key*).  A child stream appends one or more counters to the
key, so stream ``(seed, 3, 17)`` is always the same sequence no matter which
process draws from it or in which order tasks finish.  Generators use the
counter-based Philox bit generator keyed through ``numpy.random.SeedSequence``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

SEED_ENV = "RGGENT_SEED"
DEFAULT_SEED = 0


@dataclass(frozen=True)
class RandomStream:
    seed: int = DEFAULT_SEED
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def spawn(self, *index: int) -> "RandomStream":
        if any(i < 0 for i in index):
            raise ValueError("stream counters must be non-negative")
        return RandomStream(self.seed, self.key + tuple(int(i) for i in index))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def as_stream(rng: Any = None) -> RandomStream:
    """Coerce a seed, generator or stream into a :class:`RandomStream`."""
    if isinstance(rng, RandomStream):
        return rng
    if rng is None:
        return RandomStream(DEFAULT_SEED)
    if isinstance(rng, np.random.Generator):
        return RandomStream(int(rng.integers(0, 2**63)))
    if isinstance(rng, (int, np.integer)):
        return RandomStream(int(rng))
    raise TypeError(f"cannot build a random stream from {type(rng).__name__}")


def as_generator(rng: Any = None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()


def seed_from_env(seed: int | None = None) -> int:
    """Explicit seed, else ``$RGGENT_SEED``, else the default seed."""
    if seed is not None:
        return int(seed)
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    return int(raw, 0)


def _call(payload):
    fn, item = payload
    return fn(item)


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Map ``fn`` over ``items`` and return results in input order.

    ``fn`` must be picklable when ``workers > 1``.  Results never depend on
    the worker count because each task carries its own random stream.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, [(fn, item) for item in items]))


def ordered_sum(values: Sequence[float]) -> float:
    """Left-to-right float sum, so reductions follow task index order."""
    total = 0.0
    for v in values:
        total += float(v)
    return total
