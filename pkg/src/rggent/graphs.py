"""Hard random geometric graphs, edge profiles and unlabeled structures.

A labeled graph on m vertices is stored as one integer whose bit ``k`` is the
``k``-th vertex pair in row-major upper-triangular order
``(0,1), (0,2), ..., (0,m-1), (1,2), ...``.  Serialising that integer
little-endian gives the byte encoding, so bit ``k`` sits in byte ``k // 8``
at position ``k % 8``.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

import numpy as np

from .geometry import Domain, UnsupportedRange, ball_volume, coordinate_gaps, distance
from .streams import as_generator, as_stream, parallel_map

STRUCTURE_LIMIT = 10
# codes are packed into int64 by the vectorised sampler
VECTOR_LIMIT = 11


class CapacityError(ValueError):
    """Raised when a graph is too large for brute-force canonicalisation."""


def n_pairs(m: int) -> int:
    return m * (m - 1) // 2


@functools.lru_cache(maxsize=None)
def pair_index(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major upper-triangular pair lists ``(i, j)`` with ``i < j``."""
    iu, ju = np.triu_indices(m, k=1)
    return iu.astype(np.int64), ju.astype(np.int64)


def _n_bytes(m: int) -> int:
    return max(1, (n_pairs(m) + 7) // 8)


@dataclass(frozen=True)
class LabeledGraph:
    m: int
    code: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("vertex count must be non-negative")
        if self.code < 0 or self.code >> n_pairs(self.m):
            raise ValueError("edge code has bits beyond the pair count")

    @classmethod
    def from_adjacency(cls, adj) -> "LabeledGraph":
        a = np.asarray(adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(a != a.T) or np.any(np.diag(a)):
            raise ValueError("adjacency must be symmetric with an empty diagonal")
        m = a.shape[0]
        iu, ju = pair_index(m)
        return cls(m, bits_to_code(a[iu, ju]))

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[tuple[int, int]]) -> "LabeledGraph":
        a = np.zeros((m, m), dtype=bool)
        for u, v in edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            a[u, v] = a[v, u] = True
        return cls.from_adjacency(a)

    @classmethod
    def from_hex(cls, m: int, text: str) -> "LabeledGraph":
        return cls(m, int.from_bytes(bytes.fromhex(text), "little"))

    @property
    def bits(self) -> np.ndarray:
        return code_to_bits(self.code, n_pairs(self.m))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.m, self.m), dtype=bool)
        iu, ju = pair_index(self.m)
        a[iu, ju] = self.bits
        return a | a.T

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = pair_index(self.m)
        b = self.bits
        return [(int(i), int(j)) for i, j, on in zip(iu, ju, b) if on]

    def n_edges(self) -> int:
        return bin(self.code).count("1")

    def to_bytes(self) -> bytes:
        return self.code.to_bytes(_n_bytes(self.m), "little")

    def hex(self) -> str:
        return self.to_bytes().hex()

    def permute(self, perm) -> "LabeledGraph":
        """Relabel vertex ``v`` as ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        a = self.adjacency()
        b = np.zeros_like(a)
        b[np.ix_(perm, perm)] = a
        return LabeledGraph.from_adjacency(b)


def bits_to_code(bits) -> int:
    code = 0
    for k, on in enumerate(np.asarray(bits, dtype=bool).ravel()):
        if on:
            code |= 1 << k
    return code


def code_to_bits(code: int, n: int) -> np.ndarray:
    return np.array([(code >> k) & 1 for k in range(n)], dtype=bool)


@dataclass(frozen=True)
class EdgeProfile:
    bits: tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def in_set(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class CanonicalStructure:
    m: int
    code: int

    @property
    def bits(self) -> np.ndarray:
        return code_to_bits(self.code, n_pairs(self.m))

    def to_bytes(self) -> bytes:
        return self.code.to_bytes(_n_bytes(self.m), "little")

    def hex(self) -> str:
        return self.to_bytes().hex()


def sample_points(m: int, domain: Domain, rng=None) -> np.ndarray:
    if m < 0:
        raise ValueError("m must be non-negative")
    return domain.sample(m, rng)


def build_graph(points, r: float, domain: Domain) -> LabeledGraph:
    """Graph with an edge exactly when two points are within distance ``r``."""
    r = domain.check_radius(r, closed=True)
    x = domain.points(points).reshape(-1, domain.d)
    m = len(x)
    iu, ju = pair_index(m)
    if m < 2:
        return LabeledGraph(m, 0)
    return LabeledGraph(m, bits_to_code(distance(domain, x[iu], x[ju]) <= r))


def edge_profile(x0, anchors, r: float, domain: Domain) -> EdgeProfile:
    r = domain.check_radius(r, closed=True)
    a = np.asarray(anchors, dtype=float)
    if a.size == 0:
        return EdgeProfile(())
    a = domain.points(a).reshape(-1, domain.d)
    p = domain.points(x0).reshape(domain.d)
    return EdgeProfile(tuple(bool(b) for b in np.atleast_1d(distance(domain, a, p) <= r)))


def graph_codes(points: np.ndarray, r: float, domain: Domain) -> np.ndarray:
    """Vectorised edge codes for a batch of point sets shaped ``(batch, m, d)``."""
    batch, m, _ = points.shape
    if m > VECTOR_LIMIT:
        raise CapacityError(f"vectorised codes support m <= {VECTOR_LIMIT}")
    codes = np.zeros(batch, dtype=np.int64)
    r2 = r * r
    for k, (i, j) in enumerate(zip(*pair_index(m))):
        gap = coordinate_gaps(domain, points[:, i, :], points[:, j, :])
        codes |= (np.einsum("bd,bd->b", gap, gap) <= r2).astype(np.int64) << k
    return codes


def sample_graph_codes(m: int, domain: Domain, r: float, n: int, rng=None) -> np.ndarray:
    r = domain.check_radius(r, closed=True)
    gen = as_generator(rng)
    return graph_codes(gen.random((int(n), m, domain.d)), r, domain)


# ---------------------------------------------------------------------------
# canonical structures


@functools.lru_cache(maxsize=4)
def _perm_pair_table(m: int) -> np.ndarray:
    """For every permutation, the source pair index feeding each target pair."""
    iu, ju = pair_index(m)
    index = np.full((m, m), -1, dtype=np.int64)
    index[iu, ju] = np.arange(len(iu))
    index[ju, iu] = np.arange(len(iu))
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)
    return index[perms[:, iu], perms[:, ju]].astype(np.int16 if m > 1 else np.int64)


def _lex_weights(n: int) -> np.ndarray:
    # bit 0 is the most significant position of the lexicographic key
    return (np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64)) if n else np.zeros(0, np.int64)


def _canonical_code_small(m: int, bits: np.ndarray) -> int:
    n = n_pairs(m)
    if n == 0:
        return 0
    table = _perm_pair_table(m)
    keys = bits[table].astype(np.int64) @ _lex_weights(n)
    best = table[int(np.argmin(keys))]
    return bits_to_code(bits[best])


def _canonical_code_chunked(m: int, bits: np.ndarray, chunk: int = 1 << 16) -> int:
    iu, ju = pair_index(m)
    index = np.full((m, m), -1, dtype=np.int64)
    index[iu, ju] = np.arange(len(iu))
    index[ju, iu] = np.arange(len(iu))
    weights = _lex_weights(len(iu))
    best_key, best_bits = None, None
    perms = itertools.permutations(range(m))
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.int64)
        if len(block) == 0:
            break
        permuted = bits[index[block[:, iu], block[:, ju]]]
        keys = permuted.astype(np.int64) @ weights
        k = int(np.argmin(keys))
        if best_key is None or keys[k] < best_key:
            best_key, best_bits = int(keys[k]), permuted[k]
    return bits_to_code(best_bits)


def canonical_form(g: LabeledGraph, limit: int = STRUCTURE_LIMIT) -> CanonicalStructure:
    """Lexicographically smallest pair-bit sequence over all vertex relabelings.

    Brute force over ``m!`` permutations, so ``m`` is capped at ``limit``.
    """
    if g.m > limit:
        raise CapacityError(f"canonical_form supports m <= {limit}, got m = {g.m}")
    bits = g.bits
    if g.m <= 8:
        code = _canonical_code_small(g.m, bits)
    else:
        code = _canonical_code_chunked(g.m, bits)
    return CanonicalStructure(g.m, code)


@functools.lru_cache(maxsize=1 << 16)
def canonical_code(m: int, code: int) -> int:
    return canonical_form(LabeledGraph(m, int(code))).code


# ---------------------------------------------------------------------------
# empirical distributions


class EmpiricalDistribution:
    """Exact outcome counts; merging is count-additive and order-independent."""

    def __init__(self, counts: Mapping[Hashable, int] | None = None):
        self.counts: dict[Hashable, int] = {}
        for key, c in (counts or {}).items():
            if c < 0:
                raise ValueError("counts must be non-negative")
            if c:
                self.counts[key] = self.counts.get(key, 0) + int(c)

    @classmethod
    def from_array(cls, codes: np.ndarray) -> "EmpiricalDistribution":
        values, counts = np.unique(np.asarray(codes), return_counts=True)
        return cls({v.item(): int(c) for v, c in zip(values, counts)})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def support(self) -> int:
        return len(self.counts)

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        out = dict(self.counts)
        for k, c in other.counts.items():
            out[k] = out.get(k, 0) + c
        return EmpiricalDistribution(out)

    __add__ = merge

    def map(self, fn) -> "EmpiricalDistribution":
        """Push counts through ``fn``, e.g. graph codes to structure codes."""
        out: dict[Hashable, int] = {}
        for k, c in self.counts.items():
            key = fn(k)
            out[key] = out.get(key, 0) + c
        return EmpiricalDistribution(out)

    def sorted_counts(self) -> list[tuple[Hashable, int]]:
        return sorted(self.counts.items(), key=lambda kv: repr(kv[0]))

    def __eq__(self, other) -> bool:
        return isinstance(other, EmpiricalDistribution) and self.counts == other.counts

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(support={self.support}, total={self.total})"


def empirical_distribution(samples: Iterable[Hashable]) -> EmpiricalDistribution:
    if isinstance(samples, np.ndarray):
        return EmpiricalDistribution.from_array(samples)
    return EmpiricalDistribution(Counter(samples))


@dataclass(frozen=True)
class GraphSample:
    """Distribution of graph codes plus the edge-density moments of the same draws."""

    m: int
    dist: EmpiricalDistribution
    edge_sum: int
    edge_sq_sum: int

    @property
    def n_samples(self) -> int:
        return self.dist.total

    @property
    def edge_probability(self) -> float:
        return self.edge_sum / (self.n_samples * n_pairs(self.m))

    @property
    def edge_probability_se(self) -> float:
        n = self.n_samples
        k = n_pairs(self.m)
        mean = self.edge_sum / n
        var = max(self.edge_sq_sum / n - mean * mean, 0.0)
        return math.sqrt(var / n) / k

    def merge(self, other: "GraphSample") -> "GraphSample":
        return GraphSample(self.m, self.dist.merge(other.dist),
                           self.edge_sum + other.edge_sum, self.edge_sq_sum + other.edge_sq_sum)


SHARD_SIZE = 1 << 20


def _sample_shard(task) -> GraphSample:
    m, domain, r, n, stream = task
    codes = sample_graph_codes(m, domain, r, n, stream.generator())
    counts = _popcount(codes)
    return GraphSample(m, EmpiricalDistribution.from_array(codes),
                       int(counts.sum()), int((counts * counts).sum()))


def _popcount(codes: np.ndarray) -> np.ndarray:
    return np.bitwise_count(codes).astype(np.int64)


def sample_graph_distribution(m: int, domain: Domain, r: float, n_samples: int, rng=None,
                              workers: int = 1, shard_size: int = SHARD_SIZE) -> GraphSample:
    """Sample ``n_samples`` labeled graphs in fixed-size shards.

    Shard ``i`` always draws from substream ``i``, so the counts do not depend
    on ``workers``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    r = domain.check_radius(r, closed=True)
    stream = as_stream(rng)
    n_samples = int(n_samples)
    tasks = []
    for i, start in enumerate(range(0, n_samples, shard_size)):
        tasks.append((m, domain, r, min(shard_size, n_samples - start), stream.spawn(i)))
    parts = parallel_map(_sample_shard, tasks, workers)
    out = GraphSample(m, EmpiricalDistribution(), 0, 0)
    for p in parts:
        out = out.merge(p)
    return out


def structure_distribution(graphs: EmpiricalDistribution, m: int) -> EmpiricalDistribution:
    if m > STRUCTURE_LIMIT:
        raise CapacityError(f"structures need m <= {STRUCTURE_LIMIT}")
    return graphs.map(lambda code: canonical_code(m, int(code)))


def pair_edge_probability_exact(domain: Domain, r: float) -> float:
    """Closed-form probability that two uniform points are within ``r``.

    Available on the 1-D cube (``2r - r^2``) and on the torus for ``r <= 1/2``
    (``c_d r^d``, the ball does not wrap onto itself).
    """
    if not domain.is_torus and domain.d == 1:
        if not 0 < r <= 1:
            raise UnsupportedRange("cube d=1 closed form needs 0 < r <= 1")
        return 2 * r - r * r
    if domain.is_torus and 0 < r <= 0.5:
        return ball_volume(domain.d, r)
    raise UnsupportedRange(f"no closed-form edge probability on {domain} at r = {r}")
