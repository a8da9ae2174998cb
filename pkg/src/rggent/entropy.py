"""Entropy estimators for hard RGGs, all in bits.

Plug-in estimates work on sampled graph/structure distributions.  The lower
bound pipeline adds one vertex at a time: the entropy of the new vertex's
edge profile given the anchor locations equals the expected value of
``log2 1/Vol(A)``, where ``A`` is the set of probe locations producing the
realised profile.  Three backends estimate that term: an exact 1-D interval
sweep, nested Monte Carlo volumes, and the torus second-moment identity
(a Jensen lower bound).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

import numpy as np

from .geometry import (
    TORUS_EUCLIDEAN_LIMIT,
    Domain,
    RegionSpec,
    UnsupportedRange,
    crescent_volume,
    distance,
    region_volume_mc,
)
from .graphs import EmpiricalDistribution, pair_edge_probability_exact
from .streams import as_generator, as_stream, ordered_sum, parallel_map

class EstimatorKind(str, enum.Enum):
    PLUG_IN = "PlugIn"
    MILLER_MADOW = "MillerMadow"
    EXACT_1D_SWEEP = "Exact1DSweep"
    VOL_MC = "VolMC"
    SECOND_MOMENT_TORUS = "SecondMomentTorus"


@dataclass
class EntropyEstimate:
    bits: float
    std_error: float
    n_samples: int
    kind: EstimatorKind
    flags: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "kind": EstimatorKind(self.kind).value,
            "bits": float(self.bits),
            "std_error": float(self.std_error),
            "n_samples": int(self.n_samples),
            "flags": self.flags,
        }


def binary_entropy(p) -> float:
    """h2(p) in bits with 0 log 0 = 0."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _entropy_of_counts(counts: np.ndarray) -> np.ndarray:
    """Plug-in entropy along the last axis of a count array."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=-1)


BOOTSTRAP_RESAMPLES = 200


def plugin_entropy(dist: EmpiricalDistribution, correction: str = "none",
                   bootstrap: int = BOOTSTRAP_RESAMPLES, rng=None) -> EntropyEstimate:
    """Plug-in entropy ``-sum p log2 p`` with an optional Miller-Madow correction.

    The standard error is the spread of the same estimator over multinomial
    bootstrap resamples of the counts.
    """
    if correction not in ("none", "miller_madow"):
        raise ValueError(f"unknown correction {correction!r}")
    n = dist.total
    if n < 1:
        raise ValueError("entropy of an empty distribution is undefined")
    counts = np.array([c for _, c in dist.sorted_counts()], dtype=np.int64)
    k = len(counts)

    def estimate(c):
        h = _entropy_of_counts(c)
        if correction == "miller_madow":
            support = np.count_nonzero(c, axis=-1)
            h = h + (support - 1) / (2 * n * math.log(2))
        return h

    bits = float(estimate(counts))
    se = 0.0
    if bootstrap and k > 1:
        gen = as_generator(rng)
        resampled = gen.multinomial(n, counts / n, size=int(bootstrap))
        se = float(np.std(estimate(resampled), ddof=1))
    kind = EstimatorKind.MILLER_MADOW if correction == "miller_madow" else EstimatorKind.PLUG_IN
    return EntropyEstimate(max(bits, 0.0), se, n, kind, {"support": k})


def conditional_plugin_entropy(dist: EmpiricalDistribution, key: Callable[[Hashable], Hashable]) -> float:
    """Plug-in ``H(X | f(X))`` from counts of ``X``: average within-class entropy."""
    n = dist.total
    if n < 1:
        raise ValueError("entropy of an empty distribution is undefined")
    classes: dict[Hashable, list[int]] = {}
    for outcome, c in dist.sorted_counts():
        classes.setdefault(key(outcome), []).append(c)
    total = 0.0
    for members in classes.values():
        arr = np.asarray(members, dtype=float)
        total += arr.sum() / n * float(_entropy_of_counts(arr))
    return total


def pair_entropy_exact(domain: Domain, r: float) -> float:
    """Exact ``H(G_2) = h2(p_r)`` where a closed-form edge probability exists."""
    r = domain.check_radius(r)
    return binary_entropy(pair_edge_probability_exact(domain, r))


# ---------------------------------------------------------------------------
# 1-D exact sweep


def profile_volumes_1d(anchors, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Realisable profiles and their probe-set lengths on [0, 1].

    The breakpoints ``x_i +/- r`` cut [0, 1] into cells; every point of a cell
    sees the same profile.  Returns ``(profiles, volumes)`` with one boolean
    row per distinct profile.
    """
    x = np.asarray(anchors, dtype=float).ravel()
    if np.any((x < 0) | (x > 1)):
        raise ValueError("anchors must lie in [0, 1]")
    if len(x) == 0:
        return np.zeros((1, 0), dtype=bool), np.ones(1)
    cuts = np.unique(np.clip(np.concatenate([[0.0, 1.0], x - r, x + r]), 0.0, 1.0))
    lengths = np.diff(cuts)
    keep = lengths > 0
    mids = (cuts[:-1] + cuts[1:])[keep] / 2
    lengths = lengths[keep]
    cells = np.abs(mids[:, None] - x[None, :]) <= r
    packed = np.packbits(cells, axis=1)
    _, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    volumes = np.bincount(inverse.ravel(), weights=lengths)
    return cells[first], volumes


def _volume_entropy(volumes: np.ndarray) -> float:
    v = volumes[volumes > 0]
    return float(-np.sum(v * np.log2(v)))


def profile_entropy_exact_1d(anchors, r: float) -> float:
    """``H(E_1,...,E_n | X = anchors)`` on the unit interval, exactly."""
    if np.asarray(anchors).size == 0:
        return 0.0
    _, volumes = profile_volumes_1d(anchors, r)
    return _volume_entropy(volumes)


# ---------------------------------------------------------------------------
# nested Monte Carlo


MIN_HITS = 50
ESCALATION = 4
MAX_BUDGET = 64
MC_BLOCK = 128


def _log_inverse_volume(anchors: np.ndarray, r: float, domain: Domain, inner_n: int,
                        gen: np.random.Generator) -> tuple[float | None, bool]:
    x0 = domain.sample(1, gen)[0]
    profile = np.atleast_1d(distance(domain, anchors, x0) <= r)
    spec = RegionSpec(r, domain, anchors[profile], anchors[~profile])
    hits = 0
    total = 0
    target = inner_n
    escalated = False
    while True:
        p, _ = region_volume_mc(spec, target - total, gen)
        hits += int(round(p * (target - total)))
        total = target
        if hits >= MIN_HITS or total >= MAX_BUDGET * inner_n:
            break
        target = min(total * ESCALATION, MAX_BUDGET * inner_n)
        escalated = True
    if hits == 0:
        return None, escalated
    return math.log2(total / hits), escalated


def _mc_block(task):
    anchors, r, domain, inner_n, stream, start, stop = task
    out = []
    for j in range(start, stop):
        out.append(_log_inverse_volume(anchors, r, domain, inner_n, stream.spawn(j).generator()))
    return out


def profile_entropy_mc(anchors, r: float, domain: Domain, outer_n: int, inner_n: int,
                       rng=None, workers: int = 1) -> EntropyEstimate:
    """Average ``log2 1/Vol(A)`` over probe draws with hit-sampled volumes.

    A draw whose region gets fewer than 50 hits is re-sampled with 4x, 16x and
    64x the inner budget; if it still has no hit it is dropped and counted in
    ``flags["dropped_draws"]``.
    """
    if outer_n < 1 or inner_n < 1:
        raise ValueError("outer_n and inner_n must be positive")
    a = np.asarray(anchors, dtype=float)
    if a.size == 0:
        return EntropyEstimate(0.0, 0.0, int(outer_n), EstimatorKind.VOL_MC, {"dropped_draws": 0})
    r = domain.check_radius(r, closed=True)
    a = domain.points(a).reshape(-1, domain.d)
    stream = as_stream(rng)
    tasks = [(a, r, domain, int(inner_n), stream, s, min(s + MC_BLOCK, outer_n))
             for s in range(0, outer_n, MC_BLOCK)]
    results = [item for block in parallel_map(_mc_block, tasks, workers) for item in block]
    values = np.array([v for v, _ in results if v is not None])
    dropped = sum(1 for v, _ in results if v is None)
    escalated = sum(1 for _, e in results if e)
    flags = {"dropped_draws": dropped, "escalated_draws": escalated}
    if len(values) == 0:
        return EntropyEstimate(float("nan"), float("nan"), 0, EstimatorKind.VOL_MC, flags)
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else float("inf")
    return EntropyEstimate(float(np.mean(values)), se, len(values), EstimatorKind.VOL_MC, flags)


# ---------------------------------------------------------------------------
# torus second moment


PAIR_CHUNK = 1 << 20


def _check_torus_range(d: int, r: float):
    if not 0 < r <= TORUS_EUCLIDEAN_LIMIT:
        raise UnsupportedRange("the second-moment identity is evaluated only for 0 < r <= 1/4")
    Domain.torus(d)


def second_moment_curve(ns, d: int, r: float, pair_samples: int, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Estimates of ``E[(1 - Vol(C(X, X')))^n]`` for several ``n`` from one set of pairs.

    Crescent volumes are exact; only the average over uniform pairs is random.
    Returns ``(means, std_errors)``.
    """
    _check_torus_range(d, r)
    ns = np.asarray(ns, dtype=float)
    if np.any(ns < 0):
        raise ValueError("n must be non-negative")
    domain = Domain.torus(d)
    gen = as_generator(rng)
    s1 = np.zeros(len(ns))
    s2 = np.zeros(len(ns))
    remaining = int(pair_samples)
    if remaining < 1:
        raise ValueError("pair_samples must be positive")
    while remaining:
        k = min(remaining, PAIR_CHUNK)
        x = domain.sample(k, gen)
        y = domain.sample(k, gen)
        keep = 1.0 - crescent_volume(d, r, distance(domain, x, y))
        with np.errstate(divide="ignore"):
            logs = np.log(np.clip(keep, 0.0, 1.0))
        vals = np.exp(ns[:, None] * logs[None, :])
        vals[ns == 0] = 1.0
        s1 += vals.sum(axis=1)
        s2 += (vals * vals).sum(axis=1)
        remaining -= k
    n = int(pair_samples)
    mean = s1 / n
    var = np.maximum(s2 / n - mean**2, 0.0)
    return mean, np.sqrt(var / n)


def second_moment_volume_torus(n: int, d: int, r: float, pair_samples: int, rng=None) -> float:
    """Monte Carlo ``E[Vol(A)]`` over anchors and probe via ``E[(1 - crescent)^n]``."""
    mean, _ = second_moment_curve([n], d, r, pair_samples, rng)
    return float(mean[0])


def jensen_profile_lower_bound(n: int, d: int, r: float, pair_samples: int, rng=None) -> float:
    """``-log2 E[Vol(A)]``, a lower bound on the profile entropy up to MC error."""
    if n == 0:
        return 0.0
    return -math.log2(second_moment_volume_torus(n, d, r, pair_samples, rng))


# ---------------------------------------------------------------------------
# graph-level lower bound


DEFAULT_PARAMS = {
    "anchor_draws": 64,
    "outer_n": 64,
    "inner_n": 4096,
    "pair_samples": 1 << 20,
}


def _term_exact(task):
    n, r, draws, stream = task
    vals = np.array([profile_entropy_exact_1d(stream.spawn(j).generator().random(n), r)
                     for j in range(draws)])
    var = float(np.var(vals, ddof=1) / draws) if draws > 1 else 0.0
    return float(vals.mean()), var, draws


def _term_volmc(task):
    n, r, domain, params, stream = task
    draws = params["anchor_draws"]
    vals = []
    for j in range(draws):
        anchors = domain.sample(n, stream.spawn(j, 0).generator())
        est = profile_entropy_mc(anchors, r, domain, params["outer_n"], params["inner_n"],
                                 stream.spawn(j, 1))
        if est.n_samples:
            vals.append(est.bits)
    vals = np.array(vals)
    var = float(np.var(vals, ddof=1) / len(vals)) if len(vals) > 1 else 0.0
    return float(vals.mean()), var, draws * params["outer_n"]


def _term_second_moment(task):
    n, d, r, pairs, stream = task
    mean, se = second_moment_curve([n], d, r, pairs, stream.generator())
    mean, se = float(mean[0]), float(se[0])
    return -math.log2(mean), (se / (mean * math.log(2))) ** 2, pairs


def graph_entropy_lower_bound(m: int, domain: Domain, r: float, backend: str = "Exact1DSweep",
                              params: dict | None = None, rng=None, workers: int = 1) -> EntropyEstimate:
    """Sum over n = 1..m-1 of the per-vertex profile entropy estimates.

    Term ``n`` draws from substream ``n`` so each is reproducible on its own.
    """
    kind = EstimatorKind(backend)
    p = dict(DEFAULT_PARAMS)
    p.update(params or {})
    r = domain.check_radius(r)
    stream = as_stream(rng)
    if kind is EstimatorKind.EXACT_1D_SWEEP:
        if domain.is_torus or domain.d != 1:
            raise ValueError("Exact1DSweep needs the 1-D cube")
        tasks = [(n, r, p["anchor_draws"], stream.spawn(n)) for n in range(1, m)]
        terms = parallel_map(_term_exact, tasks, workers)
    elif kind is EstimatorKind.VOL_MC:
        tasks = [(n, r, domain, p, stream.spawn(n)) for n in range(1, m)]
        terms = parallel_map(_term_volmc, tasks, workers)
    elif kind is EstimatorKind.SECOND_MOMENT_TORUS:
        if not domain.is_torus:
            raise ValueError("SecondMomentTorus needs a torus domain")
        _check_torus_range(domain.d, r)
        tasks = [(n, domain.d, r, p["pair_samples"], stream.spawn(n)) for n in range(1, m)]
        terms = parallel_map(_term_second_moment, tasks, workers)
    else:
        raise ValueError(f"{backend} is not a lower-bound backend")
    bits = ordered_sum(t[0] for t in terms)
    var = ordered_sum(t[1] for t in terms)
    n_samples = sum(t[2] for t in terms)
    return EntropyEstimate(bits, math.sqrt(var), n_samples, kind,
                           {"terms": [round(t[0], 12) for t in terms]})


# ---------------------------------------------------------------------------
# 1-D, r >= 1/2


@dataclass(frozen=True)
class RestrictedEventBound:
    bound: float
    raw_bound: float
    p_event_floor: float
    p_event_floor_raw: float
    restricted_volume: float
    restricted_volume_se: float
    anchor_draws: int

    def to_record(self) -> dict:
        return dict(self.__dict__)


def _restricted_volume(task):
    m, r, stream = task
    anchors = stream.generator().random(m)
    profiles, volumes = profile_volumes_1d(anchors, r)
    not_all_ones = ~np.all(profiles, axis=1)
    # E[Vol(A) 1{not all ones} | X] = sum over such profiles of Vol^2
    return float(np.sum(volumes[not_all_ones] ** 2))


def restricted_event_floor(m: int, r: float) -> float:
    """Unclamped floor ``2(1-r) - (1 - (m-1)/(m+1) + 2 r^m)`` on P(profile is not all ones)."""
    return 2 * (1 - r) - (1 - (m - 1) / (m + 1) + 2 * r**m)


def restricted_event_bound_1d(m: int, r: float, mc_params: dict | None = None, rng=None,
                              workers: int = 1) -> RestrictedEventBound:
    """Lower bound on the 1-D profile entropy for ``1/2 <= r < 1`` via the not-all-ones event.

    ``(1/e) log2(1/e) + P * log2(1/E[Vol(A) 1_event])`` with ``P`` the closed-form
    floor and the restricted volume averaged over anchor draws with the exact
    sweep.  Floors below zero are clamped and the bound degenerates to zero.
    """
    if not 0.5 <= r < 1:
        raise ValueError("restricted_event_bound_1d needs 1/2 <= r < 1")
    if m < 1:
        raise ValueError("m must be positive")
    draws = int((mc_params or {}).get("anchor_draws", 256))
    stream = as_stream(rng)
    vals = np.array(parallel_map(_restricted_volume, [(m, r, stream.spawn(j)) for j in range(draws)], workers))
    e_vol = float(vals.mean())
    se = float(np.std(vals, ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    raw_floor = restricted_event_floor(m, r)
    floor = max(0.0, raw_floor)
    raw = (1 / math.e) * math.log2(1 / math.e) + floor * math.log2(1 / e_vol) if e_vol > 0 else float("inf")
    return RestrictedEventBound(max(0.0, raw), raw, floor, raw_floor, e_vol, se, draws)
