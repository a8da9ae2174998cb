"""Closed-form entropy bounds and an empirical census of realisable graphs.

All logarithms are base 2.  Every bound reports the asymptotic leading term
and the full finite-m right-hand side separately.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .entropy import binary_entropy
from .geometry import Domain, ball_volume, sample_in_ball
from .graphs import CapacityError, STRUCTURE_LIMIT, canonical_code, n_pairs, sample_graph_distribution
from .streams import as_generator

LOG2_4E = math.log2(4 * math.e)


def warren_sign_pattern_bound(u: int, t: int, k: int) -> float:
    """log2 of ``(4 e k u / t)^t``, the bound on realisable sign patterns."""
    if min(u, t, k) < 1:
        raise ValueError("u, t and k must be positive")
    return t * math.log2(4 * math.e * k * u / t)


def count_bound_constant(d: int, torus: bool) -> float:
    """log2 of the per-coordinate constant: ``4e/d`` on the cube, ``4e 3^d / d`` on the torus."""
    return LOG2_4E + (d * math.log2(3) if torus else 0.0) - math.log2(d)


def graph_count_bound(m: int, d: int, domain: Domain | None = None) -> float:
    """log2 of the bound on the number of geometric graphs on m vertices."""
    if m < 2:
        raise ValueError("graph_count_bound needs m >= 2")
    torus = bool(domain is not None and domain.is_torus)
    return d * m * math.log2(m) + d * m * count_bound_constant(d, torus)


def log2_factorial(m: int) -> float:
    """Exact summation up to m = 20, log-gamma beyond."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if m <= 20:
        return float(sum(math.log2(k) for k in range(2, m + 1)))
    return math.lgamma(m + 1) / math.log(2)


def structural_entropy_floor(h_graph_bits: float, m: int) -> float:
    """``max(0, H(G_m) - log2 m!)``: labelings carry at most log2 m! bits."""
    if h_graph_bits < 0:
        raise ValueError("entropy must be non-negative")
    return max(0.0, h_graph_bits - log2_factorial(m))


# ---------------------------------------------------------------------------
# core ball volume


BETA_MC_SAMPLES = 10_000_000
_BETA_CHUNK = 1 << 20


def beta_estimate(d: int, r: float, n_samples: int = BETA_MC_SAMPLES, rng=None) -> tuple[float, float]:
    """Volume of the central ball of radius ``r - sqrt(d)/2`` clipped to the cube.

    Returns ``(value, sigma)``.  Exact while the ball fits inside the cube,
    hit-sampled inside the ball otherwise.
    """
    if r >= math.sqrt(d):
        raise ValueError(f"beta needs r < sqrt(d) = {math.sqrt(d):.6g}")
    rho = r - math.sqrt(d) / 2
    if rho <= 0:
        return 0.0, 0.0
    if rho <= 0.5:
        return ball_volume(d, rho), 0.0
    gen = as_generator(rng)
    hits = 0
    remaining = int(n_samples)
    centre = np.full(d, 0.5)
    while remaining:
        k = min(remaining, _BETA_CHUNK)
        pts = sample_in_ball(k, d, rho, centre, gen)
        hits += int(np.all((pts >= 0) & (pts <= 1), axis=1).sum())
        remaining -= k
    frac = hits / n_samples
    vol = ball_volume(d, rho)
    return vol * frac, vol * math.sqrt(frac * (1 - frac) / n_samples)


def beta(d: int, r: float, mc_params: dict | None = None, rng=None) -> float:
    n = int((mc_params or {}).get("n_samples", BETA_MC_SAMPLES))
    return beta_estimate(d, r, n, rng)[0]


# ---------------------------------------------------------------------------
# upper bounds


@dataclass
class BoundReport:
    m: int
    d: int
    r: float
    domain: str
    leading_term_bits: float
    full_rhs_bits: float
    regime: str
    constants: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return asdict(self)


def entropy_upper_bound(m: int, d: int, r: float, domain: Domain | None = None,
                        mc_params: dict | None = None, rng=None) -> BoundReport:
    """Upper bound on ``H(G_m)`` for the cube or torus.

    On the cube with ``r > sqrt(d)/2`` the core vertices (those within
    ``r - sqrt(d)/2`` of the centre) are adjacent to everything, which gives
    ``m + d (1-beta) m log2 m + (1-beta) m log2 C``.  The literal form with the
    dimension factor dropped from the middle term is kept under
    ``constants["full_rhs_without_d_bits"]``.
    """
    domain = domain or Domain.cube(d)
    if domain.d != d:
        raise ValueError("dimension does not match domain")
    r = domain.check_radius(r)
    if m < 2:
        raise ValueError("entropy_upper_bound needs m >= 2")
    log_c = count_bound_constant(d, domain.is_torus)
    u = n_pairs(m) * (3**d if domain.is_torus else 1)
    constants = {
        "log2_C_per_coordinate": log_c,
        "warren_u": u,
        "warren_t": d * m,
        "warren_k": 2,
        "warren_bits": warren_sign_pattern_bound(u, d * m, 2),
    }
    count = graph_count_bound(m, d, domain)
    lead = d * m * math.log2(m)
    if domain.is_torus or r <= math.sqrt(d) / 2:
        constants["beta"] = 0.0
        return BoundReport(m, d, r, domain.flavor.value, lead, count, "count", constants)
    b, sigma = beta_estimate(d, r, int((mc_params or {}).get("n_samples", BETA_MC_SAMPLES)), rng)
    constants.update(beta=b, beta_sigma=sigma)
    core_free = (1 - b) * m
    full = m + d * core_free * math.log2(m) + core_free * d * log_c
    constants["full_rhs_without_d_bits"] = m + core_free * math.log2(m) + core_free * d * log_c
    constants["count_bound_bits"] = count
    return BoundReport(m, d, r, domain.flavor.value, (1 - b) * lead, full, "core", constants)


def pairwise_upper_bound(m: int, p: float) -> float:
    """``C(m,2) h2(p)``, the bound from treating all edges as independent."""
    return n_pairs(m) * binary_entropy(p)


def asymptotic_curve_1d(r: float) -> float:
    """Limit of ``H(G_m) / (m log m)`` on the unit interval: ``min(1, 2(1 - r))``."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    return 1.0 if r <= 0.5 else 2.0 * (1.0 - r)


# ---------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class Census:
    distinct_graphs: int
    distinct_structures: int | None
    n_samples: int


def graph_census(m: int, d: int, r: float, domain: Domain | None = None, n_samples: int = 100_000,
                 rng=None, workers: int = 1, structures: bool = True) -> Census:
    """Distinct graphs and (optionally) distinct unlabeled structures among samples.

    These are certified lower bounds on the support sizes.
    """
    domain = domain or Domain.cube(d)
    if structures and m > STRUCTURE_LIMIT:
        raise CapacityError(f"structure census needs m <= {STRUCTURE_LIMIT}")
    sample = sample_graph_distribution(m, domain, r, n_samples, rng, workers)
    graphs = sample.dist
    n_struct = None
    if structures:
        n_struct = len({canonical_code(m, int(code)) for code in graphs.counts})
    return Census(graphs.support, n_struct, sample.n_samples)
