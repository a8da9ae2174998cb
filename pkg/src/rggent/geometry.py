"""Domains, metrics and volumes on the unit cube and the unit torus.

Points are numpy arrays of shape ``(d,)`` or ``(n, d)``.  Torus points are
kept as canonical representatives in ``[0, 1)^d``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import beta as beta_fn, betainc, gammaln

from .streams import as_generator


class Flavor(str, enum.Enum):
    CUBE = "cube"
    TORUS = "torus"


class UnsupportedRange(ValueError):
    """Raised when a closed form is requested outside its range of validity."""


@dataclass(frozen=True)
class Domain:
    d: int
    flavor: Flavor = Flavor.CUBE

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "flavor", Flavor(self.flavor))

    @classmethod
    def cube(cls, d: int) -> "Domain":
        return cls(d, Flavor.CUBE)

    @classmethod
    def torus(cls, d: int) -> "Domain":
        return cls(d, Flavor.TORUS)

    @property
    def is_torus(self) -> bool:
        return self.flavor is Flavor.TORUS

    @property
    def diameter(self) -> float:
        """Largest possible distance between two points of the domain."""
        return math.sqrt(self.d) / 2 if self.is_torus else math.sqrt(self.d)

    def check_radius(self, r: float, closed: bool = False) -> float:
        """Validate a connection range.

        Entropy and bound code uses the open range ``0 < r < diameter``;
        graph construction passes ``closed=True`` and also accepts
        ``r == diameter`` (every pair connected).
        """
        r = float(r)
        limit = self.diameter
        ok = r > 0 and (r <= limit if closed else r < limit)
        if not ok:
            rel = "<=" if closed else "<"
            raise ValueError(f"connection range must satisfy 0 < r {rel} {limit:.6g} on {self}, got {r}")
        return r

    def points(self, coords) -> np.ndarray:
        """Validate coordinates and return them as a float array (wrapped on the torus)."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.d:
            if self.d == 1 and x.ndim == 1:
                x = x.reshape(-1, 1)
            else:
                raise ValueError(f"expected points of dimension {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point coordinates must be finite")
        if self.is_torus:
            x = np.mod(x, 1.0)
            # mod can round tiny negatives up to exactly 1.0
            x[x >= 1.0] = 0.0
        elif np.any((x < 0) | (x > 1)):
            raise ValueError("cube coordinates must lie in [0, 1]")
        return x

    def sample(self, n: int, rng=None) -> np.ndarray:
        return as_generator(rng).random((int(n), self.d))

    def __str__(self) -> str:
        return f"{self.flavor.value}^{self.d}"


def coordinate_gaps(domain: Domain, x, y) -> np.ndarray:
    """Per-coordinate absolute differences, wrapped on the torus."""
    diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if domain.is_torus:
        diff = np.mod(diff, 1.0)
        diff = np.minimum(diff, 1.0 - diff)
    return diff


def _coords(domain: Domain, v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    # bare reals are 1-D points
    if domain.d == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        a = a[..., None]
    return a


def distance(domain: Domain, x, y):
    """Euclidean distance on the cube, toroidal distance on the torus.

    On the torus the per-coordinate minimum |dx| ∧ (1 - |dx|) is the same as
    minimising over integer shifts z in {-1, 0, 1}^d.  Broadcasts over
    leading axes.
    """
    x = _coords(domain, x)
    y = _coords(domain, y)
    if x.shape[-1] != domain.d or y.shape[-1] != domain.d:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape} on {domain}")
    out = np.sqrt(np.sum(coordinate_gaps(domain, x, y) ** 2, axis=-1))
    return float(out) if out.ndim == 0 else out


def unit_ball_volume(d: int) -> float:
    """Volume ``pi^(d/2) / Gamma(d/2 + 1)`` of the unit ball; 1 for d = 0."""
    if d < 0:
        raise ValueError("dimension must be non-negative")
    return float(math.exp((d / 2) * math.log(math.pi) - gammaln(d / 2 + 1)))


def ball_volume(d: int, r: float) -> float:
    return unit_ball_volume(d) * r**d


def _check_rs(r, s):
    if np.any(np.asarray(r) <= 0):
        raise ValueError("radius must be positive")
    if np.any(np.asarray(s) < 0):
        raise ValueError("centre separation must be non-negative")


def lens_volume(d: int, r: float, s):
    """Volume of the intersection of two radius-``r`` balls at distance ``s``.

    Two caps of height ``r - s/2``; each cap is
    ``c_d r^d / 2 * I_{1-(s/2r)^2}((d+1)/2, 1/2)``.
    """
    _check_rs(r, s)
    s_arr = np.asarray(s, dtype=float)
    t = np.clip(s_arr / (2 * r), 0.0, 1.0)
    x = t**2
    # complementary form while 1 - x would round away the small separation
    frac = np.where(x < 0.5, 1.0 - betainc(0.5, (d + 1) / 2, x), betainc((d + 1) / 2, 0.5, 1.0 - x))
    out = np.where(s_arr >= 2 * r, 0.0, ball_volume(d, r) * frac)
    return float(out) if out.ndim == 0 else out


def crescent_volume(d: int, r: float, s):
    """Volume of the symmetric difference of two radius-``r`` balls at distance ``s``.

    Equal to ``2 c_d r^d - 2 * lens``, evaluated through the complementary
    incomplete beta so small separations do not cancel.
    """
    _check_rs(r, s)
    s_arr = np.asarray(s, dtype=float)
    t = np.clip(s_arr / (2 * r), 0.0, 1.0)
    b = (d + 1) / 2
    with np.errstate(under="ignore"):
        frac = betainc(0.5, b, t**2)
    # (s/2r)^2 underflows for tiny s; I_x(1/2, b) ~ 2 sqrt(x) / B(1/2, b) there
    frac = np.where(t < 1e-100, 2 * t / beta_fn(0.5, b), frac)
    out = 2 * ball_volume(d, r) * frac
    return float(out) if out.ndim == 0 else out


def crescent_lower_bound(d: int, r: float, s):
    """Double-cone lower bound ``2 c_{d-1} r^{d-1} s / d`` for separations below 2r."""
    return 2 * unit_ball_volume(d - 1) * r ** (d - 1) / d * np.asarray(s, dtype=float)


TORUS_EUCLIDEAN_LIMIT = 0.25


def toroidal_crescent_volume(domain: Domain, r: float, x, x_prime):
    """Crescent volume of two toroidal balls; exact only for ``r <= 1/4``."""
    if not domain.is_torus:
        raise ValueError("toroidal_crescent_volume needs a torus domain")
    if r > TORUS_EUCLIDEAN_LIMIT:
        raise UnsupportedRange("toroidal crescents are only reduced to Euclidean ones for r <= 1/4")
    return crescent_volume(domain.d, r, distance(domain, x, x_prime))


@dataclass
class RegionSpec:
    """Set of probe locations inside every ``in`` ball and outside every ``out`` ball."""

    r: float
    domain: Domain
    in_centers: np.ndarray = field(default_factory=lambda: np.empty((0, 1)))
    out_centers: np.ndarray = field(default_factory=lambda: np.empty((0, 1)))

    def __post_init__(self):
        self.r = self.domain.check_radius(self.r, closed=True)
        self.in_centers = _as_centers(self.domain, self.in_centers)
        self.out_centers = _as_centers(self.domain, self.out_centers)

    def contains(self, probes: np.ndarray) -> np.ndarray:
        """Boolean mask over probe rows; distance exactly ``r`` counts as inside a ball."""
        mask = np.ones(len(probes), dtype=bool)
        for c in self.in_centers:
            mask &= distance(self.domain, probes, c) <= self.r
        for c in self.out_centers:
            mask &= distance(self.domain, probes, c) > self.r
        return mask


def _as_centers(domain: Domain, centers) -> np.ndarray:
    arr = np.asarray(centers, dtype=float)
    if arr.size == 0:
        return np.empty((0, domain.d))
    return domain.points(arr).reshape(-1, domain.d)


_MC_CHUNK = 1 << 18


def region_volume_mc(spec: RegionSpec, n_samples: int, rng=None) -> tuple[float, float]:
    """Hit-sampling estimate of the region volume and its binomial standard error."""
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if len(spec.in_centers) == 0 and len(spec.out_centers) == 0:
        return 1.0, 0.0
    gen = as_generator(rng)
    hits = 0
    remaining = n_samples
    while remaining:
        n = min(remaining, _MC_CHUNK)
        hits += int(spec.contains(spec.domain.sample(n, gen)).sum())
        remaining -= n
    p = hits / n_samples
    return p, math.sqrt(p * (1 - p) / n_samples)


def _merge_intervals(intervals: np.ndarray) -> list[tuple[float, float]]:
    if len(intervals) == 0:
        return []
    intervals = intervals[np.argsort(intervals[:, 0], kind="stable")]
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(a, b) for a, b in merged]


def profile_region_volume_1d(points: Sequence[float], r: float, profile) -> float:
    """Exact length of the probe set realising ``profile`` on [0, 1].

    ``profile[i]`` says whether the probe is adjacent to ``points[i]``.  The set
    is the intersection of ``[x_i - r, x_i + r]`` over adjacent anchors minus
    the same intervals of the non-adjacent ones, clipped to [0, 1].
    """
    x = np.asarray(points, dtype=float).ravel()
    bits = np.asarray(getattr(profile, "bits", profile), dtype=bool).ravel()
    if len(bits) != len(x):
        raise ValueError("profile length must match the number of points")
    if np.any(np.diff(x) < 0):
        raise ValueError("points must be sorted ascending")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("points must lie in [0, 1]")
    r = float(r)
    inside = x[bits]
    lo = max(0.0, float(np.max(inside - r))) if len(inside) else 0.0
    hi = min(1.0, float(np.min(inside + r))) if len(inside) else 1.0
    if hi <= lo:
        return 0.0
    outside = x[~bits]
    blocked = np.column_stack([np.maximum(outside - r, lo), np.minimum(outside + r, hi)])
    blocked = blocked[blocked[:, 1] > blocked[:, 0]]
    covered = sum(b - a for a, b in _merge_intervals(blocked))
    return float(min(1.0, max(0.0, (hi - lo) - covered)))


def all_far_volume_1d(sorted_points: Sequence[float], r: float) -> float:
    """Closed form for the all-non-adjacent profile: boundary gaps lose r, interior gaps lose 2r."""
    x = np.concatenate([[0.0], np.asarray(sorted_points, dtype=float), [1.0]])
    gaps = np.diff(x)
    shrink = np.full(len(gaps), 2 * r)
    shrink[0] = shrink[-1] = r
    if len(gaps) == 1:
        return 1.0
    return float(np.sum(np.maximum(gaps - shrink, 0.0)))


def all_near_volume_1d(sorted_points: Sequence[float], r: float) -> float:
    """Closed form ``[2r - (max(x_(m), r) - min(x_(1), 1 - r))]^+`` for the all-adjacent profile."""
    x = np.asarray(sorted_points, dtype=float)
    if len(x) == 0:
        return 1.0
    return max(0.0, 2 * r - (max(x[-1], r) - min(x[0], 1 - r)))


def max_spacing_1d(sorted_points: Sequence[float]) -> float:
    """Largest spacing of the points padded with 0 and 1; bounds every mixed profile."""
    x = np.concatenate([[0.0], np.asarray(sorted_points, dtype=float), [1.0]])
    return float(np.max(np.diff(x)))


def sample_in_ball(n: int, d: int, radius: float, center, rng=None) -> np.ndarray:
    """Uniform points in a Euclidean ball (Gaussian direction, ``U^(1/d)`` radius)."""
    gen = as_generator(rng)
    g = gen.standard_normal((int(n), d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    rad = radius * gen.random((int(n), 1)) ** (1.0 / d)
    return np.asarray(center, dtype=float) + g / norms * rad
