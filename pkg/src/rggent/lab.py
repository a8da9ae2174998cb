"""Numerical bench for the geometric and probabilistic building blocks.

Boolean-model intersection volumes (balls with centres uniform in a ball),
order statistics of uniform samples on [0, 1], the toroidal distance CDF and
the gamma-integral bound.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import TORUS_EUCLIDEAN_LIMIT, UnsupportedRange, ball_volume, sample_in_ball, unit_ball_volume
from .report import Verdict
from .streams import as_generator


class MCValue(NamedTuple):
    value: float
    sigma: float


def _check_small_radius(r: float):
    if not 0 < r <= TORUS_EUCLIDEAN_LIMIT:
        raise UnsupportedRange("Boolean-model volumes are Euclidean only for 0 < r <= 1/4")


_TRIAL_CHUNK = 1 << 18


def _intersection_hits(counts: np.ndarray, d: int, r: float, gen: np.random.Generator,
                       clip_to_centre_ball: bool) -> np.ndarray:
    """For each trial: is a uniform proposal in B_c(2r) inside all of its balls?

    Centres are drawn one round at a time and only for trials still alive,
    which gives the same joint law as drawing all of them up front.
    """
    n = len(counts)
    centre = np.full(d, 0.5)
    y = sample_in_ball(n, d, 2 * r, centre, gen)
    alive = np.ones(n, dtype=bool)
    if clip_to_centre_ball:
        alive &= np.sum((y - centre) ** 2, axis=1) <= r * r
    r2 = r * r
    k = 0
    while True:
        need = np.flatnonzero(alive & (counts > k))
        if len(need) == 0:
            break
        c = sample_in_ball(len(need), d, r, centre, gen)
        miss = np.sum((c - y[need]) ** 2, axis=1) > r2
        alive[need[miss]] = False
        k += 1
    return alive


def _trial_values(counts: np.ndarray, d: int, r: float, gen, clip: bool, empty_value: float | None) -> np.ndarray:
    vals = np.empty(len(counts))
    for s in range(0, len(counts), _TRIAL_CHUNK):
        c = counts[s:s + _TRIAL_CHUNK]
        vals[s:s + len(c)] = _intersection_hits(c, d, r, gen, clip) * ball_volume(d, 2 * r)
    if empty_value is not None:
        vals[counts == 0] = empty_value
    return vals


def _mean_sigma(vals: np.ndarray) -> MCValue:
    return MCValue(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0)


def intersection_volume(ell: int, d: int, r: float, mode: str = "fixed", lam: float | None = None,
                        n_hits: int = 1_000_000, rng=None) -> MCValue:
    """Mean volume of the intersection of radius-``r`` balls centred uniformly in B_c(r).

    ``mode="fixed"`` uses exactly ``ell`` balls (``ell = 0`` is the whole
    torus, volume 1).  ``mode="poisson"`` draws the count from Poisson(``lam``,
    default ``ell``) and also intersects with B_c(r) itself, so an empty draw
    contributes the centre ball.  Proposals are uniform in B_c(2r), which
    contains every such intersection.
    """
    _check_small_radius(r)
    gen = as_generator(rng)
    n_hits = int(n_hits)
    if n_hits < 2:
        raise ValueError("n_hits must be at least 2")
    if mode == "fixed":
        if ell < 0:
            raise ValueError("ell must be non-negative")
        if ell == 0:
            return MCValue(1.0, 0.0)
        counts = np.full(n_hits, int(ell))
        return _mean_sigma(_trial_values(counts, d, r, gen, False, None))
    if mode == "poisson":
        lam = float(ell if lam is None else lam)
        if lam < 0:
            raise ValueError("intensity must be non-negative")
        counts = gen.poisson(lam, n_hits)
        return _mean_sigma(_trial_values(counts, d, r, gen, True, None))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class DepoissonResult:
    ell: int
    fixed: MCValue
    poisson: MCValue
    ratio: float
    sigma_rel: float
    passed: bool

    def verdict(self, name: str) -> Verdict:
        return Verdict(name, self.ratio, 2 * (1 + 4 * self.sigma_rel), self.ratio * self.sigma_rel, self.passed)


def depoissonization_check(ell: int, d: int, r: float, n_hits: int = 1_000_000, rng=None) -> DepoissonResult:
    """Ratio of the fixed-count to the Poisson(ell) mean volume; should not exceed 2."""
    gen = as_generator(rng)
    fixed = intersection_volume(ell, d, r, "fixed", n_hits=n_hits, rng=gen)
    pois = intersection_volume(ell, d, r, "poisson", lam=ell, n_hits=n_hits, rng=gen)
    ratio = fixed.value / pois.value
    rel = math.hypot(fixed.sigma / fixed.value if fixed.value else 0.0, pois.sigma / pois.value)
    return DepoissonResult(ell, fixed, pois, ratio, rel, ratio <= 2 * (1 + 4 * rel))


def binomial_mixture_volume(k: int, d: int, r: float, n_hits: int = 1_000_000, rng=None) -> MCValue:
    """``E[v(L)]`` with ``L ~ Bin(k-1, c_d r^d)``.

    Each trial draws its own ``L`` and runs one fixed-count hit trial; trials
    with ``L = 0`` score the whole torus.
    """
    _check_small_radius(r)
    if k < 1:
        raise ValueError("k must be positive")
    gen = as_generator(rng)
    q = ball_volume(d, r)
    counts = gen.binomial(k - 1, q, int(n_hits))
    return _mean_sigma(_trial_values(counts, d, r, gen, False, 1.0))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residuals: tuple[float, ...]
    slope_se: float


def loglog_slope(x: Sequence[float], y: Sequence[float], base: float = math.e) -> SlopeFit:
    """Ordinary least squares of log y on log x."""
    lx = np.log(np.asarray(x, dtype=float)) / math.log(base)
    ly = np.log(np.asarray(y, dtype=float)) / math.log(base)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    dof = max(len(lx) - 2, 1)
    s2 = float(res @ res) / dof
    se = math.sqrt(s2 / float(np.sum((lx - lx.mean()) ** 2))) if len(lx) > 2 else 0.0
    return SlopeFit(float(coef[0]), float(coef[1]), tuple(float(v) for v in res), se)


# ---------------------------------------------------------------------------
# order statistics on [0, 1]


def spacing_tail_probs(m: int, r: float) -> dict[str, float]:
    """Closed forms for m i.i.d. uniform points.

    ``gap_at_least_r`` is P(X_(1) >= r), the law of every spacing.
    ``range_at_most_2r`` uses ``t = min(2r, 1)`` since the range never exceeds 1.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    t = min(2 * r, 1.0)
    return {
        "gap_at_least_r": (1 - r) ** m,
        "range_at_most_2r": (m * (1 - t) + t) * t ** (m - 1),
        "max_below_r": r**m,
        "min_at_least_1_minus_r": r**m,
    }


def spacing_tail_mc(m: int, r: float, n_draws: int, rng=None, chunk: int = 1 << 20) -> dict[str, MCValue]:
    gen = as_generator(rng)
    keys = ("gap_at_least_r", "range_at_most_2r", "max_below_r", "min_at_least_1_minus_r")
    hits = dict.fromkeys(keys, 0)
    remaining = int(n_draws)
    while remaining:
        k = min(remaining, chunk)
        x = gen.random((k, m))
        lo, hi = x.min(axis=1), x.max(axis=1)
        hits["gap_at_least_r"] += int(np.count_nonzero(lo >= r))
        hits["range_at_most_2r"] += int(np.count_nonzero(hi - lo <= 2 * r))
        hits["max_below_r"] += int(np.count_nonzero(hi < r))
        hits["min_at_least_1_minus_r"] += int(np.count_nonzero(lo >= 1 - r))
        remaining -= k
    out = {}
    for key, h in hits.items():
        p = h / n_draws
        out[key] = MCValue(p, math.sqrt(p * (1 - p) / n_draws))
    return out


@dataclass(frozen=True)
class RangeGapRecord:
    m: int
    expected_range: float
    harmonic_max_gap: float
    max_gap_bound_ln: float
    max_gap_bound_log2: float
    mc_range: float
    mc_range_sigma: float
    mc_max_interior_gap: float
    mc_max_interior_gap_sigma: float
    n_draws: int

    def to_record(self) -> dict:
        return asdict(self)


def expected_range_and_max_gap(m: int, n_draws: int = 200_000, rng=None, chunk: int = 1 << 16) -> RangeGapRecord:
    """Exact ``E[range] = (m-1)/(m+1)``, the harmonic max-gap formula ``H_m / m``,
    its bounds ``(log m + 1)/m`` in both bases, and Monte Carlo checks of the
    range and of the largest interior spacing ``max_i X_(i+1) - X_(i)``.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    gen = as_generator(rng)
    s_range = s_range2 = s_gap = s_gap2 = 0.0
    remaining = int(n_draws)
    while remaining:
        k = min(remaining, chunk)
        x = np.sort(gen.random((k, m)), axis=1)
        rng_ = x[:, -1] - x[:, 0]
        gap = np.diff(x, axis=1).max(axis=1)
        s_range += rng_.sum()
        s_range2 += (rng_ * rng_).sum()
        s_gap += gap.sum()
        s_gap2 += (gap * gap).sum()
        remaining -= k

    def mean_se(s, s2):
        mu = s / n_draws
        return mu, math.sqrt(max(s2 / n_draws - mu * mu, 0.0) / n_draws)

    mr, sr = mean_se(s_range, s_range2)
    mg, sg = mean_se(s_gap, s_gap2)
    harmonic = sum(1.0 / (m - i) for i in range(m)) / m
    return RangeGapRecord(m, (m - 1) / (m + 1), harmonic, (math.log(m) + 1) / m, (math.log2(m) + 1) / m,
                          mr, sr, mg, sg, int(n_draws))


# ---------------------------------------------------------------------------
# distance CDF and the gamma-integral bound


def torus_distance_cdf(d: int, s: float) -> float:
    """P(d_t(X, X') <= s) = c_d s^d, valid for 0 <= s <= 1/2."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s > 0.5:
        raise UnsupportedRange("the ball of radius s wraps onto itself for s > 1/2")
    return ball_volume(d, s)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with interval bisection and Richardson correction."""
    def simpson(fa, fm, fb, h):
        return h / 6 * (fa + 4 * fm + fb)

    if b == a:
        return 0.0
    fa, fb, fm = f(a), f(b), f((a + b) / 2)
    stack = [(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = (lo + hi) / 2
        fl, fr = f((lo + mid) / 2), f((mid + hi) / 2)
        left = simpson(flo, fl, fmid, mid - lo)
        right = simpson(fmid, fr, fhi, hi - mid)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15 * eps:
            total += left + right + delta / 15
        else:
            stack.append((lo, mid, flo, fl, fmid, left, eps / 2, depth + 1))
            stack.append((mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1))
    return total


def _gamma_integrand(K: float, m: int, d: int):
    cd = unit_ball_volume(d)

    def f(s: float) -> float:
        return (1 - K * s) ** m * d * cd * s ** (d - 1)
    return f


def _gamma_lhs(K: float, s0: float, m: int, d: int, tol: float) -> float:
    f = _gamma_integrand(K, m, d)
    # split at the decay scale so sharply peaked integrands are resolved
    knots = sorted({0.0, s0, *[min(s0, c / (K * max(m, 1))) for c in (1, 4, 16, 64)]})
    return sum(adaptive_simpson(f, a, b, tol / len(knots)) for a, b in zip(knots[:-1], knots[1:]))


def _check_gamma_args(K: float, s0: float, m: int, d: int):
    if not 0 <= s0 < 0.5:
        raise ValueError("s0 must lie in [0, 1/2)")
    if K <= 0 or K * s0 > 1:
        raise ValueError("need K > 0 and K s0 <= 1 so that (1 - K s)^m stays in [0, 1]")
    if m < 0 or d < 1:
        raise ValueError("need m >= 0 and d >= 1")


def gamma_integral_lhs(K: float, s0: float, m: int, d: int, tol: float = 1e-10, rel_tol: float = 1e-9) -> float:
    """``int_0^s0 (1 - K s)^m f(s) ds`` for the toroidal distance density ``f(s) = d c_d s^(d-1)``.

    Adaptive Simpson to absolute tolerance ``tol``, tightened to ``rel_tol``
    of the value when the integral itself is below the absolute tolerance scale.
    """
    _check_gamma_args(K, s0, m, d)
    lhs = _gamma_lhs(K, s0, m, d, tol)
    if 0 < rel_tol * abs(lhs) < tol:
        lhs = _gamma_lhs(K, s0, m, d, max(rel_tol * abs(lhs), 1e-300))
    return lhs


def gamma_integral_check(K: float, s0: float, m: int, d: int, tol: float = 1e-10) -> tuple[float, float]:
    """``(lhs, rhs)`` with ``rhs = (1 - K s0)^m + c_d d! / (K^(d+1) m^d)``, the stated bound.

    The stated bound is only guaranteed for ``K <= 1``; see
    :func:`gamma_integral_bound` for the form valid for every admissible ``K``.
    """
    lhs = gamma_integral_lhs(K, s0, m, d, tol)
    cd = unit_ball_volume(d)
    rhs = (1 - K * s0) ** m + (cd * math.factorial(d) / (K ** (d + 1) * m**d) if m > 0 else math.inf)
    return lhs, rhs


def gamma_integral_bound(K: float, s0: float, m: int, d: int) -> float:
    """``(1 - K s0)^m + c_d d! / (K m)^d``.

    Integrating by parts brings down a factor ``m K`` and
    ``int_0^(1/K) m K (1 - K s)^(m-1) s^d ds = d! m! / ((m+d)! K^d) <= d! / (K m)^d``,
    so this holds whenever ``K s0 <= 1``.  It coincides with the stated bound at ``K = 1``.
    """
    _check_gamma_args(K, s0, m, d)
    if m == 0:
        return math.inf
    return (1 - K * s0) ** m + unit_ball_volume(d) * math.factorial(d) / (K * m) ** d


def gamma_integral_closed_form_1d(K: float, s0: float, m: int) -> float:
    """Antiderivative self-check for d = 1: ``2 (1 - (1 - K s0)^(m+1)) / (K (m+1))``."""
    return 2 * (1 - (1 - K * s0) ** (m + 1)) / (K * (m + 1))
