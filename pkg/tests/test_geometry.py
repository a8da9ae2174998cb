import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from rggent.geometry import (
    Domain,
    RegionSpec,
    UnsupportedRange,
    ball_volume,
    crescent_lower_bound,
    crescent_volume,
    distance,
    all_near_volume_1d,
    all_far_volume_1d,
    max_spacing_1d,
    lens_volume,
    profile_region_volume_1d,
    region_volume_mc,
    sample_in_ball,
    toroidal_crescent_volume,
    unit_ball_volume,
)

unit = st.floats(0, 1, allow_nan=False, exclude_max=True)


def points(d):
    return arrays(float, (d,), elements=unit)


# ---------------------------------------------------------------------------
# distances


def test_torus_wraps_across_boundary():
    assert distance(Domain.torus(1), 0.05, 0.95) == pytest.approx(0.1)
    assert distance(Domain.torus(2), [0.0, 0.0], [0.9, 0.9]) == pytest.approx(math.sqrt(0.02))


def test_cube_distance_is_euclidean():
    assert distance(Domain.cube(2), [0.0, 0.0], [0.3, 0.4]) == pytest.approx(0.5)


def test_torus_points_are_wrapped():
    np.testing.assert_allclose(Domain.torus(1).points([1.25]), [0.25])
    with pytest.raises(ValueError):
        Domain.cube(1).points([1.25])


def test_distance_broadcasts():
    x = np.random.default_rng(0).random((10, 3))
    out = distance(Domain.torus(3), x, x[0])
    assert out.shape == (10,)
    assert out[0] == 0.0


@given(st.integers(1, 4).flatmap(lambda d: st.tuples(st.just(d), points(d), points(d), points(d))),
       st.booleans())
def test_metric_axioms(args, torus):
    d, x, y, z = args
    dom = Domain.torus(d) if torus else Domain.cube(d)
    dxy = distance(dom, x, y)
    assert dxy == pytest.approx(distance(dom, y, x))
    assert dxy >= 0
    assert distance(dom, x, x) == 0
    assert distance(dom, x, z) <= dxy + distance(dom, y, z) + 1e-12
    assert dxy <= dom.diameter + 1e-12


@given(st.integers(1, 3).flatmap(lambda d: st.tuples(st.just(d), points(d), points(d))))
def test_torus_matches_shift_minimum(args):
    d, x, y = args
    shifts = np.array(np.meshgrid(*[[-1, 0, 1]] * d)).reshape(d, -1).T
    brute = np.min(np.linalg.norm(x + shifts - y, axis=1))
    assert distance(Domain.torus(d), x, y) == pytest.approx(brute, abs=1e-12)


def test_radius_ranges():
    assert Domain.cube(1).check_radius(1.0, closed=True) == 1.0
    with pytest.raises(ValueError):
        Domain.cube(1).check_radius(1.0)
    with pytest.raises(ValueError):
        Domain.torus(2).check_radius(math.sqrt(2) / 2)
    with pytest.raises(ValueError):
        Domain.cube(2).check_radius(0.0)


# ---------------------------------------------------------------------------
# volumes


def test_unit_ball_volumes():
    assert unit_ball_volume(0) == 1.0
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


# frozen from oracles.lens_elementary
@pytest.mark.parametrize("d,r,s,expected", [
    (1, 0.2, 0.1, 0.3),
    (2, 0.2, 0.1, 0.08608436900118838),
    (3, 0.25, 0.2, 0.02827433388230814),
])
def test_lens_frozen(d, r, s, expected):
    assert lens_volume(d, r, s) == pytest.approx(expected, rel=1e-12)


def test_crescent_frozen():
    assert crescent_volume(2, 0.2, 0.1) == pytest.approx(0.07915867428480672, rel=1e-12)


def test_lens_endpoints():
    assert lens_volume(3, 0.2, 0.0) == pytest.approx(ball_volume(3, 0.2))
    assert lens_volume(2, 0.2, 0.4) == 0.0
    assert lens_volume(2, 0.2, 0.7) == 0.0
    assert crescent_volume(2, 0.2, 0.0) == 0.0
    assert crescent_volume(2, 0.2, 0.5) == pytest.approx(2 * ball_volume(2, 0.2))


@given(st.integers(1, 3), st.floats(0.01, 0.25), st.floats(0, 1))
def test_lens_vs_elementary(d, r, frac):
    s = 2 * r * frac
    assert lens_volume(d, r, s) == pytest.approx(oracles.lens_elementary(d, r, s), rel=1e-9, abs=1e-15)


@given(st.integers(1, 6), st.floats(0.01, 0.25), st.floats(0, 1))
def test_lens_vs_radial_quadrature(d, r, frac):
    s = 2 * r * frac
    assert lens_volume(d, r, s) == pytest.approx(oracles.lens_radial(d, r, s), rel=1e-8, abs=1e-14)


@given(st.integers(1, 6), st.floats(1e-3, 0.25), st.floats(0, 1.2))
def test_lens_crescent_partition(d, r, frac):
    s = 2 * r * frac
    total = 2 * lens_volume(d, r, s) + crescent_volume(d, r, s)
    assert total == pytest.approx(2 * ball_volume(d, r), rel=1e-12)


@given(st.integers(1, 6), st.floats(1e-3, 0.25), st.floats(0, 1, exclude_max=True))
def test_crescent_above_cone_bound(d, r, frac):
    s = 2 * r * frac
    assert crescent_volume(d, r, s) >= crescent_lower_bound(d, r, s) * (1 - 1e-12)


@given(st.integers(1, 5), st.floats(0.01, 0.25))
def test_crescent_monotone(d, r):
    s = np.linspace(0, 2 * r, 50)
    assert np.all(np.diff(crescent_volume(d, r, s)) >= -1e-15)
    assert np.all(np.diff(lens_volume(d, r, s)) <= 1e-15)


def test_crescent_small_separation_has_no_cancellation():
    s = 1e-12
    assert crescent_volume(3, 0.2, s) > 0
    assert crescent_volume(3, 0.2, s) == pytest.approx(crescent_lower_bound(3, 0.2, s), rel=1e-6)


def test_toroidal_crescent_range():
    dom = Domain.torus(2)
    assert toroidal_crescent_volume(dom, 0.2, [0.05, 0.5], [0.95, 0.5]) == pytest.approx(crescent_volume(2, 0.2, 0.1))
    with pytest.raises(UnsupportedRange):
        toroidal_crescent_volume(dom, 0.3, [0, 0], [0.1, 0])


def test_lens_matches_hit_sampling():
    dom = Domain.torus(2)
    spec = RegionSpec(0.2, dom, np.array([[0.5, 0.5], [0.6, 0.5]]))
    p, se = region_volume_mc(spec, 400_000, 3)
    assert abs(p - lens_volume(2, 0.2, 0.1)) <= 4 * se


def test_region_without_balls_is_everything():
    assert region_volume_mc(RegionSpec(0.2, Domain.cube(2)), 10) == (1.0, 0.0)


def test_ball_sampler_is_uniform():
    pts = sample_in_ball(200_000, 3, 0.5, np.zeros(3), 4)
    rad = np.linalg.norm(pts, axis=1)
    assert rad.max() <= 0.5
    # P(|X| <= r/2) = 1/8 in three dimensions
    frac = np.mean(rad <= 0.25)
    assert abs(frac - 0.125) <= 4 * math.sqrt(0.125 * 0.875 / len(rad))


# ---------------------------------------------------------------------------
# exact 1-D regions


sorted_pts = st.lists(unit, min_size=1, max_size=8).map(sorted)


def _grid_volume(x, r, profile, n=200_000):
    g = (np.arange(n) + 0.5) / n
    mask = np.ones(n, dtype=bool)
    for xi, b in zip(x, profile):
        near = np.abs(g - xi) <= r
        mask &= near if b else ~near
    return mask.mean()


@given(sorted_pts, st.floats(0.01, 0.99), st.data())
def test_region_volume_vs_grid(x, r, data):
    profile = data.draw(st.lists(st.booleans(), min_size=len(x), max_size=len(x)))
    assert profile_region_volume_1d(x, r, profile) == pytest.approx(_grid_volume(x, r, profile), abs=2e-4 * len(x))


@given(sorted_pts, st.floats(0.01, 0.99))
def test_all_far_closed_form(x, r):
    assert profile_region_volume_1d(x, r, [False] * len(x)) == pytest.approx(all_far_volume_1d(x, r), abs=1e-12)


@given(sorted_pts, st.floats(0.01, 0.99))
def test_all_near_closed_form(x, r):
    assert profile_region_volume_1d(x, r, [True] * len(x)) == pytest.approx(all_near_volume_1d(x, r), abs=1e-12)


@given(sorted_pts, st.floats(0.01, 0.99), st.data())
def test_mixed_profiles_below_max_gap(x, r, data):
    profile = data.draw(st.lists(st.booleans(), min_size=len(x), max_size=len(x)))
    if all(profile) or not any(profile):
        return
    assert profile_region_volume_1d(x, r, profile) <= max_spacing_1d(x) + 1e-12


def test_region_volume_validation():
    with pytest.raises(ValueError):
        profile_region_volume_1d([0.5, 0.2], 0.1, [True, False])
    with pytest.raises(ValueError):
        profile_region_volume_1d([0.1, 1.2], 0.1, [True, False])
    with pytest.raises(ValueError):
        profile_region_volume_1d([0.1], 0.1, [True, False])


def test_region_volume_hand_example():
    # probes within 0.2 of 0.3 but not of 0.6: [0.1, 0.4)
    assert profile_region_volume_1d([0.3, 0.6], 0.2, [True, False]) == pytest.approx(0.3)
