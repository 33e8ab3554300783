import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergtoep.errors import DomainError, LevelOverflow, NotUnit
from bergtoep.geometry import (PHBall, cap_cover, cap_measure, carleson_block_measure,
                               dyadic_partition, niso_distance, ph_ball_weight_measure,
                               pseudo_hyperbolic, random_sphere)
from bergtoep.weights import WeightTransforms, parse_weight


def ball_point(n):
    """Strategy for a point of the open ball of radius 0.98 in C^n."""
    coords = st.lists(st.floats(-1, 1), min_size=2 * n, max_size=2 * n)

    def build(v):
        z = np.array(v[:n]) + 1j * np.array(v[n:])
        norm = np.linalg.norm(z)
        return z if norm < 0.98 else z * (0.9 / norm)

    return coords.map(build)


def unweighted(n=1):
    return WeightTransforms(parse_weight("std:alpha=0", n))


def test_disk_metric_closed_form():
    z, w = 0.3 + 0.4j, -0.5 + 0.1j
    want = abs(z - w) / abs(1 - z * np.conj(w))
    assert float(pseudo_hyperbolic(np.array([z]), np.array([w]))) == pytest.approx(want)


@settings(max_examples=60, deadline=None)
@given(ball_point(2), ball_point(2), ball_point(2))
def test_metric_properties(z, w, x):
    dzw = float(pseudo_hyperbolic(z, w))
    assert 0 <= dzw < 1
    assert dzw == pytest.approx(float(pseudo_hyperbolic(w, z)), abs=1e-12)
    # strong triangle inequality of the pseudo-hyperbolic metric
    a, b = float(pseudo_hyperbolic(z, x)), float(pseudo_hyperbolic(x, w))
    assert dzw <= (a + b) / (1 + a * b) + 1e-9


@settings(max_examples=40, deadline=None)
@given(ball_point(2), ball_point(2), st.floats(0, 2 * math.pi))
def test_metric_is_unitarily_invariant(z, w, theta):
    c, s = math.cos(theta), math.sin(theta)
    u = np.array([[c, -s * 1j], [-s * 1j, c]])
    assert float(pseudo_hyperbolic(u @ z, u @ w)) == pytest.approx(
        float(pseudo_hyperbolic(z, w)), abs=1e-12)


def test_niso_distance_needs_unit_vectors():
    with pytest.raises(NotUnit):
        niso_distance(np.array([0.5, 0]), np.array([1.0, 0]))


def lens_fraction(delta):
    """Area of {|w| < 1, |1 - w| < delta} over pi, by the circle-intersection formula."""
    area = (delta**2 * math.acos(delta / 2) + math.acos(1 - delta**2 / 2)
            - 0.5 * delta * math.sqrt(4 - delta**2))
    return area / math.pi


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9, 1.3])
def test_cap_measure(t):
    assert cap_measure(1, t) == pytest.approx(2 / math.pi * math.asin(t * t / 2), rel=1e-13)
    assert cap_measure(2, t) == pytest.approx(lens_fraction(t * t), rel=1e-10)


def test_cap_measure_by_sampling():
    rng = np.random.default_rng(7)
    eta = random_sphere(2, 400_000, rng)
    xi = np.array([1.0, 0.0], dtype=complex)
    hit = niso_distance(eta, xi) < 0.7
    assert hit.mean() == pytest.approx(cap_measure(2, 0.7), abs=4 * math.sqrt(0.1 / 4e5))


def test_block_measure_closed_form():
    # n = 1, w = 1: cap fraction times the annulus area
    a = 0.9
    want = 2 / math.pi * math.asin((1 - a) / 2) * (1 - a * a)
    got = carleson_block_measure(unweighted(), np.array([a]))
    assert got == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2])
def test_ph_ball_samples_stay_inside(n):
    z = np.zeros(n, complex)
    z[0] = 0.8
    ball = PHBall(z, 0.5)
    pts = ball.sample(5000, np.random.default_rng(0))
    assert np.all(ball.contains(pts))


def test_ph_ball_volume_in_disk():
    z, r = 0.6, 0.4
    radius = r * (1 - z * z) / (1 - r * r * z * z)
    assert PHBall(np.array([z]), r).volume == pytest.approx(radius**2)
    mass, err = ph_ball_weight_measure(unweighted(), PHBall(np.array([z]), r))
    assert mass == pytest.approx(radius**2, rel=1e-12) and err < 1e-12


def test_ph_ball_radius_range():
    with pytest.raises(DomainError):
        PHBall(np.array([0.1]), 1.0)
    assert PHBall.bergman(np.array([0.1]), 1.0).r == pytest.approx(math.tanh(1.0))


@pytest.mark.parametrize("n,r", [(1, 0.1), (2, 0.5)])
def test_cap_cover_separated_and_covering(n, r):
    cover = cap_cover(n, r)
    c = cover.centers
    d = niso_distance(c[:, None, :], c[None, :, :])
    np.fill_diagonal(d, np.inf)
    assert d.min() > 2 * r * (1 - 1e-12)
    probes = random_sphere(n, 20_000, np.random.default_rng(3))
    assert not cover.uncovered(probes).any()
    assert np.all(cover.locate(probes) >= 0)


@pytest.mark.parametrize("n,kmax", [(1, 10), (2, 6)])
def test_partition_locate(n, kmax):
    part = dyadic_partition(n, kmax)
    rng = np.random.default_rng(1)
    eta = random_sphere(n, 5000, rng)
    radius = part.rmax * rng.random(5000) ** (1 / (2 * n))
    k, j = part.locate(eta * radius[:, None])
    assert np.all(j >= 1)
    assert np.all(j <= np.array(part.counts)[k])
    # every cell center lands in its own cell
    for kk, jj, c, _ in part.cells():
        assert part.locate_one(c)[0] == kk


def test_partition_level_boundaries():
    part = dyadic_partition(1, 6)
    np.testing.assert_array_equal(part.level_of([0.0, 0.49, 0.5, 0.75, 0.875 - 1e-15]),
                                  [0, 0, 1, 2, 2])
    with pytest.raises(LevelOverflow):
        part.locate(np.array([part.rmax]))
    with pytest.raises(DomainError):
        dyadic_partition(1, 40)


def test_partition_counts_scale():
    counts = np.array(dyadic_partition(1, 10).counts[2:], float)
    scaled = counts * 2.0 ** -np.arange(2, 11)
    assert scaled.max() / scaled.min() <= 10


@pytest.mark.parametrize("n", [1, 2])
def test_cap_and_block_samples(n):
    from bergtoep.geometry import sample_block, sample_cap
    rng = np.random.default_rng(5)
    xi = np.zeros(n, complex)
    xi[-1] = 1j
    eta = sample_cap(n, xi, 0.4, 4000, rng)
    assert np.all(niso_distance(eta, xi) < 0.4)
    pts = sample_block(n, 0.8 * xi, 4000, rng)
    radius = np.linalg.norm(pts, axis=1)
    assert np.all((radius > 0.8) & (radius < 1))
    assert np.all(niso_distance(pts / radius[:, None], xi) < math.sqrt(0.2))
    with pytest.raises(NotUnit):
        sample_cap(n, 0.5 * xi, 0.4, 10, rng)


def test_small_distances():
    one = np.array([1.0 + 0j])
    assert float(niso_distance(one, one)) == 0
    assert float(niso_distance(one, -one)) == pytest.approx(math.sqrt(2))
    assert float(niso_distance(one, np.array([1j]))) == pytest.approx(2**0.25)
    assert float(pseudo_hyperbolic(0.5, 0.25)) == pytest.approx(0.25 / 0.875)
    assert float(pseudo_hyperbolic(0.5, 0.5)) == 0


def test_small_volumes():
    assert carleson_block_measure(unweighted(), np.array([0.0])) == pytest.approx(1.0)
    assert carleson_block_measure(unweighted(), np.array([0.5])) == pytest.approx(0.120645,
                                                                                  abs=1e-6)
    mass, _ = ph_ball_weight_measure(unweighted(), PHBall(np.array([0.0]), 0.5))
    assert mass == pytest.approx(0.25)
    t = 0.75 / 0.9775
    assert PHBall(np.array([0.5]), 0.3).volume == pytest.approx((0.3 * t) ** 2)


def test_cap_counts_on_circle():
    cover = cap_cover(1, 0.5)
    assert 2 <= cover.N <= 13
    assert cap_cover(2, math.sqrt(2)).N == 1
    for k in range(1, 11):
        r = 2 ** (-k / 2)
        assert 0.5 <= cap_cover(1, r).N * r * r <= 20


def test_level_example():
    part = dyadic_partition(1, 6)
    assert part.locate_one(np.array([0.9]))[0] == 3
    assert np.linalg.norm(part.center(3, 1)) == pytest.approx(1 - 3 / 32)
    assert part.locate_one(np.array([0.0])) == (0, 1)


def test_lattice_separation_and_growth():
    from bergtoep.geometry import bergman_lattice
    small = bergman_lattice(1, 0.2, 0.9)
    large = bergman_lattice(1, 0.2, 0.95)
    sep = math.tanh(0.2 / 5)
    d = pseudo_hyperbolic(small[:, None, :], small[None, :, :])
    np.fill_diagonal(d, 1.0)
    assert d.min() >= sep * (1 - 1e-12)
    # size tracks hyperbolic area, roughly 1 / (1 - rmax)
    assert 1.5 <= len(large) / len(small) <= 2.7
