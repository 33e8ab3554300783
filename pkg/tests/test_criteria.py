import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from bergtoep.basis import parse_polynomial
from bergtoep.criteria import (_disk_fraction, berezin_quotient, besov_integral,
                               besov_statistic, carleson_quotient, qlessp_statistic,
                               schatten_dyadic, schatten_integral)
from bergtoep.errors import ConfigError
from bergtoep.geometry import dyadic_partition, pseudo_hyperbolic, random_sphere
from bergtoep.kernels import bergman_kernel
from bergtoep.operators import DiscreteMeasure, weight_measure
from bergtoep.weights import WeightTransforms, parse_weight


def wt(spec="std:alpha=0", n=1):
    return WeightTransforms(parse_weight(spec, n))


@pytest.fixture(scope="module")
def part():
    return dyadic_partition(1, 10)


def block_area(r):
    """Unweighted disk block measure: arc fraction times annulus area."""
    return 2 / math.pi * math.asin((1 - r) / 2) * (1 - r * r)


def star_closed(r):
    """int_r^1 s log(s/r) ds."""
    return r * r / 4 - 0.25 - math.log(r) / 2


def disc_oracle(a, t, f, rmax=0.999):
    """int f(|z|) dV over {rho(z, a) < t, |z| <= rmax} in the disk.

    The pseudo-hyperbolic disc is the Euclidean disc of centre c and radius R,
    so each circle |z| = s meets it in one arc of known length.
    """
    c = (1 - t * t) * a / (1 - t * t * a * a)
    big = t * (1 - a * a) / (1 - t * t * a * a)

    def arc(s):
        x = (s * s + c * c - big * big) / (2 * s * c)
        return math.acos(max(-1.0, min(1.0, x))) / math.pi

    lo, hi = max(c - big, 0.0), min(c + big, rmax)
    return integrate.quad(lambda s: f(s) * arc(s) * 2 * s, lo, hi,
                          epsabs=0, epsrel=1e-11, limit=500)[0]


def dense_grid_oracle(a, t, f, size=1500):
    """Midpoint rule on a Cartesian grid over the disc's bounding box."""
    c = (1 - t * t) * a / (1 - t * t * a * a)
    big = t * (1 - a * a) / (1 - t * t * a * a)
    h = 2 * big / size
    x = c - big + h * (np.arange(size) + 0.5)
    y = -big + h * (np.arange(size) + 0.5)
    zz = x[:, None] + 1j * y[None, :]
    inside = np.abs(zz - a) / np.abs(1 - np.conj(a) * zz) < t
    s = np.abs(zz[inside])
    return float(np.sum(f(s))) * h * h / math.pi


# -- Carleson and Berezin -----------------------------------------------------


def test_carleson_point_mass(part):
    rep = carleson_quotient(wt(), DiscreteMeasure.delta(0.5), 2, 2, part)
    assert rep.headline == pytest.approx(1 / block_area(0.5), rel=1e-10)
    assert rep.headline == pytest.approx(8.2888, abs=1e-4)


def test_carleson_origin_mass(part):
    rep = carleson_quotient(wt(), DiscreteMeasure.delta(0.0), 2, 2, part)
    assert rep.headline == pytest.approx(1.0)
    # the atom sits outside every block beyond the central cell
    assert max(v for r, v in rep.profile if r >= 0.5) == 0


@pytest.mark.parametrize("spec", ["std:alpha=0", "std:alpha=1", "logpow:beta=2"])
def test_carleson_of_weight_is_one(spec, part):
    w = wt(spec)
    rep = carleson_quotient(w, weight_measure(w), 2, 2, part)
    assert rep.headline == pytest.approx(1.0, abs=1e-8)


def test_carleson_exponent(part):
    # p < q divides by w(S)^(1/p - 1/q + 1)
    rep = carleson_quotient(wt(), DiscreteMeasure.delta(0.5), 2, 4, part)
    assert rep.headline == pytest.approx(block_area(0.5) ** -1.25, rel=1e-10)
    with pytest.raises(ConfigError):
        carleson_quotient(wt(), DiscreteMeasure.delta(0.5), 3, 2, part)


def test_berezin_quotient_values():
    part = dyadic_partition(1, 6)
    w = wt()
    ks = bergman_kernel(w)
    assert berezin_quotient(ks, w, DiscreteMeasure.delta(0.0), 2, 2, part).headline == (
        pytest.approx(1.0))
    assert berezin_quotient(ks, w, weight_measure(w), 2, 2, part).headline == (
        pytest.approx(1.0, abs=1e-8))
    assert berezin_quotient(ks, w, DiscreteMeasure.empty(1), 2, 2, part).headline == 0


# -- ball integrals -------------------------------------------------------------


def test_qlessp_point_mass():
    t = math.tanh(0.5)
    want = disc_oracle(0.5, t, lambda s: block_area(s) ** -4.0)
    rep = qlessp_statistic(wt(), DiscreteMeasure.delta(0.5), 4, 2, 0.5)
    assert rep.headline == pytest.approx(want, rel=1e-8)
    # frozen from the oracle
    assert rep.headline == pytest.approx(7527.2154, rel=1e-7)


def test_qlessp_dense_grid_cross_check():
    t = math.tanh(0.5)
    grid = dense_grid_oracle(0.5, t, lambda s: (2 / np.pi * np.arcsin((1 - s) / 2)
                                               * (1 - s * s)) ** -4.0)
    assert grid == pytest.approx(7527.2154, rel=2e-3)


@pytest.mark.parametrize("p,r,frozen", [(1.0, 0.5, None), (2.0, 0.5, 57.556424), (2.0, 1.0, 7567.1295)])
def test_schatten_integral_point_mass(p, r, frozen):
    t = math.tanh(r)
    want = disc_oracle(0.5, t, lambda s: star_closed(s) ** -p / ((1 - s) * (1 + s)) ** 2)
    rep = schatten_integral(wt(), DiscreteMeasure.delta(0.5), p, r)
    assert rep.headline == pytest.approx(want, rel=1e-8)
    if frozen is not None:
        assert rep.headline == pytest.approx(frozen, rel=1e-7)


def test_schatten_integral_dense_grid_cross_check():
    t = math.tanh(0.5)
    grid = dense_grid_oracle(0.5, t, lambda s: 1 / ((s * s / 4 - 0.25 - np.log(s) / 2)
                                                   * (1 - s * s) ** 2))
    rep = schatten_integral(wt(), DiscreteMeasure.delta(0.5), 1.0, 0.5)
    assert grid == pytest.approx(rep.headline, rel=2e-3)


def test_ball_integrals_of_zero_and_origin():
    w = wt()
    assert schatten_integral(w, DiscreteMeasure.empty(1), 2, 0.5).headline == 0
    assert qlessp_statistic(w, DiscreteMeasure.empty(1), 4, 2, 0.5).headline == 0
    vals = [qlessp_statistic(w, DiscreteMeasure.delta(0.0), 4, 2, r).headline
            for r in (0.2, 0.5, 1.0)]
    assert 0 < vals[0] < vals[1] < vals[2]


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.0, 2.0))
def test_ball_integral_homogeneity(c, p):
    w = wt()
    mu = DiscreteMeasure(1, np.array([0.4, -0.7j]), np.array([1.0, 0.5]))
    base = schatten_integral(w, mu, p, 0.5).headline
    assert schatten_integral(w, mu.scaled(c), p, 0.5).headline == pytest.approx(
        c**p * base, rel=1e-9)


def test_qlessp_requires_q_below_p():
    with pytest.raises(ConfigError):
        qlessp_statistic(wt(), DiscreteMeasure.delta(0.5), 2, 2, 0.5)


@pytest.mark.parametrize("rho,radius,t", [(0.5, 0.6, 0.4), (0.8, 0.7, 0.6), (0.3, 0.3, 0.5)])
def test_ball_sphere_fraction(rho, radius, t):
    eta = random_sphere(2, 400_000, np.random.default_rng(2))
    a = np.array([radius, 0.0])
    hit = pseudo_hyperbolic(a, rho * eta) < t
    want = _disk_fraction(rho, radius, t)
    assert hit.mean() == pytest.approx(want, abs=4 * math.sqrt(max(want, 1e-3) / 4e5) + 1e-4)


def test_exact_disks_vs_sampling_in_ball():
    w = wt(n=2)
    mu = DiscreteMeasure.delta([0.5, 0.0])
    exact = qlessp_statistic(w, mu, 4, 2, 0.5)
    assert exact.extras["method"] == "exact-disks"
    # two atoms sharing one ball force the sampled path; halve each mass
    pair = DiscreteMeasure(2, np.array([[0.5, 0.0], [0.5, 1e-9]]), np.array([0.5, 0.5]))
    sampled = qlessp_statistic(w, pair, 4, 2, 0.5)
    assert sampled.extras["method"] == "quasi-mc"
    assert sampled.headline == pytest.approx(exact.headline,
                                             abs=4 * sampled.extras["stderr"])


# -- dyadic sums ---------------------------------------------------------------


def test_dyadic_point_mass(part):
    rep = schatten_dyadic(wt(), DiscreteMeasure.delta(0.5), part, 1.0)
    assert rep.headline == pytest.approx(1 / star_closed(0.625), rel=1e-12)
    assert rep.headline == pytest.approx(12.098033, rel=1e-7)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.1, 10.0))
def test_dyadic_homogeneity(p, c):
    part = dyadic_partition(1, 10)
    mu = DiscreteMeasure(1, np.array([0.3, 0.6j, -0.9]), np.array([1.0, 2.0, 0.5]))
    base = schatten_dyadic(wt(), mu, part, p).headline
    assert schatten_dyadic(wt(), mu.scaled(c), part, p).headline == pytest.approx(
        c**p * base, rel=1e-12)


def test_dyadic_overflow_is_flagged():
    part = dyadic_partition(1, 4)
    rep = schatten_dyadic(wt(), DiscreteMeasure.delta(0.99), part, 1.0)
    assert rep.extras["overflow_levels"] == [6]
    assert rep.headline == pytest.approx(rep.extras["overflow"])
    assert schatten_dyadic(wt(), DiscreteMeasure.empty(1), part, 1.0).headline == 0


def test_dyadic_hypotheses_recorded(part):
    rep = schatten_dyadic(wt(), DiscreteMeasure.delta(0.5), part, 0.5, alpha=0.5, space="H")
    assert rep.extras["hypotheses"]


# -- Besov -------------------------------------------------------------------


@pytest.mark.parametrize("p,want", [
    (2.0, 0.5),
    (1.5, special.beta(1.75, 0.5)),
    (3.0, special.beta(2.5, 2.0)),
])
def test_besov_integral_disk(p, want):
    # 2 int r^(p+1) (1 - r^2)^(p-2) dr = B(p/2 + 1, p - 1)
    z = parse_polynomial("z")
    assert besov_integral(z, p).headline == pytest.approx(want, rel=1e-8)


def test_besov_integral_diverges_for_small_p():
    rep = besov_integral(parse_polynomial("z"), 1.0)
    assert rep.headline == math.inf
    assert rep.extras["slope"] >= 0.8


@pytest.mark.parametrize("p,want", [
    (3.0, 8 * 0.4 * special.beta(2.5, 2.5)),
    (2.5, 2**2.5 * 2 * special.beta(4.5, 0.5) * special.beta(2.25, 2.25)),
])
def test_besov_integral_ball(p, want):
    # R(z1 z2) = 2 z1 z2 and |eta_1|^2 is uniform on the sphere
    g = parse_polynomial("z1*z2", 2)
    # the sphere average of a non-polynomial power carries ~1e-7 rule error
    assert besov_integral(g, p).headline == pytest.approx(want, rel=1e-6)


def test_besov_integral_ball_divergence():
    assert besov_integral(parse_polynomial("z1*z2", 2), 2.0).headline == math.inf


def test_besov_constant_symbol(part):
    one = parse_polynomial("3", 1)
    assert besov_integral(one, 2.0).headline == 0
    assert besov_statistic(one, part, 2.0).headline == 0


@settings(max_examples=8, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(1.5, 3.0))
def test_besov_statistic_homogeneity(c, p):
    part = dyadic_partition(1, 10)
    g = parse_polynomial("z+0.3*z^3")
    base = besov_statistic(g, part, p).headline
    assert besov_statistic(g * c, part, p).headline == pytest.approx(c**p * base, rel=1e-10)
