import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from bergtoep.errors import ConfigError, DomainError
from bergtoep.weights import (WeightTransforms, classify, custom, doubling_ratio, expdecay,
                              moment_tail_band, parse_weight, power, read_table,
                              registered_doubling, star_hat_band, tabulated, two_sided)

SPECS = ["std:alpha=0", "std:alpha=1", "std:alpha=2.5", "logpow:beta=2", "pow:alpha=1"]


def tail_quad(wt, r, g=lambda s: 1.0):
    """int_r^1 g(s) w(s) ds after s = 1 - exp(-v), which tames every family at 1."""
    beta = wt.weight.params.get("beta")

    def f(v):
        u = math.exp(-v)
        if wt.weight.family == "logpow":
            # u * density survives past the underflow of u
            return (1 + v) ** -beta * g(1 - u)
        return float(wt.weight.density(np.array(1 - u), np.array(u))) * u * g(1 - u)
    v0 = -math.log1p(-r)
    return integrate.quad(f, v0, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]


@pytest.fixture(scope="module", params=SPECS)
def wt(request):
    return WeightTransforms(parse_weight(request.param))


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.5])
def test_standard_weight_is_a_probability(n, alpha):
    w = WeightTransforms(parse_weight(f"std:alpha={alpha}", n))
    assert w.ball_mass() == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("r", [0.0, 0.3, 0.9, 0.999])
def test_hat_matches_scipy(wt, r):
    want = tail_quad(wt, r)
    assert float(wt.hat(r)) == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("s", [1.0, 3.0, 40.0])
def test_moment_matches_adaptive(wt, s):
    assert wt.moment(s) == pytest.approx(wt.moment_adaptive(s), rel=1e-8)


@pytest.mark.parametrize("t", [0.2, 0.625, 0.95])
def test_star_matches_scipy(wt, t):
    want = tail_quad(wt, t, lambda s: math.log(s / t) * s)
    assert float(wt.star(t)) == pytest.approx(want, rel=1e-7)


def test_unweighted_star_closed_form():
    # int_t^1 s log(s/t) ds = t^2/4 - 1/4 - log(t)/2
    w = WeightTransforms(parse_weight("std:alpha=0"))
    t = 0.625
    assert float(w.star(t)) == pytest.approx(t * t / 4 - 0.25 - math.log(t) / 2, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.0, 0.999))
def test_power_weight_doubling_is_exact(alpha, r):
    w = WeightTransforms(power(alpha))
    assert doubling_ratio(w, r) == pytest.approx(2 ** (alpha + 1), rel=1e-10)


def test_expdecay_is_not_doubling():
    w = WeightTransforms(expdecay(1.0))
    assert doubling_ratio(w, 0.99) > 1e4
    assert not classify(w).verdicts["D_hat"]


def test_class_verdicts():
    std = classify(WeightTransforms(parse_weight("std:alpha=1"))).verdicts
    assert std["D"] and std["R"] and not std["I"]
    log = classify(WeightTransforms(parse_weight("logpow:beta=2"))).verdicts
    assert log["D"] and log["I"] and not log["R"]


@pytest.mark.parametrize("spec", ["", "std", "std:beta=1", "std:alpha=x", "foo:a=1",
                                  "logpow:beta=0.5", "std:alpha=1,beta=2"])
def test_bad_specs(spec):
    with pytest.raises(ConfigError):
        parse_weight(spec)


def test_negative_moment_order():
    with pytest.raises(DomainError):
        WeightTransforms(parse_weight("std:alpha=0")).moment(-1)


def test_table_roundtrip(tmp_path):
    path = tmp_path / "w.csv"
    rows = ["r,w"] + [f"{r},{2 * r}" for r in np.linspace(0, 0.9, 10)]
    path.write_text("\n".join(rows) + "\n")
    w = WeightTransforms(read_table(path))
    # density 2r up to 0.9, then flat at 1.8
    assert w.mass() == pytest.approx(0.81 + 0.18, rel=1e-12)
    with pytest.raises(ConfigError):
        tabulated([0.5, 0.2], [1, 1])


def test_custom_weight_matches_family():
    w = WeightTransforms(custom(lambda r: 2 * (1 - r * r)))
    ref = WeightTransforms(parse_weight("std:alpha=1"))
    assert w.moment(3) == pytest.approx(ref.moment(3), rel=1e-10)


def test_registered_bands_are_stable():
    for weight in registered_doubling():
        w = WeightTransforms(weight)
        for band in (moment_tail_band, star_hat_band):
            coarse, fine = band(w), band(w, rel_tol=w.rel_tol / 10)
            assert coarse <= 20 and abs(fine / coarse - 1) <= 0.1


def test_two_sided():
    assert two_sided([0.5, 3.0]) == 3.0
    assert two_sided([0.1, 2.0]) == pytest.approx(10.0)


def test_small_closed_forms():
    flat = WeightTransforms(power(0.0))
    assert float(flat.hat(0.75)) == pytest.approx(0.25)
    assert flat.moment(1) == pytest.approx(0.5) and flat.moment(3) == pytest.approx(0.25)
    assert float(flat.star(0.5)) == pytest.approx(0.1590735, abs=1e-7)
    assert float(flat.w1(0.75)) == pytest.approx(1.0)
    assert float(flat.w_alpha(0.5, 0.0)) == pytest.approx(0.636294, abs=1e-6)
    assert float(WeightTransforms(power(2.0)).hat(0.5)) == pytest.approx(0.5**3 / 3)
    # c (1 - r^2) with c = 2: moment 3 is B(2, 2) = 1/6
    assert WeightTransforms(parse_weight("std:alpha=1")).moment(3) == pytest.approx(1 / 6)


def test_expdecay_mass():
    assert float(WeightTransforms(expdecay(1.0)).hat(0.0)) == pytest.approx(0.1484955, rel=1e-6)


def test_flat_weight_is_regular():
    rep = classify(WeightTransforms(power(0.0)))
    np.testing.assert_allclose(rep.regular_band, (1, 1), atol=1e-10)
    assert rep.verdicts["R"]
