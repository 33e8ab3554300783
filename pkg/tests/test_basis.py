import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergtoep.basis import (MultiIndex, Polynomial, build_basis, energy_norm2, multi_indices,
                            parse_polynomial, radial_derivative, sphere_monomial_norm2,
                            sphere_rule, volterra_coefficients)
from bergtoep.errors import ConfigError, SizeExceeded
from bergtoep.weights import WeightTransforms, parse_weight


def wt(spec="std:alpha=0", n=1):
    return WeightTransforms(parse_weight(spec, n))


def test_graded_order():
    assert [tuple(m) for m in multi_indices(2, 2)] == [
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(multi_indices(2, 12)) == math.comb(14, 2)


def test_multi_index_rejects_negative():
    with pytest.raises(ConfigError):
        MultiIndex((1, -1))
    assert MultiIndex((2, 1)).minus((3, 0)) is None


@pytest.mark.parametrize("m", [(3,), (2, 1), (0, 4), (5, 5)])
def test_sphere_rule_reproduces_monomial_norms(m):
    m = MultiIndex(m)
    pts, wts = sphere_rule(len(m), m.degree)
    got = float(np.sum(wts * np.abs(np.prod(pts ** np.array(m), axis=1)) ** 2))
    assert got == pytest.approx(sphere_monomial_norm2(m), rel=1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_unweighted_norms(n):
    # ||z^m||^2 = n! m! / (n + |m|)! for normalized volume
    basis = build_basis("A2", wt(n=n), 10)
    want = [math.factorial(n) * m.factorial / math.factorial(n + m.degree) for m in basis.indices]
    np.testing.assert_allclose(basis.norms**2, want, rtol=1e-12)


@pytest.mark.parametrize("spec", ["std:alpha=0", "std:alpha=1", "logpow:beta=2"])
def test_dirichlet_norms_equal_bergman_norms(spec):
    w = wt(spec)
    a = build_basis("A2", w, 64)
    h = build_basis("H", w, 64, alpha=0.0)
    np.testing.assert_allclose(h.norms, a.norms, rtol=1e-10)


def test_basis_size_cap():
    with pytest.raises(SizeExceeded):
        build_basis("A2", wt(n=2), 400)


def test_parse_and_arithmetic():
    f = parse_polynomial("1 + 2i*z1^2*z2 - z2**3")
    assert f.n == 2 and f.degree == 3
    assert f.coefficient((2, 1)) == 2j
    g = parse_polynomial("z1 + z2", 2)
    assert (g * g).coefficient((1, 1)) == 2
    assert (g**2 - g * g).is_zero
    assert f(np.array([1.0, 1.0])) == pytest.approx(2j)
    with pytest.raises(ConfigError):
        parse_polynomial("z1 +* 2")
    with pytest.raises(ConfigError):
        f + g.__class__(1, {(1,): 1})


def test_string_roundtrip():
    f = parse_polynomial("0.25*z1*z2^3 - 3j", 2)
    assert parse_polynomial(str(f), 2) == f


def test_radial_derivative_and_volterra():
    f = parse_polynomial("z + z^3")
    assert radial_derivative(f) == parse_polynomial("z + 3*z^3")
    # int_0^1 f(tz) Rg(tz) dt/t with f = 1, g = z^2 gives z^2 back
    one = Polynomial.constant(1)
    assert volterra_coefficients(one, parse_polynomial("z^2")).close_to(parse_polynomial("z^2"))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2**31))
def test_energy_identity_property(n, seed):
    rng = np.random.default_rng(seed)
    idx = multi_indices(n, 6)
    coeffs = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
    f = Polynomial(n, dict(zip(idx, coeffs)))
    w = wt("std:alpha=1", n)
    basis = build_basis("A2", w, 6)
    assert energy_norm2(f, w) == pytest.approx(basis.norm(f) ** 2, rel=1e-8)


def test_evaluate_matches_polynomial():
    basis = build_basis("A2", wt(n=2), 4)
    z = np.array([[0.3 + 0.1j, -0.2j]])
    m = MultiIndex((2, 1))
    e = basis.evaluate(z)[0, basis.position(m)]
    assert e == pytest.approx(z[0, 0] ** 2 * z[0, 1] / basis.norms[basis.position(m)])
