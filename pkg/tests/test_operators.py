import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergtoep.basis import build_basis, parse_polynomial
from bergtoep.errors import ConfigError, MassOverflow
from bergtoep.kernels import bergman_kernel
from bergtoep.operators import (DiscreteMeasure, berezin, berezin_matrix, htoeplitz_section,
                                read_measure, section_schatten, section_spectrum,
                                toeplitz_section, volterra_measure, volterra_section,
                                weight_measure)
from bergtoep.weights import WeightTransforms, parse_weight


def wt(spec="std:alpha=0", n=1):
    return WeightTransforms(parse_weight(spec, n))


@pytest.mark.parametrize("n,degree", [(1, 31), (2, 8)])
@pytest.mark.parametrize("spec", ["std:alpha=0", "std:alpha=1", "logpow:beta=2"])
def test_weight_measure_gives_identity(spec, n, degree):
    w = wt(spec, n)
    sec = toeplitz_section(build_basis("A2", w, degree), weight_measure(w))
    np.testing.assert_allclose(sec.entries, np.eye(sec.dim), atol=1e-9)


def test_rank_one_point_mass():
    w = wt()
    sec = toeplitz_section(build_basis("A2", w, 63), DiscreteMeasure.delta(0.5))
    vals = section_spectrum(sec).as_array()
    # top eigenvalue is the truncated kernel diagonal; the tail is below 0.25^64 * 65
    assert vals[0] == pytest.approx(16 / 9, abs=1e-15 + 65 * 0.25**64 * 2)
    assert np.all(np.abs(vals[1:]) <= 1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_discrete_section_is_psd_with_known_trace(seed, atoms):
    rng = np.random.default_rng(seed)
    pts = 0.9 * rng.random(atoms) * np.exp(2j * np.pi * rng.random(atoms))
    mu = DiscreteMeasure(1, pts, rng.uniform(0.1, 2, atoms))
    basis = build_basis("A2", wt(), 20)
    sec = toeplitz_section(basis, mu)
    vals = section_spectrum(sec).as_array()
    assert vals.min() > -1e-10 * vals.max()
    trace = np.sum(mu.masses * np.sum(np.abs(basis.evaluate(mu.points)) ** 2, axis=1))
    assert vals.sum() == pytest.approx(trace, rel=1e-10)
    assert section_schatten(sec, 1) == pytest.approx(trace, rel=1e-10)


def test_unweighted_volterra_singular_values():
    # T_z e_k = e_(k+1) / sqrt((k+1)(k+2)) on the unweighted disk space
    sec = volterra_section(build_basis("A2", wt(), 40), parse_polynomial("z"))
    got = section_spectrum(sec).as_array()
    k = np.arange(40)
    want = np.sort(np.append(1 / np.sqrt((k + 1) * (k + 2)), 0.0))[::-1]
    np.testing.assert_allclose(got, want, atol=1e-13)
    assert sec.truncated


@pytest.mark.parametrize("g", ["z", "z^2", "z+0.3*z^3"])
@pytest.mark.parametrize("spec", ["std:alpha=0", "logpow:beta=2"])
def test_volterra_factorization(spec, g):
    w = wt(spec)
    basis = build_basis("A2", w, 40)
    poly = parse_polynomial(g)
    t = volterra_section(basis, poly).entries
    m = toeplitz_section(basis, volterra_measure(w, poly)).entries
    deg = basis.degrees
    keep = deg[:, None] + deg[None, :] <= 40 - poly.degree
    assert np.max(np.abs((t.conj().T @ t - m)[keep])) <= 1e-7


def test_berezin_values():
    w = wt()
    ks = bergman_kernel(w)
    assert berezin(ks, DiscreteMeasure.delta(0.0), np.array([0.0])) == pytest.approx(1.0)
    # B_z(z) |B_0(z)|^2 / B_z(z) at z = 0.5 with a unit mass at 0
    assert berezin(ks, DiscreteMeasure.delta(0.0), np.array([0.5])) == pytest.approx(9 / 16)
    for z in (0.0, 0.4, 0.9j):
        assert berezin(ks, weight_measure(w), np.array([z])) == pytest.approx(1.0, rel=1e-9)


def test_berezin_matrix_agrees_inside():
    w = wt()
    mu = DiscreteMeasure(1, np.array([0.3, -0.5j]), np.array([1.0, 2.0]))
    sec = toeplitz_section(build_basis("A2", w, 80), mu)
    z = np.array([0.2 + 0.1j])
    assert berezin_matrix(sec, z) == pytest.approx(berezin(bergman_kernel(w), mu, z), rel=1e-10)


def test_section_kind_guards():
    w = wt()
    with pytest.raises(ConfigError):
        htoeplitz_section(build_basis("A2", w, 4), DiscreteMeasure.delta(0.5))
    with pytest.raises(ConfigError):
        toeplitz_section(build_basis("A2", w, 4), DiscreteMeasure.delta([0.5, 0]))


def test_measure_validation():
    with pytest.raises(ConfigError):
        DiscreteMeasure(1, np.array([0.999]), np.array([1.0]))
    with pytest.raises(ConfigError):
        DiscreteMeasure(1, np.array([0.5]), np.array([-1.0]))
    with pytest.raises(MassOverflow):
        DiscreteMeasure(1, np.array([0.5]), np.array([1e13]))


def test_measure_json_roundtrip(tmp_path):
    mu = DiscreteMeasure(2, np.array([[0.1 + 0.2j, -0.3j], [0.0, 0.5]]), np.array([1.5, 0.25]))
    path = tmp_path / "mu.json"
    path.write_text(json.dumps(mu.to_json()))
    back = read_measure(path)
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.masses, mu.masses)
    path.write_text('{"n": 2, "atoms": [{"z": [[0, 0]], "mass": 1}]}')
    with pytest.raises(ConfigError):
        read_measure(path)


def test_small_section_examples():
    w = wt()
    basis = build_basis("A2", w, 8)
    m = toeplitz_section(basis, DiscreteMeasure.delta(0.0)).entries
    want = np.zeros_like(m)
    want[0, 0] = 1
    np.testing.assert_allclose(m, want, atol=1e-15)
    assert not toeplitz_section(basis, DiscreteMeasure.empty(1)).entries.any()
    h = htoeplitz_section(build_basis("H", w, 8, alpha=0.0), DiscreteMeasure.delta(0.0))
    assert h.entries[0, 0] == pytest.approx(1.0)
    t = volterra_section(basis, parse_polynomial("z")).entries
    assert t[1, 0] == pytest.approx(math.sqrt(0.5))
    assert not volterra_section(basis, parse_polynomial("4")).entries.any()
    ident = toeplitz_section(basis, weight_measure(w))
    assert section_schatten(ident, 1) == pytest.approx(9)
    rank_one = toeplitz_section(basis, DiscreteMeasure.delta(0.3))
    top = section_spectrum(rank_one).max
    for p in (0.5, 1, 2):
        assert section_schatten(rank_one, p) == pytest.approx(top**p, rel=1e-9)
