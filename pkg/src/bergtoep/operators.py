"""Galerkin sections of Toeplitz and Volterra operators in monomial bases.

In an orthonormal basis ``e_a`` the Toeplitz section is the Gram matrix
``M[a, b] = int e_a conj(e_b) dmu`` and the Volterra section is the matrix
of ``T_g`` restricted to polynomials of bounded degree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .basis import (MultiIndex, OrthoBasis, Polynomial, radial_derivative,
                    sphere_monomial_norm2)
from .errors import ConfigError, DomainError, MassOverflow
from .kernels import KernelSeries, kernel_eval
from .numerics import (HermitianMatrix, Spectrum, hermitian_eigenvalues, log_r,
                       schatten_power_sum)
from .weights import WeightTransforms

ATOM_RADIUS_CAP = 0.995
MASS_CAP = 1e12


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many point masses inside the ball."""

    n: int
    points: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    radius_cap: float = ATOM_RADIUS_CAP

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).reshape(-1, self.n)
        mass = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(pts) != len(mass):
            raise ConfigError(f"{len(pts)} atoms but {len(mass)} masses")
        if np.any(~(mass > 0)):
            raise ConfigError("atom masses must be positive")
        if len(pts) and float(np.max(np.linalg.norm(pts, axis=1))) > self.radius_cap:
            raise ConfigError(f"atoms must satisfy |z| <= {self.radius_cap}")
        if float(np.sum(mass)) > MASS_CAP:
            raise MassOverflow(f"total mass {float(np.sum(mass)):.3g} exceeds {MASS_CAP:g}")
        pts.setflags(write=False)
        mass.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", mass)

    @classmethod
    def empty(cls, n: int) -> "DiscreteMeasure":
        return cls(n, np.empty((0, n), complex), np.empty(0))

    @classmethod
    def delta(cls, z, mass: float = 1.0) -> "DiscreteMeasure":
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return cls(z.size, z[None, :], np.array([mass]))

    @property
    def size(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.n, self.points, self.masses * factor, self.radius_cap)

    def to_json(self) -> dict:
        return {"n": self.n, "atoms": [
            {"z": [[float(c.real), float(c.imag)] for c in z], "mass": float(m)}
            for z, m in zip(self.points, self.masses)]}

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteMeasure":
        try:
            n = int(data["n"])
            pts = [[complex(re, im) for re, im in atom["z"]] for atom in data["atoms"]]
            mass = [float(atom["mass"]) for atom in data["atoms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed measure JSON: {exc}") from None
        if any(len(z) != n for z in pts):
            raise ConfigError(f"every atom needs {n} coordinates")
        return cls(n, np.array(pts, dtype=complex).reshape(-1, n), np.array(mass))


def read_measure(path: str | Path) -> DiscreteMeasure:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read measure file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"measure file {path} is not JSON: {exc}") from None
    return DiscreteMeasure.from_json(data)


@dataclass(frozen=True, eq=False)
class RadialDensityMeasure:
    """``dmu = phi(|z|) |P(z)|^2 dV``.

    ``phi`` takes ``(r, 1 - r)`` arrays like a weight density.  ``phi_tail``,
    when given, returns ``int_r^1 phi`` and closes the radial sums past the
    last node of the graded rule.
    """

    n: int
    phi: Callable = field(repr=False)
    poly: Polynomial | None = None
    label: str = "density"
    phi_tail: Callable | None = field(default=None, repr=False)
    w: WeightTransforms | None = field(default=None, repr=False)

    def __post_init__(self):
        poly = self.poly if self.poly is not None else Polynomial.constant(self.n)
        if poly.n != self.n:
            raise ConfigError(f"polynomial has n={poly.n}, measure has n={self.n}")
        object.__setattr__(self, "poly", poly)
        if self.w is None:
            from .weights import standard
            object.__setattr__(self, "w", WeightTransforms(standard(0.0, self.n)))
        vals = self.phi_nodes()
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ConfigError(f"density {self.label} is negative or non-finite")
        if self.total_mass > MASS_CAP:
            raise MassOverflow(f"total mass of {self.label} exceeds {MASS_CAP:g}")

    def phi_nodes(self) -> np.ndarray:
        cache = self.__dict__.get("_phi_nodes")
        if cache is None:
            rule = self.w.rule
            cache = np.asarray(self.phi(rule.r, rule.u), dtype=float)
            object.__setattr__(self, "_phi_nodes", cache)
        return cache

    def radial_moments(self, s) -> np.ndarray:
        """``int_0^1 r^s phi(r) dr`` on the graded rule."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rule = self.w.rule
        logs = log_r(rule.r, rule.u)
        wp = rule.weights * self.phi_nodes()
        out = np.exp(np.outer(s, logs)) @ wp
        if self.phi_tail is not None:
            out = out + float(self.phi_tail(np.array(rule.r_end), np.array(rule.u_min)))
        return out

    def power_tail(self, a: float, p: float) -> float:
        """``int_a^1 r^p phi(r) dr``."""
        rule = self.w.rule
        a = float(a)
        if a <= 0:
            return float(self.radial_moments(p)[0])
        pr, pu, pw, k = rule.partial_nodes(np.array(a), np.array(1.0 - a))
        part = float(np.sum(pw * pr**p * np.asarray(self.phi(pr, pu), dtype=float)))
        mask = rule.panel > int(k)
        rest = float(np.sum((rule.weights * rule.r**p * self.phi_nodes())[mask]))
        tail = 0.0
        if self.phi_tail is not None and int(k) < rule.n_panels:
            tail = float(self.phi_tail(np.array(rule.r_end), np.array(rule.u_min)))
        return part + rest + tail

    def angular_pairs(self) -> list[tuple[MultiIndex, MultiIndex, complex]]:
        """Terms ``(c, d, p_c conj(p_d))`` of ``|P|^2``."""
        items = list(self.poly.coeffs.items())
        return [(mc, md, pc * np.conj(pd)) for mc, pc in items for md, pd in items]

    @property
    def total_mass(self) -> float:
        total = 0.0
        for m, c in self.poly.coeffs.items():
            rad = self.radial_moments(2 * self.n - 1 + 2 * m.degree)[0]
            total += abs(c) ** 2 * sphere_monomial_norm2(m) * 2 * self.n * rad
        return float(total)

    def scaled(self, factor: float) -> "RadialDensityMeasure":
        phi, tail = self.phi, self.phi_tail
        return RadialDensityMeasure(
            self.n, lambda r, u: factor * phi(r, u), self.poly, f"{factor:g}*{self.label}",
            None if tail is None else (lambda r, u: factor * tail(r, u)), self.w)


def weight_measure(w: WeightTransforms) -> RadialDensityMeasure:
    """``dmu = w dV``."""
    return RadialDensityMeasure(w.n, w.weight.density, None, f"{w.weight.label} dV",
                                lambda r, u: w.hat(r, u), w)


def volterra_measure(w: WeightTransforms, g: Polynomial) -> RadialDensityMeasure:
    """``dmu_g = 4 |Rg|^2 nstar(|z|) / |z|^(2n) dV``."""
    n = w.n
    rule = w.rule
    nodes = 4.0 * w.nstar_nodes() / rule.r ** (2 * n)

    def phi(r, u):
        r = np.asarray(r, dtype=float)
        if r.shape == rule.r.shape and np.array_equal(r, rule.r):
            return nodes
        return 4.0 * w.nstar(r, u) / r ** (2 * n)

    return RadialDensityMeasure(n, phi, radial_derivative(g), f"mu_g[{g}]", None, w)


Measure = DiscreteMeasure | RadialDensityMeasure


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorSection:
    """A finite section and the basis it lives in.

    ``matrix`` is a :class:`HermitianMatrix` for Toeplitz kinds and a plain
    complex array for the Volterra kind, indexed ``[row, column]``.
    """

    basis: OrthoBasis
    matrix: HermitianMatrix | np.ndarray = field(repr=False)
    kind: str
    truncated: bool = False

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def entries(self) -> np.ndarray:
        return self.matrix.entries if isinstance(self.matrix, HermitianMatrix) else self.matrix


def _gram_discrete(basis: OrthoBasis, mu: DiscreteMeasure) -> np.ndarray:
    if mu.size == 0:
        return np.zeros((basis.dim, basis.dim), dtype=complex)
    e = basis.evaluate(mu.points)
    return (e.T * mu.masses) @ e.conj()


def _gram_radial(basis: OrthoBasis, mu: RadialDensityMeasure) -> np.ndarray:
    n = basis.n
    dim = basis.dim
    pos = basis._positions()
    out = np.zeros((dim, dim), dtype=complex)
    pairs = mu.angular_pairs()
    pdeg = mu.poly.degree
    orders = 2 * n - 1 + 2 * np.arange(basis.max_degree + pdeg + 1)
    rad = 2 * n * mu.radial_moments(orders)
    for mc, md, coef in pairs:
        for a, ma in enumerate(basis.indices):
            total = ma.plus(mc)
            mb = total.minus(md)
            if mb is None:
                continue
            b = pos.get(mb)
            if b is None:
                continue
            value = coef * sphere_monomial_norm2(total) * rad[total.degree]
            out[a, b] += value / (basis.norms[a] * basis.norms[b])
    return out


def toeplitz_section(basis: OrthoBasis, mu: Measure) -> OperatorSection:
    """``M[a, b] = int e_a conj(e_b) dmu`` for a basis of ``A2``."""
    if basis.space != "A2":
        raise ConfigError("toeplitz_section needs an A2 basis; use htoeplitz_section for H")
    return _section(basis, mu, "toeplitz")


def htoeplitz_section(basis: OrthoBasis, mu: Measure) -> OperatorSection:
    """The same pairing for a basis of ``H(W_alpha)``."""
    if basis.space != "H":
        raise ConfigError("htoeplitz_section needs an H basis")
    return _section(basis, mu, "htoeplitz")


def _section(basis: OrthoBasis, mu: Measure, kind: str) -> OperatorSection:
    if mu.n != basis.n:
        raise ConfigError(f"measure has n={mu.n}, basis has n={basis.n}")
    if isinstance(mu, DiscreteMeasure):
        gram = _gram_discrete(basis, mu)
    else:
        gram = _gram_radial(basis, mu)
    return OperatorSection(basis, HermitianMatrix(gram), kind)


def volterra_section(basis: OrthoBasis, g: Polynomial) -> OperatorSection:
    """Matrix of ``T_g`` on the span of the basis, dropping images of degree above it.

    Entry ``(q, m)`` is ``(|l| / |q|) g_l ||z^q|| / ||z^m||`` with ``l = q - m``.
    """
    if basis.space != "A2":
        raise ConfigError("volterra_section needs an A2 basis")
    if g.n != basis.n:
        raise ConfigError(f"g has n={g.n}, basis has n={basis.n}")
    pos = basis._positions()
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    truncated = False
    for ml, gl in g.coeffs.items():
        if ml.degree == 0:
            continue
        for col, mm in enumerate(basis.indices):
            mq = mm.plus(ml)
            row = pos.get(mq)
            if row is None:
                truncated = True
                continue
            mat[row, col] += ml.degree / mq.degree * gl * basis.norms[row] / basis.norms[col]
    return OperatorSection(basis, mat, "volterra", truncated)


def section_spectrum(sec: OperatorSection) -> Spectrum:
    """Eigenvalues (Toeplitz kinds) or singular values (Volterra), descending."""
    if sec.kind == "volterra":
        m = sec.matrix
        gram = hermitian_eigenvalues(HermitianMatrix(m.conj().T @ m, check=False))
        vals = np.sqrt(np.clip(gram.eigenvalues, 0.0, None))
        return Spectrum(tuple(vals))
    return hermitian_eigenvalues(sec.matrix)


def section_schatten(sec: OperatorSection, p: float) -> float:
    """``sum sigma_k^p`` over the section's singular values."""
    return schatten_power_sum(section_spectrum(sec), p)


# ---------------------------------------------------------------------------
# Berezin transform
# ---------------------------------------------------------------------------


def berezin(series: KernelSeries, mu: DiscreteMeasure, z, tol: float = 1e-12) -> float:
    """``sum_i m_i |B_z(z_i)|^2 / B_z(z)``."""
    if series.space != "A2":
        raise DomainError("the Berezin transform uses the Bergman kernel")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if float(np.linalg.norm(z)) > ATOM_RADIUS_CAP:
        raise DomainError(f"|z| must be at most {ATOM_RADIUS_CAP}")
    diag = float(np.real(kernel_eval(series, z, z, tol)))
    if isinstance(mu, RadialDensityMeasure):
        return radial_berezin(series, mu, z, tol)
    if mu.size == 0:
        return 0.0
    vals = kernel_eval(series, z[None, :], mu.points, tol)
    return math.fsum(mu.masses * np.abs(vals) ** 2) / diag


def radial_berezin(series: KernelSeries, mu: RadialDensityMeasure, z, tol: float = 1e-12) -> float:
    """Berezin transform of ``phi(|z|) dV`` by the coefficient sum.

    ``int |B_z|^2 phi dV = sum_k a_k^2 |z|^(2k) 2n Phi_(2n-1+2k) (n-1)! k! / (n-1+k)!``
    where ``Phi_s`` are the radial moments of ``phi``.
    """
    if not mu.poly.is_constant:
        raise ConfigError("radial Berezin transforms need P constant")
    n = series.n
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    rz2 = float(np.sum(np.abs(z) ** 2))
    if rz2 == 0:
        a0 = math.exp(float(series.log_coefficients(0)[0]))
        c0 = abs(mu.poly.coefficient((0,) * n)) ** 2
        return a0 * c0 * 2 * n * float(mu.radial_moments(2 * n - 1)[0])
    kmax = series.truncation(rz2, tol * math.exp(float(series.log_coefficients(0)[0])))
    k = np.arange(kmax + 1)
    la = series.log_coefficients(kmax)
    ang = np.array([math.lgamma(n) + math.lgamma(j + 1) - math.lgamma(n + j) for j in k])
    phi = mu.radial_moments(2 * n - 1 + 2 * k)
    c0 = abs(mu.poly.coefficient((0,) * n)) ** 2
    top = math.fsum(np.exp(2 * la + k * math.log(rz2) + ang) * 2 * n * phi) * c0
    diag = float(series.series(rz2, tol)[0].real)
    return top / diag


def berezin_matrix(sec: OperatorSection, z) -> float:
    """``<M b, b>`` with ``b`` the normalized truncated kernel coefficients at ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    c = np.conj(sec.basis.evaluate(z[None, :])[0])
    c = c / np.linalg.norm(c)
    return float(np.real(c @ sec.entries @ c.conj()))
