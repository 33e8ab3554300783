"""Computable statistics behind the boundedness, compactness and Schatten criteria.

Each statistic returns a :class:`CriterionReport` holding the headline
number (a sup, a sum or an integral), a per-level profile and the grid
that produced it.  Sup statistics scan the cell centers of a dyadic
partition plus, for discrete measures, the atoms themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .basis import Polynomial, radial_derivative, sphere_rule
from .errors import ConfigError, DomainError
from .geometry import (PHBall, DyadicPartition, _Stream, block_measure_radial, cap_measure,
                       center_radius, pseudo_hyperbolic, shell_bounds)
from .kernels import KernelSeries
from .numerics import gauss_legendre, integrate_radial
from .operators import ATOM_RADIUS_CAP, DiscreteMeasure, berezin, radial_berezin
from .weights import WeightTransforms

BERGMAN_RADIUS_RANGE = (0.1, 2.0)
CELL_SAMPLES = {1: 2**18, 2: 2**18}
BALL_SAMPLES = 20_000
PANELS_PER_PIECE = 8
SLOPE_LEVELS = 40
CONVERGED_SLOPE = 1e-2


@dataclass(frozen=True)
class CriterionReport:
    """Headline value, per-level profile and provenance of one statistic."""

    kind: str
    headline: float
    profile: tuple = ()
    grid_used: int = 0
    band: tuple | None = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "headline": self.headline,
            "band": list(self.band) if self.band is not None else None,
            "profile": [[float(r), float(v)] for r, v in self.profile],
            "grid_used": self.grid_used,
            "extras": self.extras,
        }


def _check_measure(w: WeightTransforms, mu) -> None:
    if mu.n != w.n:
        raise ConfigError(f"measure has n={mu.n}, weight has n={w.n}")


def _level(radius: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        k = np.floor(-np.log2(np.maximum(1.0 - radius, 1e-300))).astype(np.int64)
    return np.maximum(k, 0)


def _profile(radius: np.ndarray, values: np.ndarray, reduce=np.max) -> tuple:
    """Reduce ``values`` per dyadic level of ``radius``; rows are ``(center radius, value)``."""
    k = _level(radius)
    rows = []
    for level in np.unique(k):
        rows.append((center_radius(int(level)), float(reduce(values[k == level]))))
    return tuple(rows)


# ---------------------------------------------------------------------------
# sup grids and Carleson blocks
# ---------------------------------------------------------------------------


def sup_grid(part: DyadicPartition, mu=None, rcap: float | None = None) -> np.ndarray:
    """The origin, every cell center of ``part`` and, for discrete ``mu``, its atoms."""
    pts = [np.zeros((1, part.n), complex)]
    pts += [np.array([c for _, _, c, _ in part.cells()])]
    if isinstance(mu, DiscreteMeasure) and mu.size:
        pts.append(mu.points)
    grid = np.concatenate(pts)
    if rcap is not None:
        grid = grid[np.linalg.norm(grid, axis=1) <= rcap]
    return grid


def block_mass(mu, grid: np.ndarray) -> np.ndarray:
    """``mu(S_a)`` for each ``a`` in ``grid``.

    For atoms the block is taken closed in the radius (``|z_i| >= |a|``)
    and open in the cap; ``a = 0`` gives the whole ball.
    """
    grid = np.asarray(grid, dtype=complex).reshape(-1, mu.n)
    ra = np.linalg.norm(grid, axis=1)
    if isinstance(mu, DiscreteMeasure):
        if mu.size == 0:
            return np.zeros(len(grid))
        rz = np.linalg.norm(mu.points, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            da = grid / np.where(ra > 0, ra, 1.0)[:, None]
            dz = mu.points / np.where(rz > 0, rz, 1.0)[:, None]
        gap = np.sqrt(np.abs(1.0 - da @ dz.conj().T))
        inside = (rz[None, :] >= ra[:, None]) & (gap < np.sqrt(1.0 - ra)[:, None])
        inside[ra == 0, :] = True
        return inside.astype(float) @ mu.masses
    if not mu.poly.is_constant:
        raise ConfigError("block masses of densities need P constant")
    c0 = abs(mu.poly.coefficient((0,) * mu.n)) ** 2
    out = np.empty(len(grid))
    cache: dict[float, float] = {}
    for i, r in enumerate(ra):
        key = float(r)
        if key not in cache:
            cap = 1.0 if key == 0 else cap_measure(mu.n, math.sqrt(1.0 - key))
            cache[key] = c0 * cap * 2 * mu.n * mu.power_tail(key, 2 * mu.n - 1)
        out[i] = cache[key]
    return out


def _block_weight(w: WeightTransforms, radius: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(radius, return_inverse=True)
    return block_measure_radial(w, uniq)[inv]


def carleson_quotient(w: WeightTransforms, mu, p: float, q: float,
                      part: DyadicPartition, grid: np.ndarray | None = None) -> CriterionReport:
    """``sup_a mu(S_a) / w(S_a)^(1/p - 1/q + 1)`` over the sup grid."""
    if not 1 < p <= q:
        raise ConfigError(f"need 1 < p <= q, got p={p}, q={q}")
    _check_measure(w, mu)
    grid = sup_grid(part, mu) if grid is None else np.asarray(grid, complex).reshape(-1, w.n)
    gamma = 1.0 / p - 1.0 / q + 1.0
    radius = np.linalg.norm(grid, axis=1)
    values = block_mass(mu, grid) / _block_weight(w, radius) ** gamma
    best = int(np.argmax(values))
    prof = _profile(radius, values)
    return CriterionReport(
        "carleson", float(values[best]), prof, len(grid),
        extras={"exponent": gamma, "argmax": _point(grid[best]),
                "rim_over_headline": prof[-1][1] / values[best] if values[best] > 0 else 0.0})


def _point(z) -> list:
    return [[float(c.real), float(c.imag)] for c in np.atleast_1d(z)]


def berezin_quotient(series: KernelSeries, w: WeightTransforms, mu, p: float, q: float,
                     part: DyadicPartition, grid: np.ndarray | None = None) -> CriterionReport:
    """``sup_z berezin(z) / w(S_z)^(1/p - 1/q)`` over grid points with ``|z| <= 0.995``."""
    if not 1 < p <= q:
        raise ConfigError(f"need 1 < p <= q, got p={p}, q={q}")
    _check_measure(w, mu)
    full = sup_grid(part, mu) if grid is None else np.asarray(grid, complex).reshape(-1, w.n)
    keep = np.linalg.norm(full, axis=1) <= ATOM_RADIUS_CAP
    grid = full[keep]
    expo = 1.0 / p - 1.0 / q
    radius = np.linalg.norm(grid, axis=1)
    if isinstance(mu, DiscreteMeasure) and mu.size == 0:
        values = np.zeros(len(grid))
    else:
        transform = berezin if isinstance(mu, DiscreteMeasure) else radial_berezin
        values = np.array([transform(series, mu, z, tol=1e-10) for z in grid])
    if expo:
        values = values / _block_weight(w, radius) ** expo
    best = int(np.argmax(values))
    return CriterionReport(
        "berezin", float(values[best]), _profile(radius, values), len(grid),
        extras={"exponent": expo, "argmax": _point(grid[best]),
                "dropped_beyond_cap": int(np.count_nonzero(~keep))})


# ---------------------------------------------------------------------------
# integrals of mu(D(z, r))
# ---------------------------------------------------------------------------


def _ph_support(radius: float, t: float) -> tuple[float, float]:
    """Radial extent of ``Delta(a, t)`` for ``|a| = radius``."""
    lo = 0.0 if radius <= t else (radius - t) / (1 - radius * t)
    return lo, (radius + t) / (1 + radius * t)


def _arc_table(mu: DiscreteMeasure, rho: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """For ``n = 1``: circle ``|z| = rho`` cut into arcs of constant ``mu(Delta(z, t))``.

    Returns ``(fractions, masses)``, both shaped ``(len(rho), pieces)``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    z = mu.points[:, 0]
    radius = np.abs(z)
    centre = radius == 0
    base = (rho[:, None] < t) * mu.masses[centre][None, :]
    base = base.sum(axis=1)
    z, m, a = z[~centre], mu.masses[~centre], radius[~centre]
    if z.size == 0:
        return np.ones((rho.size, 1)), base[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = ((rho[:, None] ** 2 + a**2 - t * t - (t * rho[:, None] * a) ** 2)
             / (2 * rho[:, None] * a * (1 - t * t)))
    c = np.where(np.isnan(c), 2.0, c)
    half = np.arccos(np.clip(c, -1.0, 1.0))
    angle = np.angle(z)[None, :]
    cuts = np.sort(np.mod(np.concatenate([angle - half, angle + half], axis=1), 2 * math.pi), axis=1)
    spans = np.diff(np.concatenate([cuts, cuts[:, :1] + 2 * math.pi], axis=1), axis=1)
    mids = cuts + spans / 2
    off = np.abs(np.angle(np.exp(1j * (mids[:, :, None] - angle[:, None, :]))))
    inside = (off < half[:, None, :]) | (half[:, None, :] >= math.pi)
    mass = base[:, None] + inside.astype(float) @ m
    return spans / (2 * math.pi), mass


def _disk_fraction(rho: float, radius: float, t: float) -> float:
    """For ``n = 2``: share of the sphere ``|z| = rho`` inside ``Delta(a, t)``, ``|a| = radius``.

    ``<eta, a/|a|>`` is uniform on the unit disk, and the condition is a
    disk in that variable; the answer is a lens area over ``pi``.
    """
    if radius == 0 or rho == 0:
        return 1.0 if max(rho, radius) < t else 0.0
    s = rho * radius
    k = (1 - radius * radius) * (1 - rho * rho) / (1 - t * t)
    # unit disk vs disk of center 1/s and radius sqrt(k)/s
    d, big = 1.0 / s, math.sqrt(k) / s
    if d >= 1 + big:
        return 0.0
    if d <= abs(big - 1):
        return 1.0 if big >= 1 else big * big
    c1 = min(1.0, max(-1.0, (1 - k + s * s) / (2 * s)))
    c2 = min(1.0, max(-1.0, (1 + k - s * s) / (2 * math.sqrt(k))))
    core = max(0.0, ((s + math.sqrt(k)) ** 2 - 1) * (1 - (s - math.sqrt(k)) ** 2))
    area = math.acos(c1) + big * big * math.acos(c2) - 0.5 * math.sqrt(core) / (s * s)
    return min(1.0, max(0.0, area / math.pi))


def _separated(mu: DiscreteMeasure, t: float) -> bool:
    """True when no Bergman ball of pseudo-hyperbolic radius ``t`` holds two atoms."""
    if mu.size < 2:
        return True
    gap = 2 * t / (1 + t * t)
    for i in range(mu.size - 1):
        if np.any(pseudo_hyperbolic(mu.points[i], mu.points[i + 1:]) < gap):
            return False
    return True


def _fixed_nodes(breaks: list[float]) -> tuple[np.ndarray, np.ndarray]:
    x, wx = gauss_legendre()
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        edges = np.linspace(lo, hi, PANELS_PER_PIECE + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            nodes.append(a + (b - a) * x)
            weights.append((b - a) * wx)
    return np.concatenate(nodes), np.concatenate(weights)


def _ball_integral(mu, n: int, radius_bergman: float, rmax: float, expo: float,
                   scale, factor, seed: int, samples: int) -> tuple[float, float, tuple, str]:
    """``int_{|z| <= rmax} (mu(D(z, r)) / scale(|z|))^expo factor(|z|) dV``.

    ``scale`` and ``factor`` act on arrays of radii.  Returns the value, a
    standard-error estimate (zero for exact angular integrals), a radial
    profile and the method name.
    """

    def integrand(mass, rho):
        rho = np.atleast_1d(rho)
        return (mass / scale(rho)) ** expo * factor(rho)

    lo_b, hi_b = BERGMAN_RADIUS_RANGE
    if not lo_b < radius_bergman < hi_b:
        raise DomainError(f"Bergman radius must lie in {BERGMAN_RADIUS_RANGE}, got {radius_bergman}")
    t = math.tanh(radius_bergman)
    if isinstance(mu, DiscreteMeasure):
        if mu.size == 0:
            return 0.0, 0.0, (), "empty"
        supports = [_ph_support(float(np.linalg.norm(z)), t) for z in mu.points]
        breaks = sorted({0.0, rmax} | {min(v, rmax) for s in supports for v in s})
        if n == 1:
            def radial(rho):
                rho = np.atleast_1d(np.asarray(rho, dtype=float))
                frac, mass = _arc_table(mu, rho, t)
                vals = np.where(mass > 0, frac * (mass / scale(rho)[:, None]) ** expo, 0.0)
                return 2 * rho * factor(rho) * vals.sum(axis=1)

            nodes, weights = _fixed_nodes(breaks)
            floor = 1e-10 * abs(float(weights @ radial(nodes))) + 1e-300
            total, prof = 0.0, []
            for a, b in zip(breaks[:-1], breaks[1:]):
                if b <= a:
                    continue
                # overlapping arcs leave jumps inside a piece; the floor keeps them settleable
                val = integrate_radial(radial, a, b, 1e-9, abs_tol=floor).value
                total += val
                prof.append((0.5 * (a + b), val))
            return total, 0.0, tuple(prof), "exact-arcs"
        if n == 2 and _separated(mu, t):
            total, prof = 0.0, []
            for (lo, hi), z, m in zip(supports, mu.points, mu.masses):
                radius = float(np.linalg.norm(z))
                hi = min(hi, rmax)
                if hi <= lo:
                    continue

                def radial(rho, radius=radius, m=m):
                    rho = np.atleast_1d(np.asarray(rho, dtype=float))
                    out = np.empty(rho.size)
                    for i, r in enumerate(rho):
                        frac = _disk_fraction(float(r), radius, t)
                        out[i] = 4 * r**3 * frac * integrand(m, r)[0] if frac > 0 else 0.0
                    return out

                val = integrate_radial(radial, lo, hi, 1e-9, abs_tol=1e-300).value
                total += val
                prof.append((radius, val))
            return total, 0.0, tuple(sorted(prof)), "exact-disks"
        nodes, weights = _fixed_nodes(breaks)
        stream = _Stream(n, seed)
        dirs = stream.take(samples)
        vals = np.empty(nodes.size)
        errs = np.empty(nodes.size)
        for i, rho in enumerate(nodes):
            pts = rho * dirs
            mass = np.zeros(samples)
            for z, m in zip(mu.points, mu.masses):
                mass += np.where(PHBall(z, t).contains(pts), m, 0.0) if np.linalg.norm(z) > 0 \
                    else np.where(rho < t, m, 0.0)
            f = np.zeros(samples)
            hit = mass > 0
            if hit.any():
                f[hit] = integrand(mass[hit], rho)
            jac = 2 * n * rho ** (2 * n - 1)
            vals[i] = jac * f.mean()
            errs[i] = jac * f.std(ddof=1) / math.sqrt(samples)
        total = float(weights @ vals)
        stderr = float(weights @ errs)
        return total, stderr, _profile(nodes, weights * vals, np.sum), "quasi-mc"
    if not mu.poly.is_constant:
        raise ConfigError("ball integrals of densities need P constant")
    edges = [0.0] + [b for b in 1.0 - 2.0 ** -np.arange(1, 40) if b < rmax] + [rmax]
    nodes, weights = _fixed_nodes(edges)
    rng = np.random.Generator(np.random.PCG64(seed))
    e1 = np.zeros(n, complex)
    e1[0] = 1.0
    c0 = abs(mu.poly.coefficient((0,) * n)) ** 2
    vals = np.empty(nodes.size)
    errs = np.empty(nodes.size)
    for i, rho in enumerate(nodes):
        ball = PHBall(rho * e1, t)
        pts = ball.sample(samples, rng)
        rad = np.linalg.norm(pts, axis=1)
        dens = np.where(rad < 1, mu.phi(np.minimum(rad, 1.0), 1.0 - np.minimum(rad, 1.0)), 0.0)
        mass = c0 * ball.volume * float(dens.mean())
        err = c0 * ball.volume * float(dens.std(ddof=1)) / math.sqrt(samples)
        jac = 2 * n * rho ** (2 * n - 1)
        vals[i] = jac * float(integrand(mass, rho)[0]) if mass > 0 else 0.0
        errs[i] = abs(jac * float(integrand(mass + err, rho)[0])) - abs(vals[i]) \
            if mass > 0 else 0.0
    total = float(weights @ vals)
    return total, float(weights @ np.abs(errs)), _profile(nodes, weights * vals, np.sum), "ball-mc"


def qlessp_statistic(w: WeightTransforms, mu, p: float, q: float, r: float,
                     rmax: float = 0.999, seed: int = 0,
                     samples: int = 4096) -> CriterionReport:
    """``int (mu(D(z, r)) / w(S_z))^(pq/(p-q)) W_1(|z|) dV`` over ``|z| <= rmax``."""
    if not 1 < q < p:
        raise ConfigError(f"need 1 < q < p, got p={p}, q={q}")
    _check_measure(w, mu)
    expo = p * q / (p - q)

    total, err, prof, method = _ball_integral(
        mu, w.n, r, rmax, expo, lambda rho: block_measure_radial(w, rho), w.w1, seed, samples)
    return CriterionReport("qlessp", total, prof, len(prof),
                           extras={"exponent": expo, "r": r, "rmax": rmax, "stderr": err,
                                   "method": method})


def _star_scale(w: WeightTransforms, rho, alpha: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return (1.0 - rho) ** (-alpha + w.n - 1) * w.star(rho)


def schatten_integral(w: WeightTransforms, mu, p: float, r: float, alpha: float = 0.0,
                      rmax: float = 0.999, seed: int = 0,
                      samples: int = 4096) -> CriterionReport:
    """``int (mu(D(z, r)) / ((1-|z|)^(n-1-alpha) star(|z|)))^p dlambda`` over ``|z| <= rmax``."""
    if p <= 0:
        raise ConfigError(f"p must be positive, got {p}")
    _check_measure(w, mu)
    n = w.n

    total, err, prof, method = _ball_integral(
        mu, n, r, rmax, p, lambda rho: _star_scale(w, rho, alpha),
        lambda rho: 1.0 / ((1.0 - rho) * (1.0 + rho)) ** (n + 1), seed, samples)
    return CriterionReport("schatten_integral", total, prof, len(prof),
                           extras={"p": p, "alpha": alpha, "r": r, "rmax": rmax,
                                   "stderr": err, "method": method})


# ---------------------------------------------------------------------------
# dyadic sums
# ---------------------------------------------------------------------------


_LABEL_CACHE: dict[tuple[int, int], tuple[object, np.ndarray]] = {}


def _sphere_samples(n: int, seed: int) -> np.ndarray:
    size = CELL_SAMPLES.get(n, 2**18)
    if n == 1:
        return np.exp(2j * math.pi * (np.arange(size) + 0.5) / size)[:, None]
    return _Stream(n, seed + 7).take(size)


def _cell_labels(part: DyadicPartition, level: int, seed: int = 0) -> np.ndarray:
    """0-based cap cell of each sphere sample at one level (cached per cover)."""
    cover = part.levels[level]
    key = (id(cover), seed)
    hit = _LABEL_CACHE.get(key)
    if hit is None or hit[0] is not cover:
        hit = (cover, cover.locate(_sphere_samples(part.n, seed)))
        _LABEL_CACHE[key] = hit
    return hit[1]


def _cell_fractions(part: DyadicPartition, level: int, seed: int = 0) -> np.ndarray:
    """Normalized surface measure of each cap cell of one level, by sampling."""
    count = part.counts[level]
    if count == 1:
        return np.ones(1)
    j = _cell_labels(part, level, seed)
    return np.bincount(j, minlength=count) / len(j)


def _hypotheses(n: int, p: float, alpha: float, space: str) -> dict:
    out = {"space": space}
    if space == "H":
        out["p>=1 and p*alpha<1"] = bool(p >= 1 and p * alpha < 1)
    if p < 1:
        out["p<1 hypothesis"] = "unverified" if n == 1 else "recorded"
    return out


def schatten_dyadic(w: WeightTransforms, mu, part: DyadicPartition, p: float,
                    alpha: float = 0.0, space: str = "A2") -> CriterionReport:
    """``sum over cells of (mu(R_kj) / ((1-|c_k|)^(n-1-alpha) star(|c_k|)))^p``.

    Atoms beyond the last level are grouped per level into an overflow
    term, which is added to the headline and flagged.
    """
    if p <= 0:
        raise ConfigError(f"p must be positive, got {p}")
    _check_measure(w, mu)
    if part.n != w.n:
        raise ConfigError(f"partition has n={part.n}, weight has n={w.n}")
    n = w.n
    scales = np.array([float(_star_scale(w, center_radius(k), alpha))
                       for k in range(part.kmax + 1)])
    per_level = np.zeros(part.kmax + 1)
    overflow = 0.0
    overflow_levels: list[int] = []
    if isinstance(mu, DiscreteMeasure):
        if mu.size:
            radius = np.linalg.norm(mu.points, axis=1)
            inside = radius < part.rmax
            if inside.any():
                k, j = part.locate(mu.points[inside])
                flat = part.flat_ids(k, j)
                mass = np.bincount(flat, weights=mu.masses[inside], minlength=part.n_cells)
                offsets = np.concatenate([[0], np.cumsum(part.counts)])
                for level in range(part.kmax + 1):
                    cells = mass[offsets[level]:offsets[level + 1]]
                    per_level[level] = float(np.sum((cells / scales[level]) ** p))
            if (~inside).any():
                levels = _level(radius[~inside])
                for level in np.unique(levels):
                    m = float(np.sum(mu.masses[~inside][levels == level]))
                    overflow += (m / float(_star_scale(w, center_radius(int(level)), alpha))) ** p
                    overflow_levels.append(int(level))
    else:
        if not mu.poly.is_constant:
            raise ConfigError("dyadic sums of densities need P constant")
        c0 = abs(mu.poly.coefficient((0,) * n)) ** 2
        for level in range(part.kmax + 1):
            lo, hi = shell_bounds(level)
            shell = c0 * 2 * n * (mu.power_tail(lo, 2 * n - 1) - mu.power_tail(hi, 2 * n - 1))
            frac = _cell_fractions(part, level)
            per_level[level] = float(np.sum((shell * frac / scales[level]) ** p))
        overflow = float(c0 * 2 * n * mu.power_tail(part.rmax, 2 * n - 1))
        overflow_levels = [part.kmax + 1] if overflow > 0 else []
    total = float(np.sum(per_level)) + (overflow if isinstance(mu, DiscreteMeasure) else 0.0)
    prof = tuple((center_radius(k), float(v)) for k, v in enumerate(per_level))
    extras = {"p": p, "alpha": alpha, "kmax": part.kmax, "overflow": overflow,
              "overflow_levels": overflow_levels, "hypotheses": _hypotheses(n, p, alpha, space)}
    if not isinstance(mu, DiscreteMeasure):
        extras["overflow"] = {"mass_beyond_rmax": overflow}
    return CriterionReport("schatten_dyadic", total, prof, part.n_cells, extras=extras)


def _homogeneous_parts(f: Polynomial, pts: np.ndarray) -> tuple[list[int], np.ndarray]:
    by_degree: dict[int, np.ndarray] = {}
    for m, c in f.coeffs.items():
        term = c * np.prod(pts ** np.array(m), axis=1)
        by_degree[m.degree] = by_degree.get(m.degree, 0) + term
    degs = sorted(by_degree)
    return degs, np.array([by_degree[d] for d in degs])


def besov_statistic(g: Polynomial, part: DyadicPartition, p: float,
                    seed: int = 0) -> CriterionReport:
    """``sum over cells of (int_R |Rg|^2 (1-|z|)^(1-n) dV)^(p/2)``.

    ``|Rg(r eta)|^2`` is split into homogeneous parts; the cap factor of
    each cell comes from sampling the sphere and the radial factor from
    Gauss-Legendre on the shell.
    """
    if p <= 0:
        raise ConfigError(f"p must be positive, got {p}")
    if g.n != part.n:
        raise ConfigError(f"g has n={g.n}, partition has n={part.n}")
    n = part.n
    rg = radial_derivative(g)
    per_level = np.zeros(part.kmax + 1)
    if rg.is_zero:
        prof = tuple((center_radius(k), 0.0) for k in range(part.kmax + 1))
        return CriterionReport("besov_dyadic", 0.0, prof, part.n_cells, extras={"p": p})
    x, wx = gauss_legendre()
    eta = _sphere_samples(n, seed)
    degs, parts = _homogeneous_parts(rg, eta)
    exact_pts, exact_w = sphere_rule(n, rg.degree)
    _, exact_parts = _homogeneous_parts(rg, exact_pts)
    for level in range(part.kmax + 1):
        lo, hi = shell_bounds(level)
        r = lo + (hi - lo) * x
        rad = np.array([[float(np.sum((hi - lo) * wx * 2 * n * r ** (2 * n - 1 + da + db)
                                      * (1 - r) ** (1 - n)))
                         for db in degs] for da in degs])
        if part.counts[level] == 1:
            gram = ((exact_parts * exact_w) @ exact_parts.conj().T)[None]
        else:
            j = _cell_labels(part, level, seed)
            cells = part.counts[level]
            gram = np.zeros((cells, len(degs), len(degs)), dtype=complex)
            for a in range(len(degs)):
                for b in range(len(degs)):
                    prod = parts[a] * parts[b].conj() / len(eta)
                    gram[:, a, b] = (np.bincount(j, prod.real, cells)
                                     + 1j * np.bincount(j, prod.imag, cells))
        energy = np.maximum(np.real(np.einsum("cab,ab->c", gram, rad)), 0.0)
        per_level[level] = float(np.sum(energy ** (p / 2)))
    prof = tuple((center_radius(k), float(v)) for k, v in enumerate(per_level))
    return CriterionReport("besov_dyadic", float(np.sum(per_level)), prof, part.n_cells,
                           extras={"p": p, "kmax": part.kmax,
                                   "last_level_share": float(per_level[-1] / max(np.sum(per_level), 1e-300))})


def _angular_power_mean(rg: Polynomial, p: float, order: int) -> callable:
    pts, wts = sphere_rule(rg.n, order)
    degs, parts = _homogeneous_parts(rg, pts)
    degs = np.array(degs)

    def mean(r: np.ndarray) -> np.ndarray:
        r = np.atleast_1d(r)
        vals = (r[:, None] ** degs[None, :]) @ parts
        return (np.abs(vals) ** p) @ wts

    return mean


def _singular_tail(f, width: float, gamma: float, order: int = 40) -> float:
    """``int_0^width f(u) du`` for ``f ~ u^gamma`` at 0, by Gauss-Jacobi in that power."""
    x, wx = roots_jacobi(order, 0.0, gamma)
    u = 0.5 * width * (1.0 + x)
    smooth = f(u) / u**gamma
    return float((0.5 * width) ** (gamma + 1) * np.sum(wx * smooth))


def besov_integral(g: Polynomial, p: float, rmax: float = 1.0,
                   cutoffs=None) -> CriterionReport:
    """``int_{|z| < rmax} |Rg|^p (1 - |z|^2)^(p - n - 1) dV`` and its growth in ``rmax``.

    The profile lists the integral at cutoffs ``1 - 2^-j``.  ``extras["slope"]``
    is the least-squares slope of the integral against ``log(1/(1 - r))``
    over the last half of the cutoffs, a divergence indicator; when it is
    not small relative to the value the headline is reported as ``inf``.

    For ``p`` not an even integer ``|Rg|^p`` is not a polynomial on the
    sphere, and its average comes from a fixed product rule accurate to
    about ``1e-7`` relative for low-degree symbols.
    """
    if p <= 0:
        raise ConfigError(f"p must be positive, got {p}")
    if not 0 < rmax <= 1:
        raise ConfigError(f"rmax must lie in (0, 1], got {rmax}")
    n = g.n
    rg = radial_derivative(g)
    if rg.is_zero:
        return CriterionReport("besov_integral", 0.0, (), 0,
                               extras={"p": p, "slope": 0.0, "converged": True})
    order = max(rg.degree, 8) * (4 if p % 2 else 1)
    mean = _angular_power_mean(rg, p, order)

    def f(u):
        # integrand in u = 1 - r so that 1 - r stays exact near the boundary
        u = np.asarray(u, dtype=float)
        r = 1.0 - u
        return 2 * n * r ** (2 * n - 1) * (u * (2.0 - u)) ** (p - n - 1) * mean(r)

    def piece(lo, hi):
        return integrate_radial(f, 1.0 - hi, 1.0 - lo, 1e-11, abs_tol=1e-15).value

    if cutoffs is None:
        top = SLOPE_LEVELS if rmax == 1 else max(4, int(math.floor(-math.log2(1 - rmax))))
        cutoffs = [1 - 2.0**-j for j in range(2, top + 1)]
    cutoffs = sorted(float(c) for c in cutoffs if c < rmax)
    values, acc, prev = [], 0.0, 0.0
    for c in cutoffs:
        acc += piece(prev, c)
        values.append(acc)
        prev = c
    logs = -np.log1p(-np.array(cutoffs))
    half = max(len(cutoffs) // 2, 2)
    slope = float(np.polyfit(logs[-half:], np.array(values)[-half:], 1)[0])
    converged = slope <= CONVERGED_SLOPE * max(abs(acc), 1e-300)
    if rmax < 1:
        acc += piece(prev, rmax)
    elif converged:
        acc += _singular_tail(f, 1.0 - prev, p - n - 1)
    else:
        acc = math.inf
    return CriterionReport("besov_integral", float(acc), tuple(zip(cutoffs, values)),
                           len(cutoffs), extras={"p": p, "rmax": rmax, "slope": slope,
                                                 "converged": bool(converged)})
