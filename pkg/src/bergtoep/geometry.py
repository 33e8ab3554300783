"""Metrics and regions of the unit ball of C^n.

Points are complex numpy arrays whose last axis has length ``n``.  The
nonisotropic distance on the sphere is ``d(xi, tau) = |1 - <xi, tau>|^(1/2)``
and ``<z, w> = sum z_k conj(w_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .errors import CoverageFailure, DomainError, LevelOverflow, NotUnit
from .numerics import gauss_legendre
from .weights import WeightTransforms

UNIT_TOL = 1e-12
COVERAGE_SAMPLES = 100_000
REPAIR_ROUNDS = 12
REPAIR_FACTOR = 10
GOLDEN = (1 + math.sqrt(5)) / 2
SPIRAL_COVER_CONST = 0.8
SPIRAL_COVER_MARGIN = 0.97


def inner(z, w) -> np.ndarray:
    """``<z, w>`` along the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def as_point(z, n: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a complex vector inside the open ball."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1 or (n is not None and z.size != n):
        raise DomainError(f"expected a point of C^{n or 'n'}, got shape {z.shape}")
    if np.linalg.norm(z) >= 1:
        raise DomainError(f"point {z} is not inside the unit ball")
    return z


@dataclass(frozen=True)
class Point:
    coords: tuple
    norm: float = field(init=False)

    def __post_init__(self):
        z = as_point(self.coords)
        object.__setattr__(self, "coords", tuple(complex(c) for c in z))
        object.__setattr__(self, "norm", float(np.linalg.norm(z)))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype or complex)

    @property
    def n(self) -> int:
        return len(self.coords)


def _check_unit(v: np.ndarray) -> None:
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > UNIT_TOL):
        raise NotUnit("nonisotropic distance needs unit vectors")


def niso_distance(xi, tau) -> np.ndarray | float:
    """``|1 - <xi, tau>|^(1/2)`` for unit vectors."""
    xi = np.asarray(xi, dtype=complex)
    tau = np.asarray(tau, dtype=complex)
    if xi.ndim == 0:
        xi, tau = xi[None], tau[None]
    _check_unit(xi)
    _check_unit(tau)
    out = np.sqrt(np.abs(1.0 - inner(xi, tau)))
    return float(out) if np.ndim(out) == 0 else out


def _niso_unchecked(xi, tau):
    return np.sqrt(np.abs(1.0 - inner(xi, tau)))


def pseudo_hyperbolic(z, w) -> np.ndarray | float:
    """Pseudo-hyperbolic distance ``|phi_z(w)|`` via the projection formula.

    ``phi_z(w) = (z - P_z w - s_z Q_z w) / (1 - <w, z>)`` with ``P_z`` the
    orthogonal projection onto ``C z``, ``Q_z = I - P_z`` and
    ``s_z = sqrt(1 - |z|^2)``.  Broadcasts over leading axes.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.ndim == 0:
        z, w = z[None], w[None]
    z, w = np.broadcast_arrays(z, w)
    zz = np.sum(np.abs(z) ** 2, axis=-1)
    zw = inner(w, z)
    safe = np.where(zz > 0, zz, 1.0)
    proj = (zw / safe)[..., None] * z
    s = np.sqrt(1.0 - zz)[..., None]
    phi = (z - proj - s * (w - proj)) / (1.0 - zw)[..., None]
    rho = np.linalg.norm(phi, axis=-1)
    rho = np.where(zz > 0, rho, np.linalg.norm(w, axis=-1))
    rho = np.minimum(rho, np.nextafter(1.0, 0.0))
    return float(rho) if rho.ndim == 0 else rho


def bergman_metric(z, w):
    """``(1/2) log((1 + rho) / (1 - rho))``."""
    return np.arctanh(pseudo_hyperbolic(z, w))


# ---------------------------------------------------------------------------
# caps and Carleson blocks
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _angle_rule(order: int = 48):
    return gauss_legendre(order)


def cap_measure(n: int, t: float) -> float:
    """Normalized surface measure of ``Q(xi, t) = {eta : d(xi, eta) < t}``.

    For ``n >= 2`` the image of ``sigma`` under ``eta -> <eta, xi>`` has
    density ``(n-1)/pi (1 - |w|^2)^(n-2)`` on the disk; the region
    ``|1 - w| <= t^2`` is integrated in polar coordinates about ``w = 1``
    with the radial part in closed form.
    """
    delta = t * t
    if n == 1:
        return (2.0 / math.pi) * math.asin(min(delta, 2.0) / 2.0)
    if delta >= 2.0:
        return 1.0
    m = n - 2

    def radial(c, rad):
        # int_0^rad (2 rho c - rho^2)^m rho d rho
        total = 0.0
        for j in range(m + 1):
            coef = math.comb(m, j) * (2.0 * c) ** (m - j) * (-1.0) ** j
            total = total + coef * rad ** (m + j + 2) / (m + j + 2)
        return total

    x, w = _angle_rule()
    phi0 = math.acos(delta / 2.0)
    inner_phi = phi0 * x
    outer_phi = phi0 + (0.5 * math.pi - phi0) * x
    part_in = phi0 * np.sum(w * radial(np.cos(inner_phi), delta))
    c_out = np.cos(outer_phi)
    part_out = (0.5 * math.pi - phi0) * np.sum(w * radial(c_out, 2.0 * c_out))
    return float(2.0 * (n - 1) / math.pi * (part_in + part_out))


def carleson_block_measure(w: WeightTransforms, a) -> float:
    """``w(S_a) = sigma(Q_a) * 2n int_{|a|}^1 r^(2n-1) w(r) dr``; ``a = 0`` gives ``w(B)``."""
    a = as_point(a, w.n)
    ra = float(np.linalg.norm(a))
    if ra == 0.0:
        return w.ball_mass()
    return cap_measure(w.n, math.sqrt(1.0 - ra)) * 2 * w.n * w.power_tail(ra, 2 * w.n - 1)


def block_measure_radial(w: WeightTransforms, radius) -> np.ndarray:
    """Vectorized ``w(S_a)`` as a function of ``|a|`` (rotation invariant)."""
    radius = np.atleast_1d(np.asarray(radius, dtype=float))
    out = np.empty_like(radius)
    for i, ra in enumerate(radius):
        out[i] = w.ball_mass() if ra == 0 else (
            cap_measure(w.n, math.sqrt(1.0 - ra)) * 2 * w.n * w.power_tail(ra, 2 * w.n - 1))
    return out


def unitary_frame(e: np.ndarray) -> np.ndarray:
    """A unitary matrix whose first column is the unit vector ``e``."""
    n = e.size
    q, _ = np.linalg.qr(np.column_stack([e, np.eye(n, dtype=complex)]))
    q = q[:, :n].copy()
    # QR fixes the first column only up to a phase
    q[:, 0] = e
    return q


def sample_cap(n: int, xi, t: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of the cap ``{eta : d(xi, eta) < t}``.

    For ``n = 1`` the cap is the arc ``|theta| < 2 asin(t^2 / 2)``.  For
    ``n >= 2`` the coordinate ``w = <eta, xi>`` is drawn from its density
    on ``|1 - w| < t^2`` by rejection and the orthogonal part uniformly.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if xi.shape != (n,):
        raise DomainError(f"expected a direction in C^{n}, got shape {xi.shape}")
    _check_unit(xi)
    delta = min(t * t, 2.0)
    if n == 1:
        half = 2.0 * math.asin(delta / 2.0)
        return (xi[0] * np.exp(1j * rng.uniform(-half, half, count)))[:, None]
    out = np.empty((0,), dtype=complex)
    while out.size < count:
        need = 2 * (count - out.size) + 64
        cand = 1.0 - delta * np.sqrt(rng.random(need)) * np.exp(2j * math.pi * rng.random(need))
        mod2 = np.abs(cand) ** 2
        keep = mod2 < 1
        if n > 2:
            keep &= rng.random(need) < (1 - mod2) ** (n - 2)
        out = np.concatenate([out, cand[keep]])
    w = out[:count]
    frame = unitary_frame(xi)
    g = rng.standard_normal((count, n - 1)) + 1j * rng.standard_normal((count, n - 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rest = np.sqrt(np.maximum(1 - np.abs(w) ** 2, 0.0))[:, None] * g
    return np.column_stack([w, rest]) @ frame.T


def sample_block(n: int, a, count: int, rng: np.random.Generator, rmax: float = 1.0) -> np.ndarray:
    """Samples of the Carleson block ``S_a`` cut at ``|z| < rmax``.

    The radius is uniform on ``(|a|, rmax)`` and the direction uniform on
    the cap; the points are spread over the block, not volume-uniform.
    """
    a = as_point(a, n)
    ra = float(np.linalg.norm(a))
    if not 0 < ra < rmax:
        raise DomainError(f"need 0 < |a| < rmax, got |a|={ra}, rmax={rmax}")
    eta = sample_cap(n, a / ra, math.sqrt(1.0 - ra), count, rng)
    return eta * rng.uniform(ra, rmax, (count, 1))


# ---------------------------------------------------------------------------
# pseudo-hyperbolic balls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PHBall:
    """The ellipsoid ``{w : rho(z, w) < r}``.

    Its center is ``c = (1 - r^2) z / (1 - r^2 |z|^2)``; the semi-axis along
    ``z`` is ``r t`` and the others are ``r sqrt(t)``, where
    ``t = (1 - |z|^2) / (1 - r^2 |z|^2)``.
    """

    z: np.ndarray
    r: float

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))
        if not 0 < self.r < 1:
            raise DomainError(f"pseudo-hyperbolic radius must lie in (0, 1), got {self.r}")

    @classmethod
    def bergman(cls, z, radius: float) -> "PHBall":
        """The Bergman-metric ball ``D(z, radius)``."""
        return cls(z, math.tanh(radius))

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def t(self) -> float:
        zz = float(np.sum(np.abs(self.z) ** 2))
        return (1 - zz) / (1 - self.r**2 * zz)

    @property
    def center(self) -> np.ndarray:
        zz = float(np.sum(np.abs(self.z) ** 2))
        return (1 - self.r**2) * self.z / (1 - self.r**2 * zz)

    @property
    def volume(self) -> float:
        """Normalized volume ``r^(2n) t^(n+1)``."""
        return self.r ** (2 * self.n) * self.t ** (self.n + 1)

    def contains(self, w) -> np.ndarray:
        return pseudo_hyperbolic(self.z, w) < self.r

    def frame(self) -> np.ndarray:
        """A unitary matrix whose first column is ``z / |z|``."""
        norm = np.linalg.norm(self.z)
        if norm == 0:
            return np.eye(self.n, dtype=complex)
        return unitary_frame(self.z / norm)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples from the ellipsoid."""
        n = self.n
        g = rng.standard_normal((count, 2 * n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        g *= rng.random((count, 1)) ** (1.0 / (2 * n))
        v = g[:, :n] + 1j * g[:, n:]
        scale = np.full(n, self.r * math.sqrt(self.t))
        scale[0] = self.r * self.t
        return self.center + (v * scale) @ self.frame().T


def ph_ball_weight_measure(w: WeightTransforms, ball: PHBall, samples: int = 100_000,
                           seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of ``int_ball w(|x|) dV(x)`` and its standard error."""
    if samples < 10_000:
        raise DomainError(f"need at least 10^4 samples, got {samples}")
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = ball.sample(samples, rng)
    radius = np.linalg.norm(pts, axis=1)
    inside = radius < 1
    vals = np.zeros(samples)
    vals[inside] = w.weight.density(radius[inside], 1.0 - radius[inside])
    vol = ball.volume
    return vol * float(vals.mean()), vol * float(vals.std(ddof=1)) / math.sqrt(samples)


# ---------------------------------------------------------------------------
# cap covers
# ---------------------------------------------------------------------------


def _embed(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag], axis=-1)


def _flatten(lists) -> tuple[np.ndarray, np.ndarray]:
    lens = np.fromiter((len(x) for x in lists), dtype=np.int64, count=len(lists))
    owners = np.repeat(np.arange(len(lists)), lens)
    flat = np.fromiter((j for x in lists for j in x), dtype=np.int64, count=int(lens.sum()))
    return owners, flat


class _Stream:
    """Deterministic low-discrepancy directions on the unit sphere of C^n."""

    def __init__(self, n: int, seed: int):
        self.n = n
        self.pos = 0
        if n >= 2:
            dim = 3 if n == 2 else 2 * n
            self._sobol = qmc.Sobol(dim, scramble=n > 2, seed=seed)
            self._sobol.fast_forward(1)

    def take(self, count: int) -> np.ndarray:
        start, self.pos = self.pos, self.pos + count
        if self.n == 1:
            return np.exp(2j * math.pi * _van_der_corput(np.arange(start, start + count)))[:, None]
        pts = self._sobol.random(count)
        if self.n == 2:
            mod2 = pts[:, 0]
            return np.column_stack([np.sqrt(1 - mod2) * np.exp(2j * math.pi * pts[:, 1]),
                                    np.sqrt(mod2) * np.exp(2j * math.pi * pts[:, 2])])
        from scipy.special import ndtri

        g = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
        v = g[:, :self.n] + 1j * g[:, self.n:]
        return v / np.linalg.norm(v, axis=1, keepdims=True)


def _van_der_corput(idx: np.ndarray) -> np.ndarray:
    idx = idx.astype(np.int64).copy()
    out = np.zeros(idx.shape)
    denom = 1.0
    while np.any(idx):
        denom *= 2.0
        out += (idx & 1) / denom
        idx >>= 1
    return out


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    phi = 2.0 * math.pi * i * (1.0 - 1.0 / GOLDEN)
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _spiral_fiber_centers(r: float, seed: int) -> np.ndarray | None:
    """A ``2r``-separated, ``2r``-covering set on the sphere of C^2, or None.

    Directions are lifted from a Fibonacci spiral on the base 2-sphere of
    the Hopf fibration, and each fiber carries ``m`` equally spaced phases.
    With ``<eta, xi> = cos(g) e^(i psi)`` and ``g`` half the base angle:

    * phases ``2 pi / m`` apart are separated iff ``2 sin(pi / m) > 4 r^2``;
    * fibers are separated whenever ``1 - cos(g) > 4 r^2``;
    * a point is covered when its base distance ``g`` to some spiral point
      satisfies ``|1 - cos(g) e^(i pi/m)| <= 4 r^2``.
    """
    q = 4.0 * r * r
    if 2.0 * r * r >= 1.0:
        return None
    m = int(math.floor(2.0 * math.pi / (2.0 * math.asin(2.0 * r * r) * 1.01)))
    half = math.pi / m
    disc = math.cos(half) ** 2 - 1.0 + q * q
    if m < 2 or disc < 0:
        return None
    cover_angle = 2.0 * math.acos(min(math.cos(half) - math.sqrt(disc), 1.0))
    sep_angle = 2.0 * math.acos(1.0 - q) if q < 2 else math.inf
    probe = np.random.Generator(np.random.PCG64([seed, 2])).standard_normal((200_000, 3))
    probe /= np.linalg.norm(probe, axis=1, keepdims=True)
    count = max(2, int(4.0 * math.pi * SPIRAL_COVER_CONST**2 / cover_angle**2) - 2)
    for _ in range(400):
        base = _fibonacci_sphere(count)
        tree = cKDTree(base)
        gap, _ = tree.query(base, k=2)
        sep = 2.0 * np.arcsin(min(gap[:, 1].min() / 2.0, 1.0))
        if sep <= sep_angle * (1 + 1e-9):
            return None
        reach, _ = tree.query(probe)
        cover = 2.0 * np.arcsin(min(reach.max() / 2.0, 1.0))
        if cover < SPIRAL_COVER_MARGIN * cover_angle:
            break
        count += max(1, count // 100)
    else:
        return None
    theta = np.arccos(np.clip(base[:, 2], -1.0, 1.0))
    phi = np.arctan2(base[:, 1], base[:, 0])
    lifts = np.column_stack([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)])
    phases = np.exp(2j * math.pi * np.arange(m) / m)
    return (phases[None, :, None] * lifts[:, None, :]).reshape(-1, 2)


def random_sphere(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


class _CenterIndex:
    """Neighbour search for ``d(eta, xi) <= rad`` against a fixed set of centers."""

    def __init__(self, centers: np.ndarray):
        self.centers = centers
        self.tree = cKDTree(_embed(centers)) if len(centers) else None

    def within(self, pts: np.ndarray, rad: float) -> tuple[np.ndarray, np.ndarray]:
        """All pairs ``(point index, center index)`` with ``d <= rad``."""
        if self.tree is None or len(pts) == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        euclid = math.sqrt(2.0) * rad * (1 + 1e-12)
        owners, flat = _flatten(self.tree.query_ball_point(_embed(pts), euclid))
        keep = _niso_unchecked(pts[owners], self.centers[flat]) <= rad
        return owners[keep], flat[keep]

    def any_within(self, pts: np.ndarray, rad: float, k: int = 16) -> np.ndarray:
        """Boolean mask of points having some center with ``d <= rad``."""
        hit = np.zeros(len(pts), dtype=bool)
        if self.tree is None or len(pts) == 0:
            return hit
        bound = math.sqrt(2.0) * rad * (1 + 1e-12)
        emb = _embed(pts)
        dist, nn = self.tree.query(emb, k=1, distance_upper_bound=bound)
        found = np.isfinite(dist)
        hit[found] = _niso_unchecked(pts[found], self.centers[nn[found]]) <= rad
        todo = np.flatnonzero(found & ~hit)
        k = min(k, len(self.centers))
        if todo.size and k > 1:
            dist, nn = self.tree.query(emb[todo], k=k, distance_upper_bound=bound)
            live = np.isfinite(dist)
            safe = np.where(live, nn, 0)
            for col in range(1, k):
                ok = live[:, col] & (_niso_unchecked(pts[todo], self.centers[safe[:, col]]) <= rad)
                hit[todo[ok]] = True
            todo = todo[~hit[todo] & live[:, -1]]
        if todo.size:
            owners, _ = self.within(pts[todo], rad)
            hit[todo[np.unique(owners)]] = True
        return hit


@dataclass(frozen=True)
class CapCover:
    """A maximal ``2r``-separated set of centers on the sphere.

    ``locate`` assigns each direction to the unique center within ``d <= r``
    when there is one, and otherwise to the first center within ``2r``.
    """

    n: int
    r: float
    centers: np.ndarray = field(repr=False)
    candidates_used: int = 0

    def __post_init__(self):
        object.__setattr__(self, "_index", _CenterIndex(self.centers))

    @property
    def N(self) -> int:
        return len(self.centers)

    def locate(self, eta) -> np.ndarray:
        """0-based cap-cell index of each unit vector in ``eta``; -1 if uncovered."""
        eta = np.asarray(eta, dtype=complex).reshape(-1, self.n)
        out = np.full(len(eta), -1, dtype=np.int64)
        if self.N == 1:
            d = _niso_unchecked(eta, self.centers[0])
            out[d <= 2 * self.r] = 0
            return out
        idx: _CenterIndex = self._index
        _, nn = idx.tree.query(_embed(eta), k=1)
        d = _niso_unchecked(eta, self.centers[nn])
        near = d <= self.r
        out[near] = nn[near]
        rest = np.flatnonzero(~near)
        if rest.size:
            owners, flat = idx.within(eta[rest], 2 * self.r)
            close = _niso_unchecked(eta[rest][owners], self.centers[flat]) <= self.r
            best = np.full(rest.size, np.iinfo(np.int64).max)
            np.minimum.at(best, owners, flat + np.where(close, -len(self.centers), 0))
            found = best < np.iinfo(np.int64).max
            best = np.where(best < 0, best + len(self.centers), best)
            out[rest[found]] = best[found]
        return out

    def uncovered(self, eta) -> np.ndarray:
        return ~self._index.any_within(np.asarray(eta, dtype=complex), 2 * self.r)


def _greedy_add(centers: list, cand: np.ndarray, rad: float) -> None:
    """Append, in order, each candidate farther than ``rad`` from all centers so far."""
    existing = np.array(centers) if centers else np.empty((0, cand.shape[1]), complex)
    clash = _CenterIndex(existing).any_within(cand, rad)
    surv = cand[~clash]
    if len(surv) == 0:
        return
    pairs_a, pairs_b = _CenterIndex(surv).within(surv, rad)
    earlier = pairs_b < pairs_a
    blockers: dict[int, list[int]] = {}
    for a, b in zip(pairs_a[earlier].tolist(), pairs_b[earlier].tolist()):
        blockers.setdefault(a, []).append(b)
    accepted = np.zeros(len(surv), dtype=bool)
    for i in range(len(surv)):
        if not any(accepted[j] for j in blockers.get(i, ())):
            accepted[i] = True
    centers.extend(surv[accepted])


def cap_cover(n: int, r: float, candidate_budget: int | None = None, seed: int = 0,
              check_samples: int = COVERAGE_SAMPLES) -> CapCover:
    """Greedy maximal ``2r``-separated set of directions.

    The candidate stream is a van der Corput sequence of angles for
    ``n = 1``.  For ``n = 2`` it starts with a spiral-times-fiber set (see
    ``_spiral_fiber_centers``) and continues with a Sobol sequence mapped to
    the sphere, which is also the whole stream for larger ``n``.  After
    the budget is spent, ``check_samples`` seeded random directions are
    tested for ``2r``-coverage.  Before that check, rounds of larger random
    probes feed any uncovered direction back to the greedy step as an
    extra candidate, until a round finds none or ``REPAIR_ROUNDS`` is hit.

    Raises
    ------
    CoverageFailure
        If the final probe finds a direction farther than ``2r`` from
        every center.
    """
    if not r > 0:
        raise DomainError(f"cap radius must be positive, got {r}")
    minimum = int(math.ceil(100 * r ** (-2 * n)))
    budget = max(candidate_budget or minimum, 1)
    stream = _Stream(n, seed)
    centers: list = []
    if 2 * r >= math.sqrt(2) * (1 - 1e-12):
        centers.append(stream.take(1)[0])
        return CapCover(n, r, np.array(centers), 1)
    if n == 2:
        spiral = _spiral_fiber_centers(r, seed)
        if spiral is not None:
            _greedy_add(centers, spiral, 2 * r)
    done, batch = 0, 1024
    while done < budget:
        take = min(batch, budget - done)
        _greedy_add(centers, stream.take(take), 2 * r)
        done += take
        batch *= 2
    if not check_samples:
        return CapCover(n, r, np.array(centers), budget)
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(REPAIR_ROUNDS):
        cover = CapCover(n, r, np.array(centers), budget)
        probe = random_sphere(n, REPAIR_FACTOR * check_samples, rng)
        bad = cover.uncovered(probe)
        if not np.any(bad):
            break
        _greedy_add(centers, probe[bad], 2 * r)
    cover = CapCover(n, r, np.array(centers), budget)
    check_rng = np.random.Generator(np.random.PCG64([seed, 1]))
    bad = cover.uncovered(random_sphere(n, check_samples, check_rng))
    if np.any(bad):
        raise CoverageFailure(
            f"{int(np.count_nonzero(bad))} of {check_samples} probe directions lie farther "
            f"than 2r={2 * r:.4g} from every center")
    return cover


# ---------------------------------------------------------------------------
# dyadic partition
# ---------------------------------------------------------------------------


def level_radius(k: int) -> float:
    """Cap radius ``2^(-k/2)`` used at level ``k``."""
    return 2.0 ** (-k / 2)


def center_radius(k: int) -> float:
    """``|c_{k,j}| = 1 - 3 * 2^-(k+2)``."""
    return 1.0 - 3.0 * 2.0 ** -(k + 2)


def shell_bounds(k: int) -> tuple[float, float]:
    if k == 0:
        return 0.0, 0.5
    return 1.0 - 2.0**-k, 1.0 - 2.0 ** -(k + 1)


@dataclass(frozen=True)
class DyadicPartition:
    """Cells ``R_{k,j}``: a dyadic radial shell times a cap cell of the sphere.

    Level 0 is the single cell ``|z| < 1/2``.  Cell ids are ``(k, j)`` with
    ``j`` starting at 1.
    """

    n: int
    kmax: int
    levels: tuple = field(repr=False)

    @property
    def counts(self) -> list[int]:
        return [lvl.N for lvl in self.levels]

    @property
    def n_cells(self) -> int:
        return sum(self.counts)

    @property
    def rmax(self) -> float:
        """Radius beyond which ``locate`` overflows."""
        return 1.0 - 2.0 ** -(self.kmax + 1)

    def cells(self):
        """Iterate ``(k, j, center, cap_center)``."""
        for k, lvl in enumerate(self.levels):
            for j, xi in enumerate(lvl.centers, start=1):
                yield k, j, center_radius(k) * xi, xi

    def center(self, k: int, j: int) -> np.ndarray:
        return center_radius(k) * self.levels[k].centers[j - 1]

    def level_of(self, radius) -> np.ndarray:
        """``floor(-log2(1 - |z|))`` with 0 for ``|z| < 1/2``."""
        radius = np.asarray(radius, dtype=float)
        with np.errstate(divide="ignore"):
            k = np.floor(-np.log2(1.0 - radius)).astype(np.int64)
        # guard against rounding at exact shell boundaries
        lo = 1.0 - 2.0 ** (-k.astype(float))
        k = np.where(radius < lo, k - 1, k)
        hi = 1.0 - 2.0 ** (-(k + 1).astype(float))
        k = np.where(radius >= hi, k + 1, k)
        return np.maximum(k, 0)

    def locate(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Cell ids ``(k, j)`` for each point in ``z`` (shape ``(m, n)`` or ``(n,)``)."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.n)
        radius = np.linalg.norm(z, axis=1)
        if np.any(radius >= self.rmax):
            raise LevelOverflow(f"|z| >= {self.rmax} exceeds level kmax={self.kmax}")
        k = self.level_of(radius)
        j = np.zeros(len(z), dtype=np.int64)
        for level in np.unique(k):
            sel = np.flatnonzero(k == level)
            if level == 0:
                j[sel] = 1
                continue
            eta = z[sel] / radius[sel, None]
            j[sel] = self.levels[level].locate(eta) + 1
        return k, j

    def locate_one(self, z) -> tuple[int, int]:
        k, j = self.locate(np.atleast_1d(z))
        return int(k[0]), int(j[0])

    def cell_index(self) -> dict:
        """Map ``(k, j)`` to a flat position in iteration order."""
        out, pos = {}, 0
        for k, lvl in enumerate(self.levels):
            for j in range(1, lvl.N + 1):
                out[(k, j)] = pos
                pos += 1
        return out

    def flat_ids(self, k: np.ndarray, j: np.ndarray) -> np.ndarray:
        offsets = np.concatenate([[0], np.cumsum(self.counts)])
        return offsets[k] + j - 1


@lru_cache(maxsize=16)
def dyadic_partition(n: int, kmax: int, seed: int = 0,
                     check_samples: int = COVERAGE_SAMPLES) -> DyadicPartition:
    """Build the partition up to level ``kmax`` (cached per arguments)."""
    caps = {1: 20, 2: 12}
    if kmax < 0 or kmax > caps.get(n, 6):
        raise DomainError(f"kmax={kmax} outside the supported range for n={n}")
    levels = [cap_cover(n, 1.0, seed=seed, check_samples=0)]
    for k in range(1, kmax + 1):
        levels.append(cap_cover(n, level_radius(k), seed=seed, check_samples=check_samples))
    return DyadicPartition(n, kmax, tuple(levels))


def cells_meeting_ball(part: DyadicPartition, ball: PHBall, samples: int = 20_000,
                       seed: int = 0) -> int:
    """Number of partition cells hit by uniform samples of ``ball``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = ball.sample(samples, rng)
    pts = pts[np.linalg.norm(pts, axis=1) < part.rmax]
    k, j = part.locate(pts)
    return int(np.unique(part.flat_ids(k, j)).size)


# ---------------------------------------------------------------------------
# Bergman lattices
# ---------------------------------------------------------------------------


def _ball_euclid_radius(z: np.ndarray, rho: float) -> np.ndarray:
    """Radius of a Euclidean ball about ``z`` containing ``Delta(z, rho)``."""
    zz = np.sum(np.abs(z) ** 2, axis=-1)
    t = (1 - zz) / (1 - rho**2 * zz)
    shift = np.sqrt(zz) * (1 - (1 - rho**2) / (1 - rho**2 * zz))
    return shift + rho * np.sqrt(t)


def _lattice_candidates(n: int, rmax: float, seed: int) -> np.ndarray:
    kmax = max(int(math.floor(-math.log2(1 - rmax))), 0)
    stream = _Stream(n, seed)
    pts = [np.zeros((1, n), complex)]
    for k in range(0, kmax + 1):
        lo, hi = shell_bounds(k)
        hi = min(hi, rmax)
        if hi <= lo:
            continue
        count = max(4, int(4 * round(level_radius(k) ** (-2 * n))))
        for q in range(4):
            radius = lo + (hi - lo) * (q + 0.5) / 4
            pts.append(radius * stream.take(count * 4))
    return np.concatenate(pts)


def bergman_lattice(n: int, delta: float, rmax: float = 0.99, seed: int = 0,
                    check_samples: int = 20_000) -> np.ndarray:
    """Greedy ``delta/5``-separated set in the Bergman metric covering ``|z| <= rmax``.

    Raises
    ------
    CoverageFailure
        If a probe point of ``|z| <= rmax`` is at Bergman distance ``>= 5 delta``
        from every lattice point.
    """
    if not 0.05 < delta < 1:
        raise DomainError(f"delta must lie in (0.05, 1), got {delta}")
    if not 0 < rmax <= 0.999:
        raise DomainError(f"rmax must lie in (0, 0.999], got {rmax}")
    sep = math.tanh(delta / 5)
    cand = _lattice_candidates(n, rmax, seed)
    cand = cand[np.argsort(np.linalg.norm(cand, axis=1), kind="stable")]
    accepted: list[np.ndarray] = []
    tree_pts = np.empty((0, n), complex)
    tree = None
    pending: list[np.ndarray] = []
    for z in cand:
        rad = _ball_euclid_radius(z, sep)
        near = []
        if tree is not None:
            near = [tree_pts[i] for i in tree.query_ball_point(_embed(z), rad)]
        near += [p for p in pending if np.linalg.norm(p - z) <= rad]
        if near and np.any(pseudo_hyperbolic(z, np.array(near)) < sep):
            continue
        pending.append(z)
        accepted.append(z)
        if len(pending) >= 256:
            tree_pts = np.array(accepted)
            tree = cKDTree(_embed(tree_pts))
            pending = []
    lattice = np.array(accepted)
    if check_samples:
        rng = np.random.Generator(np.random.PCG64(seed))
        probe = random_sphere(n, check_samples, rng) * (rng.random((check_samples, 1)) ** (1 / (2 * n))) * rmax
        cover = math.tanh(5 * delta)
        tree = cKDTree(_embed(lattice))
        radii = _ball_euclid_radius(probe, cover)
        for z, rad in zip(probe, radii):
            idx = tree.query_ball_point(_embed(z), rad)
            if not idx or np.all(pseudo_hyperbolic(z, lattice[idx]) >= cover):
                raise CoverageFailure(f"point {z} is not within 5*delta of the lattice")
    return lattice
