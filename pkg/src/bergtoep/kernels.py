"""Reproducing kernels of ``A2`` and ``H(W_alpha)`` as truncated power series.

Both kernels are functions of ``x = <w, z>`` alone:
``K_z(w) = sum_k a_k x^k`` with positive coefficients.  Coefficients are
kept as logarithms so that thin weights, whose coefficients grow faster
than any power, do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateWeight, DomainError, TruncationFailure
from .geometry import as_point, block_measure_radial, inner, sample_block
from .numerics import integrate_radial
from .weights import WeightTransforms

RHO_MAX = 0.995
K_LIMIT = 20_000
LOOKAHEAD = 64
SAFETY = 2.0
BLOCK = 512
SCALE_CAP = 300.0


class KernelSeries:
    """Coefficient sequence of a reproducing kernel, grown on demand.

    Parameters
    ----------
    w : WeightTransforms
    space : {"A2", "H"}
    alpha : float
        Only for ``space="H"``; must be below 2.
    """

    def __init__(self, w: WeightTransforms, space: str = "A2", alpha: float = 0.0):
        if space not in ("A2", "H"):
            raise DomainError(f"unknown space {space!r}")
        if space == "H" and alpha >= 2:
            raise DomainError(f"the H space needs alpha < 2, got {alpha}")
        self.w = w
        self.n = w.n
        self.space = space
        self.alpha = float(alpha) if space == "H" else None
        self.rho_max = RHO_MAX
        self._log_a = np.empty(0)

    @property
    def label(self) -> str:
        base = f"{self.space}[{self.w.weight.label}]"
        return base if self.space == "A2" else f"{base}(alpha={self.alpha:g})"

    # -- coefficients -------------------------------------------------------

    def _block(self, k0: int, k1: int) -> np.ndarray:
        n = self.n
        k = np.arange(k0, k1)
        s = 2 * n + 2 * k - 1.0
        lg = np.array([math.lgamma(n + j) - math.lgamma(j + 1) for j in k]) - math.lgamma(n + 1)
        if self.space == "A2":
            mom = self.w.moments(s)
            const = math.log(2.0)
        else:
            mom = np.empty(k.size)
            pos = k > 0
            mom[pos] = self.w.w_alpha_moments(self.alpha, s[pos])
            const = math.log(8.0)
        if np.any(~np.isfinite(mom[k > 0])) or np.any(mom[k > 0] < 1e-300):
            raise DegenerateWeight(f"moments of {self.w.weight.label} underflow near k={k1}")
        out = np.empty(k.size)
        pos = k > 0
        extra = 2 * np.log(k[pos]) if self.space == "H" else 0.0
        out[pos] = lg[pos] - const - extra - np.log(mom[pos])
        if k0 == 0:
            if self.space == "A2":
                out[0] = -math.log(2 * n * self.w.moment(2 * n - 1))
            else:
                out[0] = -math.log(self.w.ball_mass())
        return out

    def log_coefficients(self, kmax: int) -> np.ndarray:
        """``log a_k`` for ``k = 0..kmax``."""
        if kmax > K_LIMIT + LOOKAHEAD:
            raise TruncationFailure(f"coefficient index {kmax} beyond the limit {K_LIMIT}")
        have = self._log_a.size
        if kmax >= have:
            stop = min(max(kmax + 1, 2 * have, BLOCK), K_LIMIT + LOOKAHEAD + 1)
            self._log_a = np.concatenate([self._log_a, self._block(have, stop)])
        return self._log_a[:kmax + 1]

    def coefficients(self, kmax: int) -> np.ndarray:
        return np.exp(self.log_coefficients(kmax))

    def _log_growth(self, kmax: int) -> np.ndarray:
        """``log G_K``: the largest ratio ``a_j / a_(j-1)`` for ``K < j <= K + 64``."""
        la = self.log_coefficients(kmax + LOOKAHEAD)
        ratios = np.diff(la)
        # window j = K+1..K+64 maps to ratios[K..K+63]
        return np.lib.stride_tricks.sliding_window_view(ratios, LOOKAHEAD).max(axis=1)[:kmax + 1]

    def log_tail_bounds(self, rho: float, kmax: int) -> np.ndarray:
        """``log`` of the certified bound on ``sum_(k > K) a_k rho^k`` for ``K = 0..kmax``."""
        if rho == 0:
            return np.full(kmax + 1, -np.inf)
        la = self.log_coefficients(kmax)
        lg = self._log_growth(kmax)
        lr = math.log(rho)
        log_q = lg + lr
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = np.where(log_q < 0, log_q - np.log(-np.expm1(np.minimum(log_q, -1e-300))),
                           np.inf)
        return math.log(SAFETY) + la + np.arange(kmax + 1) * lr + geo

    def tail_bound(self, k: int, rho: float) -> float:
        return float(np.exp(self.log_tail_bounds(rho, k)[k]))

    def truncation(self, rho: float, target: float) -> int:
        """Smallest ``K`` whose tail bound at ``rho`` is at most ``target``.

        Raises
        ------
        TruncationFailure
            If no ``K <= 20000`` qualifies.
        """
        if rho == 0:
            return 0
        if target <= 0:
            raise TruncationFailure("tail target must be positive")
        kmax = BLOCK - 1
        lt = math.log(target)
        while True:
            bounds = self.log_tail_bounds(rho, kmax)
            ok = np.flatnonzero(bounds <= lt)
            if ok.size:
                return int(ok[0])
            if kmax >= K_LIMIT:
                raise TruncationFailure(
                    f"{self.label}: tail at |<w,z>|={rho:.6g} does not reach {target:.3g} "
                    f"within {K_LIMIT} terms")
            kmax = min(2 * kmax + 1, K_LIMIT)

    # -- evaluation ---------------------------------------------------------

    def partial_sum(self, x, kmax: int) -> np.ndarray:
        """``sum_(k <= kmax) a_k x^k`` by Horner's rule on rescaled coefficients."""
        x = np.asarray(x, dtype=complex)
        la = self.log_coefficients(kmax)
        k = np.arange(1, kmax + 1)
        shift = max(0.0, float(np.max((la[1:] - SCALE_CAP) / k))) if kmax else 0.0
        b = np.exp(la - shift * np.arange(kmax + 1))
        y = x * math.exp(shift)
        acc = np.full(x.shape, b[kmax], dtype=complex)
        for j in range(kmax - 1, -1, -1):
            acc = acc * y + b[j]
        return acc

    def series(self, x, tol: float = 1e-12) -> tuple[np.ndarray, int, np.ndarray]:
        """Sum the series at ``x``, truncated so each tail bound is below ``tol * |sum|``.

        Returns the values, the truncation order used and the per-point
        tail bounds.
        """
        x = np.asarray(x, dtype=complex)
        rho = np.abs(x)
        if rho.size and float(rho.max()) > self.rho_max * (1 + 1e-12):
            raise DomainError(f"|<w,z>| = {float(rho.max()):.6g} exceeds {self.rho_max}")
        top = float(rho.max()) if rho.size else 0.0
        a0 = math.exp(float(self.log_coefficients(0)[0]))
        target = tol * a0
        for _ in range(4):
            kmax = self.truncation(top, target)
            vals = self.partial_sum(x, kmax)
            bounds = np.exp(self.log_tail_bounds(top, kmax)[kmax]) * np.ones(x.shape)
            need = np.abs(vals) * tol
            if np.all(bounds <= need):
                return vals, kmax, bounds
            target = float(np.min(need[need > 0])) * 0.5 if np.any(need > 0) else target * 1e-3
        raise TruncationFailure(f"{self.label}: relative tail {tol:g} not reached")

    def __call__(self, z, w, tol: float = 1e-12) -> np.ndarray | complex:
        return kernel_eval(self, z, w, tol)


@lru_cache(maxsize=32)
def bergman_kernel(w: WeightTransforms) -> KernelSeries:
    """The reproducing kernel of ``A2`` (shared per weight)."""
    return KernelSeries(w, "A2")


@lru_cache(maxsize=32)
def dirichlet_kernel(w: WeightTransforms, alpha: float) -> KernelSeries:
    """The reproducing kernel of ``H(W_alpha)`` (shared per weight and alpha)."""
    return KernelSeries(w, "H", alpha)


def kernel_eval(ks: KernelSeries, z, w, tol: float = 1e-12):
    """``K_z(w)``; ``z`` and ``w`` broadcast over leading axes."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    x = inner(w, z)
    vals, _, _ = ks.series(x, tol)
    return complex(vals) if np.ndim(vals) == 0 else vals


def kernel_sup(ks: KernelSeries, z, radius: float = RHO_MAX) -> float:
    """``max |K_z(w)|`` over ``|w| <= radius``, attained at ``w = radius z / |z|``."""
    z = as_point(z, ks.n)
    return float(ks.series(radius * float(np.linalg.norm(z)))[0].real)


# ---------------------------------------------------------------------------
# L^p norms of the Bergman kernel
# ---------------------------------------------------------------------------


def _circle_power_mean(ks: KernelSeries, radii: np.ndarray, p: float, tol: float) -> np.ndarray:
    """Mean of ``|S(rho e^(i theta))|^p`` over the circle, for each radius."""
    top = float(np.max(radii))
    if top == 0:
        return np.full(radii.shape, math.exp(p * float(ks.log_coefficients(0)[0])))
    kmax = ks.truncation(top, tol * math.exp(float(ks.log_coefficients(0)[0])))
    size = 512
    while size < max(2 * (kmax + 1), 64.0 / (1.0 - top)):
        size *= 2
    la = ks.log_coefficients(kmax)
    with np.errstate(divide="ignore"):
        logs = np.log(radii)[:, None] * np.arange(kmax + 1)
    coef = np.exp(la + logs)
    coef[radii == 0, 1:] = 0.0
    vals = np.fft.ifft(coef, n=size, axis=1) * size
    return np.mean(np.abs(vals) ** p, axis=1)


def kernel_norm(ks: KernelSeries, w: WeightTransforms, z, p: float = 2.0,
                rel_tol: float = 1e-8) -> float:
    """``||B_z||`` in ``A^p_w``.

    ``p = 2`` uses ``||B_z||^2 = B_z(z)``.  Otherwise, with ``F(u)`` the
    circle mean of ``|S|^p`` at radius ``u``,

    * ``n = 1``: ``||B_z||^p = 2 int_0^1 r w(r) F(r|z|) dr``;
    * ``n = 2``: ``||B_z||^p = 8/|z|^2 int_0^|z| u F(u) T(u/|z|) du``
      with ``T(t) = int_t^1 r w(r) dr``.
    """
    if ks.space != "A2":
        raise DomainError("kernel_norm applies to the Bergman kernel")
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    z = as_point(z, ks.n)
    rz = float(np.linalg.norm(z))
    if rz > RHO_MAX:
        raise DomainError(f"|z| = {rz} exceeds {RHO_MAX}")
    if p == 2:
        return math.sqrt(float(ks.series(rz * rz)[0].real))
    mass = w.ball_mass()
    if rz == 0:
        return mass ** (1.0 / p) / mass
    tol = min(rel_tol * 1e-2, 1e-10)
    if ks.n == 1:
        def integrand(r):
            r = np.asarray(r, dtype=float)
            return 2.0 * r * w.weight.density(r, 1.0 - r) * _circle_power_mean(ks, r * rz, p, tol)
        total = integrate_radial(integrand, 0.0, 1.0, rel_tol).value
    elif ks.n == 2:
        def integrand(u):
            u = np.asarray(u, dtype=float)
            tails = np.array([w.power_tail(t, 1.0) for t in u / rz])
            return u * _circle_power_mean(ks, u, p, tol) * tails
        total = 8.0 / rz**2 * integrate_radial(integrand, 0.0, rz, rel_tol).value
    else:
        raise DomainError(f"kernel_norm supports n in (1, 2) for p != 2, got n={ks.n}")
    return total ** (1.0 / p)


@dataclass(frozen=True)
class NormalizedKernel:
    """``b_z = B_z / ||B_z||_p`` as a callable."""

    series: KernelSeries
    z: np.ndarray
    p: float
    norm: float

    def __call__(self, w, tol: float = 1e-12):
        return kernel_eval(self.series, self.z, w, tol) / self.norm


def normalized_kernel(ks: KernelSeries, w: WeightTransforms, z, p: float = 2.0) -> NormalizedKernel:
    z = as_point(z, ks.n)
    return NormalizedKernel(ks, z, p, kernel_norm(ks, w, z, p))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def kernel_lower_bound_delta(ks: KernelSeries, w: WeightTransforms, radii=None, deltas=None,
                             c: float = 0.1, samples: int = 2000, seed: int = 0) -> dict:
    """Largest ``delta`` on a grid with ``|B_a(z)| w(S_a) >= c`` on the block over ``a_delta``.

    ``a_delta = (1 - delta (1 - |a|)) a / |a|``.  The check samples each
    block; the result is empirical and carries no proof.
    """
    radii = np.linspace(0.1, 0.99, 12) if radii is None else np.asarray(radii, dtype=float)
    deltas = np.linspace(0.95, 0.05, 19) if deltas is None else np.sort(deltas)[::-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    e1 = np.zeros(ks.n, dtype=complex)
    e1[0] = 1.0
    block = block_measure_radial(w, radii)
    worst = {}
    for delta in deltas:
        low = np.inf
        for ra, sa in zip(radii, block):
            dil = 1.0 - delta * (1.0 - ra)
            pts = sample_block(ks.n, dil * e1, samples, rng, rmax=min(RHO_MAX / ra, 1.0))
            vals = np.abs(kernel_eval(ks, ra * e1, pts, tol=1e-8))
            low = min(low, float(vals.min()) * sa)
        worst[float(delta)] = low
        if low >= c:
            return {"delta": float(delta), "c": c, "min_product": worst}
    return {"delta": None, "c": c, "min_product": worst}
