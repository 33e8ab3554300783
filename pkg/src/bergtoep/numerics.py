"""Low-level numerical kernels.

Adaptive Gauss-Legendre quadrature on subintervals of [0, 1), a fixed
composite rule graded toward both endpoints of [0, 1), a cyclic Jacobi
eigensolver for complex Hermitian matrices, and Schatten power sums.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInterval, NegativeEigenvalue, NonConvergent, SizeExceeded

GL_ORDER = 15
PANEL_BUDGET = 20_000
PRESPLIT_LEVELS = 40
# narrower panels near r = 1 quantize their nodes and fake a small error estimate
MIN_PANEL_WIDTH = 2.0**-40
JACOBI_MAX_DIM = 4096
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
NEGATIVE_SLACK = 1e-10


@lru_cache(maxsize=None)
def gauss_legendre(order: int = GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# adaptive quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    panels_used: int

    def __float__(self) -> float:
        return self.value


def _evaluate(f, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(float(t))) for t in x])


def _presplit(a: float, b: float) -> list[float]:
    cuts = [1.0 - 2.0**-j for j in range(1, PRESPLIT_LEVELS + 1)]
    return [a] + [c for c in cuts if a < c < b] + [b]


def integrate_radial(f, a: float = 0.0, b: float = 1.0, rel_tol: float = 1e-10,
                     abs_tol: float = 0.0) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b)`` with adaptive 15-point Gauss-Legendre panels.

    The interval is first cut at ``1 - 2**-j`` (``j <= 40``) so that mass
    piled up near ``r = 1`` is resolved before any adaptivity starts.  The
    panel with the largest error estimate is bisected until the total
    estimate drops below ``max(rel_tol * |value|, abs_tol)``.

    ``f`` should accept a numpy array; scalar callables are looped over.

    Raises
    ------
    InvalidInterval
        If ``0 <= a < b <= 1`` fails.
    NonConvergent
        If the panel budget is exhausted, or the remaining error sits on
        panels too narrow to bisect.
    """
    a, b = float(a), float(b)
    if not (0.0 <= a < b <= 1.0):
        raise InvalidInterval(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    if not (1e-14 < rel_tol < 1e-2):
        raise InvalidInterval(f"rel_tol must lie in (1e-14, 1e-2), got {rel_tol}")
    x, w = gauss_legendre()

    def panel(lo: float, hi: float) -> float:
        h = hi - lo
        return h * math.fsum(w * _evaluate(f, lo + h * x))

    def refined(lo: float, hi: float):
        mid = 0.5 * (lo + hi)
        whole = panel(lo, hi)
        left, right = panel(lo, mid), panel(mid, hi)
        return left + right, abs(whole - (left + right))

    heap: list[tuple[float, float, float, float]] = []
    settled: list[tuple[float, float]] = []
    edges = _presplit(a, b)
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = refined(lo, hi)
        heapq.heappush(heap, (-err, lo, hi, val))
    panels = len(heap)

    def totals():
        vals = [item[3] for item in heap] + [v for v, _ in settled]
        errs = [-item[0] for item in heap] + [e for _, e in settled]
        return math.fsum(vals), math.fsum(errs)

    value, error = totals()
    while error > max(rel_tol * abs(value), abs_tol):
        if not heap:
            raise NonConvergent(
                f"error {error:.3e} remains on panels narrower than {MIN_PANEL_WIDTH:.1e}")
        neg_err, lo, hi, val = heapq.heappop(heap)
        if hi - lo < MIN_PANEL_WIDTH:
            settled.append((val, -neg_err))
            stuck = math.fsum(e for _, e in settled)
            if stuck > max(rel_tol * abs(value), abs_tol):
                raise NonConvergent(
                    f"error {stuck:.3e} remains on panels narrower than {MIN_PANEL_WIDTH:.1e}")
            continue
        if panels + 1 > PANEL_BUDGET:
            raise NonConvergent(f"panel budget {PANEL_BUDGET} exhausted; error {error:.3e}")
        mid = 0.5 * (lo + hi)
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            v, e = refined(sub_lo, sub_hi)
            heapq.heappush(heap, (-e, sub_lo, sub_hi, v))
        panels += 1
        value, error = totals()
    return QuadratureResult(value, error, panels)


# ---------------------------------------------------------------------------
# graded composite rule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradedRule:
    """A fixed composite Gauss-Legendre rule on [0, 1) graded toward both ends.

    Breakpoints are ``2**(-j/2)`` toward 0 and ``1 - 2**(-j/4)`` toward 1.
    The rule stops at ``u_min = 1 - r_end``; callers add the tail
    ``[r_end, 1)`` themselves when it matters.
    Nodes carry both ``r`` and ``u = 1 - r``; near 1 the ``u`` values are
    exact while ``r`` is rounded, so integrands that depend on ``1 - r``
    should be evaluated from ``u``.

    Attributes
    ----------
    r, u, weights : ndarray
        Node positions and weights, sorted by increasing ``r``.
    panel : ndarray of int
        Panel index of each node.
    breaks_r, breaks_u : ndarray
        Panel endpoints, ``len(breaks_r) == n_panels + 1``.
    """

    r: np.ndarray
    u: np.ndarray
    weights: np.ndarray
    panel: np.ndarray
    breaks_r: np.ndarray
    breaks_u: np.ndarray

    @property
    def n_panels(self) -> int:
        return len(self.breaks_r) - 1

    @property
    def r_end(self) -> float:
        return float(self.breaks_r[-1])

    @property
    def u_min(self) -> float:
        return float(self.breaks_u[-1])

    def locate_panel(self, t: float) -> int:
        """Index of the panel containing ``t`` (right-closed at 1)."""
        k = int(np.searchsorted(self.breaks_r, t, side="right")) - 1
        return min(max(k, 0), self.n_panels - 1)

    def partial_nodes(self, t, t_u=None):
        """Fresh GL nodes on ``[t, end of t's panel]`` for every entry of ``t``.

        Returns ``(r, u, w, k)``: arrays of shape ``t.shape + (15,)`` and the
        panel index per entry.  ``t_u`` is ``1 - t`` supplied exactly when
        available.  Entries beyond the rule's end get zero weights and
        ``k = n_panels``.
        """
        t = np.asarray(t, dtype=float)
        t_u = 1.0 - t if t_u is None else np.asarray(t_u, dtype=float)
        t, t_u = np.broadcast_arrays(t, t_u)
        x, w = gauss_legendre()
        inside = t_u > self.u_min
        k = np.searchsorted(self.breaks_r, t, side="right") - 1
        k = np.where(inside, np.clip(k, 0, self.n_panels - 1), self.n_panels)
        kk = np.minimum(k, self.n_panels - 1)
        near_one = self.breaks_r[kk] >= 0.5
        end_u = np.where(inside, self.breaks_u[kk + 1], t_u)
        end_r = np.where(inside, self.breaks_r[kk + 1], t)
        lo_u, hi_u = t_u[..., None], end_u[..., None]
        u_hi_side = lo_u + (hi_u - lo_u) * x
        r_lo_side = t[..., None] + (end_r - t)[..., None] * x
        r = np.where(near_one[..., None], 1.0 - u_hi_side, r_lo_side)
        u = np.where(near_one[..., None], u_hi_side, 1.0 - r_lo_side)
        width = np.where(near_one, t_u - end_u, end_r - t)
        weights = np.where(inside, width, 0.0)[..., None] * w
        return r, u, weights, k


@lru_cache(maxsize=None)
def graded_rule(levels_zero: int = 80, levels_one: int = 240) -> GradedRule:
    """Build the composite rule.

    ``levels_zero`` counts half-octave cuts toward 0, ``levels_one`` quarter-
    octave cuts toward 1 (240 reaches ``u = 2**-60``).
    """
    x, w = gauss_legendre()
    low = [0.0] + [2.0 ** (-j / 2) for j in range(levels_zero, 1, -1)]
    high_u = [2.0 ** (-j / 4) for j in range(5, levels_one + 1)]
    breaks_r = np.array(low + [1.0 - v for v in high_u])
    breaks_u = np.array([1.0 - v for v in low] + high_u)
    rs, us, ws, ps = [], [], [], []
    for k in range(len(breaks_r) - 1):
        if breaks_r[k] >= 0.5:
            u_hi, u_lo = breaks_u[k], breaks_u[k + 1]
            u = u_hi - (u_hi - u_lo) * x
            rs.append(1.0 - u)
            us.append(u)
            ws.append((u_hi - u_lo) * w)
        else:
            lo, hi = breaks_r[k], breaks_r[k + 1]
            r = lo + (hi - lo) * x
            rs.append(r)
            us.append(1.0 - r)
            ws.append((hi - lo) * w)
        ps.append(np.full(GL_ORDER, k))
    order = np.argsort(np.concatenate(rs), kind="stable")
    return GradedRule(
        r=np.concatenate(rs)[order],
        u=np.concatenate(us)[order],
        weights=np.concatenate(ws)[order],
        panel=np.concatenate(ps)[order],
        breaks_r=breaks_r,
        breaks_u=breaks_u,
    )


def log_r(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``log r`` evaluated from whichever of ``r`` or ``u = 1 - r`` is exact."""
    r, u = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(u, dtype=float))
    near_one = u < 0.5
    with np.errstate(divide="ignore"):
        return np.where(near_one, np.log1p(-np.where(near_one, u, 0.0)),
                        np.log(np.where(near_one, 1.0, r)))


# ---------------------------------------------------------------------------
# Hermitian matrices and spectra
# ---------------------------------------------------------------------------


class HermitianMatrix:
    """A dense complex Hermitian matrix.

    The constructor rejects inputs whose asymmetry exceeds ``1e-13`` of the
    largest entry and stores the exact symmetrization ``(A + A^H) / 2``.
    Use :meth:`symmetrize` for assembled matrices whose rounding asymmetry
    is expected to be larger.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, *, check: bool = True):
        a = np.array(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
        if check:
            scale = np.max(np.abs(a)) if a.size else 0.0
            if np.max(np.abs(a - a.conj().T)) > 1e-13 * max(scale, 1e-300):
                raise ValueError("matrix is not Hermitian within 1e-13 relative")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._entries = a

    @classmethod
    def symmetrize(cls, entries) -> "HermitianMatrix":
        return cls(entries, check=False)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._entries if dtype is None else self._entries.astype(dtype)

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted in descending order."""

    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(sorted((float(v) for v in self.eigenvalues), reverse=True))
        object.__setattr__(self, "eigenvalues", vals)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(self.eigenvalues)

    def __getitem__(self, k):
        return self.eigenvalues[k]

    @property
    def max(self) -> float:
        return self.eigenvalues[0]

    def as_array(self) -> np.ndarray:
        return np.array(self.eigenvalues)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def hermitian_eigenvalues(h: HermitianMatrix | np.ndarray) -> Spectrum:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.

    Sweeps visit the strict upper triangle in row-major order and stop once
    the off-diagonal Frobenius norm falls below ``1e-12 * ||H||_F``.
    """
    if not isinstance(h, HermitianMatrix):
        h = HermitianMatrix(h)
    n = h.dim
    if n > JACOBI_MAX_DIM:
        raise SizeExceeded(f"dimension {n} exceeds the Jacobi cap {JACOBI_MAX_DIM}")
    a = np.array(h.entries, dtype=complex)
    target = JACOBI_TOL * float(np.linalg.norm(a))
    if n == 1 or target == 0.0:
        return Spectrum(tuple(np.real(np.diag(a))))
    for _ in range(JACOBI_MAX_SWEEPS):
        if _offdiag_norm(a) < target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                app, aqq = a[p, p].real, a[q, q].real
                if mag < 1e-18 * (abs(app) + abs(aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q] * phase.conjugate()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :] * phase
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
    else:
        raise NonConvergent(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return Spectrum(tuple(np.real(np.diag(a))))


def schatten_power_sum(spectrum: Spectrum, p: float) -> float:
    """Return ``sum(lambda_k ** p)`` over a nonnegative spectrum.

    Eigenvalues above ``-1e-10 * max|lambda|`` are clamped to zero first.
    """
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    vals = np.asarray(spectrum.eigenvalues, dtype=float)
    if vals.size == 0:
        return 0.0
    scale = float(np.max(np.abs(vals)))
    if np.any(vals < -NEGATIVE_SLACK * scale):
        raise NegativeEigenvalue(
            f"eigenvalue {vals.min():.3e} below -1e-10 * {scale:.3e}")
    vals = np.sort(np.clip(vals, 0.0, None))[::-1]
    return math.fsum(vals**p)
