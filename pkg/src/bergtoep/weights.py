"""Radial weights, their integral transforms, and numeric class tests.

A :class:`RadialWeight` is a density on ``[0, 1)``.  Every evaluator takes
both ``r`` and ``u = 1 - r`` so that densities with boundary behaviour in
``1 - r`` stay accurate at ``u`` far below machine epsilon.

:class:`WeightTransforms` precomputes the tail integral ``hat(r)``, moments,
and the logarithmic transforms on a fixed graded rule.  Moments and the
logarithmic transforms are computed from the tail integral after an
integration by parts::

    int_0^1 r^s w(r) dr          = s int_0^1 r^(s-1) hat(r) dr
    int_t^1 s^(2n-1) log(s/t) w  = int_t^1 hat(s) s^(2n-2) ((2n-1) log(s/t) + 1) ds

which keeps the contribution of ``[1 - 2**-60, 1)`` negligible even for
weights with slowly decaying tails.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError
from .numerics import GradedRule, graded_rule, integrate_radial, log_r

R_MAX = 0.999

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _ru(r, u=None):
    r = np.asarray(r, dtype=float)
    u = 1.0 - r if u is None else np.asarray(u, dtype=float)
    return np.broadcast_arrays(r, u)


@dataclass(frozen=True)
class RadialWeight:
    """A nonnegative integrable radial density.

    Parameters
    ----------
    family : str
        One of ``standard``, ``logpow``, ``expdecay``, ``pow``, ``tabulated``,
        ``custom``.
    params : dict
        Family parameters, echoed into reports.
    n : int
        Ambient complex dimension.
    density : callable ``(r, u) -> array``
    hat : callable ``(r, u) -> array`` or None
        Closed-form ``int_r^1 w``; computed numerically when absent.
    moment_closed : callable ``s -> float`` or None
        Closed-form ``int_0^1 r^s w(r) dr``.
    """

    family: str
    params: dict
    n: int
    density: Evaluator = field(repr=False, compare=False)
    hat: Evaluator | None = field(default=None, repr=False, compare=False)
    moment_closed: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    def __call__(self, r, u=None):
        r, u = _ru(r, u)
        return self.density(r, u)

    @property
    def label(self) -> str:
        if self.family == "standard":
            return f"std:alpha={self.params['alpha']:g}"
        if self.family == "logpow":
            return f"logpow:beta={self.params['beta']:g}"
        if self.family == "expdecay":
            return f"exp:c={self.params['c']:g}"
        if self.family == "pow":
            return f"pow:alpha={self.params['alpha']:g}"
        if self.family == "tabulated":
            return f"table:{self.params.get('source', '<memory>')}"
        return f"custom:{self.params.get('name', 'callable')}"

    def with_dimension(self, n: int) -> "RadialWeight":
        builders = {
            "standard": lambda: standard(self.params["alpha"], n),
            "logpow": lambda: logpow(self.params["beta"], n),
            "expdecay": lambda: expdecay(self.params["c"], n),
            "pow": lambda: power(self.params["alpha"], n),
        }
        if self.family in builders:
            return builders[self.family]()
        return RadialWeight(self.family, dict(self.params), n, self.density, self.hat,
                            self.moment_closed)


def standard_constant(alpha: float, n: int) -> float:
    """``Gamma(n+alpha+1) / (Gamma(n+1) Gamma(alpha+1))``."""
    return math.exp(math.lgamma(n + alpha + 1) - math.lgamma(n + 1) - math.lgamma(alpha + 1))


def standard(alpha: float, n: int = 1) -> RadialWeight:
    """``c_alpha (1 - r^2)^alpha`` normalized so that ``w(B) = 1``."""
    alpha = float(alpha)
    if not alpha > -1:
        raise ConfigError(f"standard weight needs alpha > -1, got {alpha}")
    c = standard_constant(alpha, n)
    half_beta = 0.5 * special.beta(0.5, alpha + 1)

    def density(r, u):
        return c * (u * (2.0 - u)) ** alpha

    def hat(r, u):
        return c * half_beta * special.betainc(alpha + 1, 0.5, u * (2.0 - u))

    def moment(s):
        return c * 0.5 * math.exp(special.betaln((s + 1) / 2, alpha + 1))

    return RadialWeight("standard", {"alpha": alpha}, n, density, hat, moment)


def logpow(beta: float, n: int = 1) -> RadialWeight:
    """``1 / ((1 - r) log(e/(1 - r))^beta)``, ``beta > 1``."""
    beta = float(beta)
    if not beta > 1:
        raise ConfigError(f"logpow weight needs beta > 1, got {beta}")

    def density(r, u):
        return 1.0 / (u * (1.0 - np.log(u)) ** beta)

    def hat(r, u):
        return (1.0 - np.log(u)) ** (1.0 - beta) / (beta - 1.0)

    return RadialWeight("logpow", {"beta": beta}, n, density, hat)


def expdecay(c: float = 1.0, n: int = 1) -> RadialWeight:
    """``exp(-c / (1 - r))``; integrable but not doubling."""
    c = float(c)
    if not c > 0:
        raise ConfigError(f"expdecay weight needs c > 0, got {c}")

    def density(r, u):
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-c / u)

    def hat(r, u):
        with np.errstate(divide="ignore", over="ignore"):
            return u * special.expn(2, c / u)

    return RadialWeight("expdecay", {"c": c}, n, density, hat)


def power(alpha: float, n: int = 1) -> RadialWeight:
    """``(1 - r)^alpha`` without normalization."""
    alpha = float(alpha)
    if not alpha > -1:
        raise ConfigError(f"pow weight needs alpha > -1, got {alpha}")

    def density(r, u):
        return u**alpha

    def hat(r, u):
        return u ** (alpha + 1) / (alpha + 1)

    def moment(s):
        return math.exp(special.betaln(s + 1, alpha + 1))

    return RadialWeight("pow", {"alpha": alpha}, n, density, hat, moment)


def tabulated(r_nodes, values, n: int = 1, source: str | None = None) -> RadialWeight:
    """Piecewise-linear density through ``(r_nodes, values)``.

    The density is constant before the first node and after the last one.
    """
    r_nodes = np.asarray(r_nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if r_nodes.ndim != 1 or r_nodes.shape != values.shape or r_nodes.size < 2:
        raise ConfigError("tabulated weight needs at least two (r, w) rows")
    if np.any(np.diff(r_nodes) <= 0) or r_nodes[0] < 0 or r_nodes[-1] >= 1:
        raise ConfigError("tabulated radii must be strictly increasing inside [0, 1)")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ConfigError("tabulated weight has a negative or non-finite value")
    if not np.any(values > 0):
        raise ConfigError("tabulated weight vanishes identically")
    u_nodes = 1.0 - r_nodes
    segment = 0.5 * np.diff(r_nodes) * (values[:-1] + values[1:])
    # tail[i] = integral from r_nodes[i] to 1
    tail = np.concatenate([np.cumsum(segment[::-1])[::-1], [0.0]]) + values[-1] * u_nodes[-1]

    def density(r, u):
        return np.interp(r, r_nodes, values)

    def hat(r, u):
        i = np.clip(np.searchsorted(r_nodes, r, side="right") - 1, 0, r_nodes.size - 1)
        v = np.interp(r, r_nodes, values)
        past_last = r >= r_nodes[-1]
        before_first = r < r_nodes[0]
        nxt = np.minimum(i + 1, r_nodes.size - 1)
        inner = 0.5 * (r_nodes[nxt] - r) * (v + values[nxt]) + tail[nxt]
        inner = np.where(before_first, values[0] * (r_nodes[0] - r) + tail[0], inner)
        return np.where(past_last, values[-1] * u, inner)

    params = {"rows": int(r_nodes.size)}
    if source is not None:
        params["source"] = source
    return RadialWeight("tabulated", params, n, density, hat)


def read_table(path: str | Path, n: int = 1) -> RadialWeight:
    """Load a tabulated weight from a two-column CSV of ``r, w(r)`` rows."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ConfigError(f"bad row in {path}: {row}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read weight table {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"weight table {path} has no numeric rows")
    r, v = zip(*rows)
    return tabulated(r, v, n, source=str(path))


def custom(func: Callable[[np.ndarray], np.ndarray], n: int = 1, name: str = "callable",
           hat: Evaluator | None = None) -> RadialWeight:
    """Wrap a vectorized density ``func(r)``; the tail integral is computed numerically."""

    def density(r, u):
        return np.asarray(func(r), dtype=float)

    return RadialWeight("custom", {"name": name}, n, density, hat)


_SPEC = re.compile(r"^\s*(\w+)\s*:\s*(.*?)\s*$")


def parse_weight(spec: str, n: int = 1) -> RadialWeight:
    """Parse ``std:alpha=a``, ``logpow:beta=b``, ``exp:c=c``, ``pow:alpha=a`` or ``table:path``."""
    m = _SPEC.match(spec or "")
    if not m:
        raise ConfigError(f"cannot parse weight spec {spec!r}")
    kind, rest = m.group(1).lower(), m.group(2)
    if kind == "table":
        return read_table(rest, n)
    kwargs = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, val = part.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value in weight spec {spec!r}")
        try:
            kwargs[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"non-numeric value in weight spec {spec!r}") from None
    table = {"std": (standard, "alpha"), "logpow": (logpow, "beta"),
             "exp": (expdecay, "c"), "pow": (power, "alpha")}
    if kind not in table:
        raise ConfigError(f"unknown weight family {kind!r}")
    builder, key = table[kind]
    if set(kwargs) != {key}:
        raise ConfigError(f"weight family {kind!r} takes exactly one parameter {key!r}")
    return builder(kwargs[key], n)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


class WeightTransforms:
    """Cached integral transforms of a radial weight.

    Parameters
    ----------
    weight : RadialWeight
    rel_tol : float, optional
        When given, the ``*_adaptive`` methods use adaptive quadrature at
        this tolerance.  The graded-rule methods ignore it.
    """

    def __init__(self, weight: RadialWeight, rel_tol: float = 1e-10,
                 rule: GradedRule | None = None):
        self.weight = weight
        self.n = weight.n
        self.rel_tol = rel_tol
        self.rule = rule or graded_rule()
        rule = self.rule
        self._density_nodes = weight.density(rule.r, rule.u)
        if np.any(self._density_nodes < 0) or not np.all(np.isfinite(self._density_nodes)):
            raise ConfigError(f"weight {weight.label} is negative or non-finite on [0, 1)")
        if weight.hat is None:
            panel_mass = np.bincount(rule.panel, weights=rule.weights * self._density_nodes,
                                     minlength=rule.n_panels)
            self._panel_tail = np.concatenate([np.cumsum(panel_mass[::-1])[::-1], [0.0]])
        self.hat_nodes = self.hat(rule.r, rule.u)
        if not (np.isfinite(self.hat_nodes[0]) and self.hat_nodes[0] > 0):
            raise ConfigError(f"weight {weight.label} has no positive finite mass")
        self._moments: dict[float, float] = {}
        self._nstar_nodes: dict[int, np.ndarray] = {}
        self._suffix: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.grid_r = 1.0 - 2.0 ** (-np.arange(0, 161) / 4.0)
        self.grid_u = 2.0 ** (-np.arange(0, 161) / 4.0)
        self.grid_hat = self.hat(self.grid_r, self.grid_u)
        self.grid_star = self.nstar(self.grid_r[1:], self.grid_u[1:], n=1)
        self.grid_nstar = self.nstar(self.grid_r[1:], self.grid_u[1:])

    # -- tail integral ------------------------------------------------------

    def hat(self, r, u=None) -> np.ndarray:
        """``int_r^1 w`` elementwise."""
        r, u = _ru(r, u)
        if self.weight.hat is not None:
            return np.asarray(self.weight.hat(r, u), dtype=float)
        pr, pu, pw, k = self.rule.partial_nodes(r, u)
        part = np.sum(pw * self.weight.density(pr, pu), axis=-1)
        return part + self._panel_tail[np.minimum(k + 1, self.rule.n_panels)]

    def mass(self) -> float:
        """Total mass ``int_0^1 w``."""
        return float(self.hat_nodes[0]) if self.weight.hat is None else float(
            self.weight.hat(np.array(0.0), np.array(1.0)))

    def ball_mass(self) -> float:
        """``w(B) = 2n * moment(2n - 1)``."""
        return 2 * self.n * self.moment(2 * self.n - 1)

    # -- moments ------------------------------------------------------------

    def moment(self, s: float) -> float:
        """``int_0^1 r^s w(r) dr``."""
        s = float(s)
        if s < 0:
            raise DomainError(f"moment order must be >= 0, got {s}")
        cached = self._moments.get(s)
        if cached is None:
            cached = float(self.moments(np.array([s]))[0])
            self._moments[s] = cached
        return cached

    def moments(self, s) -> np.ndarray:
        """Vectorized :meth:`moment`; closed forms are used when the family has one."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.weight.moment_closed is not None:
            return np.array([self.weight.moment_closed(v) for v in s])
        return self.numeric_moments(s)

    def numeric_moments(self, s) -> np.ndarray:
        """Moments on the graded rule through the tail-integral form."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rule = self.rule
        logs = log_r(rule.r, rule.u)
        wh = rule.weights * self.hat_nodes
        out = np.empty_like(s)
        for lo in range(0, s.size, 64):
            chunk = s[lo:lo + 64]
            powers = np.exp(np.outer(chunk - 1.0, logs))
            out[lo:lo + 64] = chunk * (powers @ wh)
        out[s == 0] = self.mass()
        return out

    def density_moments(self, s) -> np.ndarray:
        """Moments summed directly from the density, with the last tail taken from ``hat``.

        This is an independent route to :meth:`moments` used by the
        Toeplitz identity check.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rule = self.rule
        logs = log_r(rule.r, rule.u)
        wd = rule.weights * self._density_nodes
        tail = float(self.hat(np.array(rule.r_end), np.array(rule.u_min)))
        out = np.empty_like(s)
        for lo in range(0, s.size, 64):
            chunk = s[lo:lo + 64]
            out[lo:lo + 64] = np.exp(np.outer(chunk, logs)) @ wd + tail
        return out

    # -- logarithmic transforms --------------------------------------------

    def _suffix_sums(self, n: int):
        if n not in self._suffix:
            rule = self.rule
            logs = log_r(rule.r, rule.u)
            base = rule.weights * self.hat_nodes * rule.r ** (2 * n - 2)
            pa = np.bincount(rule.panel, weights=base * logs, minlength=rule.n_panels)
            pb = np.bincount(rule.panel, weights=base, minlength=rule.n_panels)
            sa = np.concatenate([np.cumsum(pa[::-1])[::-1], [0.0]])
            sb = np.concatenate([np.cumsum(pb[::-1])[::-1], [0.0]])
            self._suffix[n] = (sa, sb)
        return self._suffix[n]

    def nstar(self, t, t_u=None, n: int | None = None) -> np.ndarray:
        """``int_t^1 s^(2n-1) log(s/t) w(s) ds`` for ``t`` in ``(0, 1)``."""
        n = self.n if n is None else n
        t, t_u = _ru(t, t_u)
        if np.any(t <= 0) or np.any(t_u <= 0):
            raise DomainError("logarithmic transforms need 0 < t < 1")
        sa, sb = self._suffix_sums(n)
        log_t = log_r(t, t_u)
        pr, pu, pw, k = self.rule.partial_nodes(t, t_u)
        lp = log_r(pr, pu) - log_t[..., None]
        part = np.sum(pw * self.hat(pr, pu) * pr ** (2 * n - 2) * ((2 * n - 1) * lp + 1.0),
                      axis=-1)
        nxt = np.minimum(k + 1, self.rule.n_panels)
        return part + (2 * n - 1) * (sa[nxt] - log_t * sb[nxt]) + sb[nxt]

    def power_tail(self, a: float, p: float) -> float:
        """``int_a^1 r^p w(r) dr = a^p hat(a) + p int_a^1 r^(p-1) hat(r) dr``."""
        a = float(a)
        if p == 0 or a >= 1:
            return float(self.hat(np.array(a))) if a < 1 else 0.0
        rule = self.rule
        pr, pu, pw, k = rule.partial_nodes(np.array(a))
        part = float(np.sum(pw * pr ** (p - 1) * self.hat(pr, pu)))
        mask = rule.panel > k
        rest = float(np.sum((rule.weights * rule.r ** (p - 1) * self.hat_nodes)[mask]))
        return a**p * float(self.hat(np.array(a))) + p * (part + rest)

    def star(self, t, t_u=None) -> np.ndarray:
        """``int_t^1 w(s) log(s/t) s ds``."""
        return self.nstar(t, t_u, n=1)

    def nstar_nodes(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        if n not in self._nstar_nodes:
            self._nstar_nodes[n] = self.nstar(self.rule.r, self.rule.u, n=n)
        return self._nstar_nodes[n]

    def w_alpha(self, t, alpha: float, t_u=None) -> np.ndarray:
        """``(1 - t)^(-alpha) nstar(t) / t^(2n)``."""
        if alpha >= 2:
            raise DomainError(f"need alpha < 2, got {alpha}")
        t, t_u = _ru(t, t_u)
        return t_u ** (-alpha) * self.nstar(t, t_u) / t ** (2 * self.n)

    def w1(self, t, t_u=None) -> np.ndarray:
        """``hat(t) / (1 - t)``."""
        t, t_u = _ru(t, t_u)
        return self.hat(t, t_u) / t_u

    def w_alpha_moments(self, alpha: float, s) -> np.ndarray:
        """``int_0^1 t^(s-2n) (1-t)^(-alpha) nstar(t) dt`` for each ``s``."""
        if alpha >= 2:
            raise DomainError(f"need alpha < 2, got {alpha}")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rule = self.rule
        logs = log_r(rule.r, rule.u)
        base = rule.weights * rule.u ** (-alpha) * self.nstar_nodes()
        out = np.empty_like(s)
        for lo in range(0, s.size, 64):
            chunk = s[lo:lo + 64]
            out[lo:lo + 64] = np.exp(np.outer(chunk - 2 * self.n, logs)) @ base
        return out

    # -- adaptive routes ----------------------------------------------------

    def moment_adaptive(self, s: float, rel_tol: float | None = None) -> float:
        """``s int_0^1 r^(s-1) hat(r) dr`` by adaptive quadrature."""
        tol = rel_tol or self.rel_tol
        if s == 0:
            return self.mass()
        res = integrate_radial(lambda r: r ** (s - 1.0) * self.hat(r), 0.0, 1.0, tol)
        return s * res.value

    def star_adaptive(self, t: float, rel_tol: float | None = None, n: int = 1) -> float:
        """The logarithmic transform at ``t`` by adaptive quadrature."""
        tol = rel_tol or self.rel_tol
        if not 0 < t < 1:
            raise DomainError("logarithmic transforms need 0 < t < 1")
        lt = math.log(t)

        def f(s):
            return self.hat(s) * s ** (2 * n - 2) * ((2 * n - 1) * (np.log(s) - lt) + 1.0)

        return integrate_radial(f, t, 1.0, tol).value


def omega_hat(w: WeightTransforms, r: float) -> float:
    if not 0 <= r < 1:
        raise DomainError(f"need 0 <= r < 1, got {r}")
    return float(w.hat(np.array(r)))


def moment(w: WeightTransforms, s: float) -> float:
    return w.moment(s)


def omega_star_family(w: WeightTransforms, kind: str, r: float, alpha: float = 0.0) -> float:
    """Evaluate one of ``star``, ``nstar``, ``w_alpha`` or ``w1`` at radius ``r``."""
    if not 0 <= r < 1:
        raise DomainError(f"need 0 <= r < 1, got {r}")
    if kind == "w1":
        return float(w.w1(np.array(r)))
    if r == 0:
        raise DomainError(f"{kind} is undefined at the origin")
    if kind == "star":
        return float(w.star(np.array(r)))
    if kind == "nstar":
        return float(w.nstar(np.array(r)))
    if kind == "w_alpha":
        return float(w.w_alpha(np.array(r), alpha))
    raise ConfigError(f"unknown transform kind {kind!r}")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassThresholds:
    r_max: float = R_MAX
    doubling_max: float = 1e4
    doubling_stability: float = 0.10
    reverse_min: float = 1.05
    reverse_ks: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    regular_max: float = 20.0
    trend_ratio: float = 3.0
    trend_slack: float = 0.05


@dataclass(frozen=True)
class ClassReport:
    doubling_constant: float
    doubling_constant_refined: float
    reverse_doubling: tuple[float, float] | None
    reverse_by_k: dict
    K_omega_upper_estimate: float | None
    regular_band: tuple[float, float]
    rapidly_increasing: bool
    verdicts: dict
    thresholds: ClassThresholds
    grid_size: int

    def as_dict(self) -> dict:
        return {
            "doubling_constant": self.doubling_constant,
            "doubling_constant_refined": self.doubling_constant_refined,
            "reverse_doubling": list(self.reverse_doubling) if self.reverse_doubling else None,
            "reverse_by_k": {f"{k:g}": v for k, v in self.reverse_by_k.items()},
            "K_omega_upper_estimate": self.K_omega_upper_estimate,
            "regular_band": list(self.regular_band),
            "rapidly_increasing": self.rapidly_increasing,
            "verdicts": dict(self.verdicts),
            "thresholds": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in self.thresholds.__dict__.items()},
            "grid_size": self.grid_size,
        }


def _class_grid(size: int, r_max: float):
    u = (1.0 - r_max) ** (np.arange(size) / (size - 1))
    return 1.0 - u, u


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where((den == 0) & (num > 0), np.inf, out)


def doubling_ratio(w: WeightTransforms, r: float) -> float:
    """``hat(r) / hat((1 + r) / 2)``."""
    u = 1.0 - r
    return float(_ratio(w.hat(np.array(r), np.array(u)), w.hat(np.array(1 - u / 2), np.array(u / 2))))


def _doubling_constant(w: WeightTransforms, size: int, r_max: float) -> float:
    r, u = _class_grid(size, r_max)
    return float(np.max(_ratio(w.hat(r, u), w.hat(1 - u / 2, u / 2))))


def classify(w: WeightTransforms, grid_size: int = 256,
             thresholds: ClassThresholds = ClassThresholds()) -> ClassReport:
    """Numeric membership tests for the doubling, reverse-doubling, regular and
    rapidly-increasing classes on a geometric grid ``r <= r_max``.

    Verdicts are heuristics against ``thresholds``; the report keeps the raw
    constants so that callers can test bands instead of booleans.
    """
    if grid_size < 64:
        raise ConfigError(f"grid_size must be >= 64, got {grid_size}")
    th = thresholds
    r, u = _class_grid(grid_size, th.r_max)
    hat = w.hat(r, u)
    dc = _doubling_constant(w, grid_size, th.r_max)
    dc_fine = _doubling_constant(w, 2 * grid_size, th.r_max)
    stable = math.isfinite(dc) and math.isfinite(dc_fine) and \
        abs(dc_fine - dc) <= th.doubling_stability * dc

    reverse = {}
    for k in th.reverse_ks:
        reverse[k] = float(np.min(_ratio(hat, w.hat(1 - u / k, u / k))))
    passing = [k for k in th.reverse_ks if reverse[k] > th.reverse_min]
    if passing:
        best = (passing[0], reverse[passing[0]])
        k_est = passing[0]
    else:
        k_best = max(th.reverse_ks, key=lambda k: reverse[k])
        best = (k_best, reverse[k_best]) if reverse[k_best] > 1 else None
        k_est = None

    band_mask = r >= 0.5
    dens = w.weight.density(r[band_mask], u[band_mask])
    reg = _ratio(hat[band_mask], u[band_mask] * dens)
    finite = reg[np.isfinite(reg)]
    regular_band = (float(finite.min()), float(finite.max())) if finite.size else (math.nan, math.nan)
    trend = bool(finite.size >= 2
                 and finite[-1] > th.trend_ratio * finite[0]
                 and np.all(finite[1:] >= (1 - th.trend_slack) * np.maximum.accumulate(finite)[:-1]))
    regular = bool(finite.size == reg.size
                   and regular_band[0] >= 1 / th.regular_max
                   and regular_band[1] <= th.regular_max
                   and not trend)
    doubling = bool(stable and dc <= th.doubling_max)
    verdicts = {
        "D_hat": doubling,
        "D_check": bool(passing),
        "D": bool(doubling and passing),
        "R": regular,
        "I": trend,
    }
    return ClassReport(dc, dc_fine, best, reverse, k_est, regular_band, trend, verdicts, th,
                       grid_size)


# ---------------------------------------------------------------------------
# asymptotic bands
# ---------------------------------------------------------------------------


def two_sided(ratios) -> float:
    """``max(max ratio, 1 / min ratio)`` of positive ratios."""
    ratios = np.asarray(ratios, dtype=float)
    return float(max(ratios.max(), 1.0 / ratios.min()))


def moment_tail_band(w: WeightTransforms, xs=None, rel_tol: float | None = None) -> float:
    """Two-sided constant of ``moment(x) / hat(1 - 1/x)`` over ``x = 2 .. 2**14``."""
    xs = 2.0 ** np.arange(1, 15) if xs is None else np.asarray(xs, dtype=float)
    moments = np.array([w.moment_adaptive(x, rel_tol) for x in xs])
    return two_sided(moments / w.hat(1 - 1 / xs, 1 / xs))


def star_hat_band(w: WeightTransforms, rs=None, rel_tol: float | None = None) -> float:
    """Two-sided constant of ``star(r) / ((1 - r) hat(r))`` over ``r`` in ``[0.5, 0.999]``."""
    rs = np.linspace(0.5, R_MAX, 40) if rs is None else np.asarray(rs, dtype=float)
    stars = np.array([w.star_adaptive(t, rel_tol) for t in rs])
    return two_sided(stars / ((1 - rs) * w.hat(rs)))


REGISTERED_DOUBLING = ("std:alpha=0", "std:alpha=1", "logpow:beta=2")


def registered_doubling(n: int = 1) -> list[RadialWeight]:
    return [parse_weight(spec, n) for spec in REGISTERED_DOUBLING]
