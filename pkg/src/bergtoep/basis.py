"""Multi-indices, holomorphic polynomials and orthonormal monomial bases.

Monomials ``z^m`` are mutually orthogonal in every radially weighted space
on the ball, so a basis is fully described by the list of multi-indices and
the norm of each monomial.  Two spaces are supported:

``A2``
    the weighted Bergman space, ``||f||^2 = int |f|^2 w dV``;
``H``
    the Dirichlet-type space with
    ``||f||^2 = |f(0)|^2 w(B) + 4 int |Rf|^2 W_alpha dV`` where
    ``W_alpha(z) = (1 - |z|)^(-alpha) nstar(|z|) / |z|^(2n)``.

For ``alpha = 0`` the two norms coincide on every monomial.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import ConfigError, DegenerateWeight, SizeExceeded
from .numerics import gauss_legendre, log_r
from .weights import WeightTransforms

MAX_DEGREE = {1: 256, 2: 24}
NORM_FLOOR = 1e-300


class MultiIndex(tuple):
    """An ``n``-tuple of nonnegative integers."""

    def __new__(cls, components):
        comps = tuple(int(c) for c in components)
        if not comps:
            raise ConfigError("a multi-index needs at least one component")
        if any(c < 0 for c in comps):
            raise ConfigError(f"multi-index components must be >= 0, got {comps}")
        return super().__new__(cls, comps)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def degree(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(c) for c in self)

    @property
    def log_factorial(self) -> float:
        return sum(math.lgamma(c + 1) for c in self)

    def plus(self, other) -> "MultiIndex":
        return MultiIndex(a + b for a, b in zip(self, other, strict=True))

    def minus(self, other) -> "MultiIndex | None":
        """Componentwise difference, or None if some component goes negative."""
        diff = [a - b for a, b in zip(self, other, strict=True)]
        return None if min(diff) < 0 else MultiIndex(diff)

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)}"


@lru_cache(maxsize=64)
def multi_indices(n: int, max_degree: int) -> tuple[MultiIndex, ...]:
    """All multi-indices with ``|m| <= max_degree`` in graded-lexicographic order.

    Within a degree, larger leading components come first, so for ``n = 2``
    the order is ``1, z1, z2, z1^2, z1 z2, z2^2, ...``.
    """
    if n < 1 or max_degree < 0:
        raise ConfigError(f"need n >= 1 and max_degree >= 0, got {n}, {max_degree}")
    out = []
    for deg in range(max_degree + 1):
        out.extend(MultiIndex(m) for m in _compositions(n, deg))
    return tuple(out)


def _compositions(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(n - 1, total - first):
            yield (first, *rest)


def sphere_monomial_norm2(m: MultiIndex) -> float:
    """``int_S |eta^m|^2 dsigma = (n-1)! m! / (n-1+|m|)!``."""
    n = len(m)
    return math.exp(math.lgamma(n) + m.log_factorial - math.lgamma(n + m.degree))


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """A holomorphic polynomial ``sum_m c_m z^m`` in ``n`` variables."""

    n: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for m, c in self.coeffs.items():
            m = MultiIndex(m)
            if len(m) != self.n:
                raise ConfigError(f"multi-index {tuple(m)} does not have {self.n} components")
            c = complex(c)
            if c != 0:
                clean[m] = clean.get(m, 0) + c
        object.__setattr__(self, "coeffs", {m: c for m, c in clean.items() if c != 0})

    @classmethod
    def constant(cls, n: int, value: complex = 1.0) -> "Polynomial":
        return cls(n, {(0,) * n: value})

    @classmethod
    def monomial(cls, m, coeff: complex = 1.0) -> "Polynomial":
        m = MultiIndex(m)
        return cls(len(m), {m: coeff})

    @classmethod
    def variable(cls, n: int, k: int) -> "Polynomial":
        """The coordinate function ``z_k`` (1-based)."""
        m = [0] * n
        m[k - 1] = 1
        return cls.monomial(m)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.coeffs), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return all(m.degree == 0 for m in self.coeffs)

    def coefficient(self, m) -> complex:
        return self.coeffs.get(MultiIndex(m), 0j)

    def _check(self, other: "Polynomial") -> None:
        if other.n != self.n:
            raise ConfigError(f"cannot combine polynomials in {self.n} and {other.n} variables")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.n, other)

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = self._lift(other)
        out: dict = {}
        for (ma, ca), (mb, cb) in product(self.coeffs.items(), other.coeffs.items()):
            key = ma.plus(mb)
            out[key] = out.get(key, 0) + ca * cb
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ConfigError(f"polynomial exponent must be a nonnegative integer, got {k}")
        out = Polynomial.constant(self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.coeffs.items())))

    def close_to(self, other: "Polynomial", tol: float = 1e-12) -> bool:
        diff = self - other
        scale = max((abs(c) for c in self.coeffs.values()), default=1.0)
        return all(abs(c) <= tol * max(scale, 1.0) for c in diff.coeffs.values())

    def __call__(self, z) -> np.ndarray | complex:
        """Evaluate at one point (shape ``(n,)``) or many (shape ``(k, n)``)."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim == 1
        pts = z.reshape(-1, self.n)
        out = np.zeros(len(pts), dtype=complex)
        for m, c in self.coeffs.items():
            out += c * np.prod(pts ** np.array(m), axis=1)
        return complex(out[0]) if single else out

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for m in sorted(self.coeffs, key=lambda m: (m.degree, [-c for c in m])):
            c = self.coeffs[m]
            mono = "*".join(
                (f"z{k + 1}" if self.n > 1 else "z") + (f"^{e}" if e > 1 else "")
                for k, e in enumerate(m) if e)
            coef = f"({c.real:.17g}{c.imag:+.17g}j)"
            terms.append(f"{coef}*{mono}" if mono else coef)
        return " + ".join(terms)


def radial_derivative(f: Polynomial) -> Polynomial:
    """``Rf = sum_k z_k df/dz_k``, which multiplies ``z^m`` by ``|m|``."""
    return Polynomial(f.n, {m: m.degree * c for m, c in f.coeffs.items()})


def volterra_coefficients(f: Polynomial, g: Polynomial) -> Polynomial:
    """``int_0^1 f(tz) Rg(tz) dt / t``, integrated term by term."""
    prod = f * radial_derivative(g)
    return Polynomial(f.n, {q: c / q.degree for q, c in prod.coeffs.items()})


_NUMBER_I = re.compile(r"(\d(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)i\b")
_VAR = re.compile(r"^z(\d*)$")


def parse_polynomial(literal: str, n: int | None = None) -> Polynomial:
    """Parse a literal such as ``1 + (0.5+0i)*z1^2*z2``.

    Variables are ``z1 .. zn`` (or ``z`` when ``n = 1``); ``^`` and ``**``
    both mean powers and imaginary units may be written ``i`` or ``j``.
    When ``n`` is omitted it is the largest variable index present.

    Raises
    ------
    ConfigError
        On any syntax outside sums, products, integer powers and numbers.
    """
    text = literal.strip()
    if text.startswith("poly:"):
        text = text[5:]
    text = _NUMBER_I.sub(r"\1j", text.replace("^", "**"))
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse polynomial {literal!r}: {exc.msg}") from None
    names = {node.id for node in ast.walk(tree) if isinstance(node, ast.Name)}
    indices = []
    for name in names:
        match = _VAR.match(name)
        if not match:
            raise ConfigError(f"unknown symbol {name!r} in polynomial {literal!r}")
        indices.append(int(match.group(1) or 1))
    inferred = max(indices, default=1)
    if n is None:
        n = inferred
    elif inferred > n:
        raise ConfigError(f"polynomial {literal!r} uses z{inferred} but n={n}")
    return _eval_node(tree.body, n, literal)


def _eval_node(node, n: int, literal: str):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return Polynomial.constant(n, node.value)
    if isinstance(node, ast.Name):
        k = int(_VAR.match(node.id).group(1) or 1)
        return Polynomial.variable(n, k)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _eval_node(node.operand, n, literal)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, n, literal)
        if isinstance(node.op, ast.Pow):
            exp = node.right
            if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)):
                raise ConfigError(f"exponents must be integer literals in {literal!r}")
            return left ** exp.value
        right = _eval_node(node.right, n, literal)
        ops = {ast.Add: Polynomial.__add__, ast.Sub: Polynomial.__sub__,
               ast.Mult: Polynomial.__mul__}
        for kind, fn in ops.items():
            if isinstance(node.op, kind):
                return fn(left, right)
        if isinstance(node.op, ast.Div) and right.is_constant and not right.is_zero:
            return left * (1.0 / right.coefficient((0,) * n))
    raise ConfigError(f"unsupported expression in polynomial {literal!r}")


# ---------------------------------------------------------------------------
# orthonormal bases
# ---------------------------------------------------------------------------


def _log_angular(indices, n: int) -> np.ndarray:
    return np.array([math.lgamma(n) + m.log_factorial - math.lgamma(n + m.degree)
                     for m in indices])


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """Normalized monomials ``e_m = z^m / ||z^m||`` for ``|m| <= max_degree``."""

    space: str
    n: int
    max_degree: int
    alpha: float | None
    indices: tuple
    norms: np.ndarray = field(repr=False)
    weight_label: str = ""

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([m.degree for m in self.indices])

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64).reshape(self.dim, self.n)

    def position(self, m) -> int:
        return self._positions()[MultiIndex(m)]

    def _positions(self) -> dict:
        cache = self.__dict__.get("_pos")
        if cache is None:
            cache = {m: i for i, m in enumerate(self.indices)}
            object.__setattr__(self, "_pos", cache)
        return cache

    def evaluate(self, z) -> np.ndarray:
        """Matrix ``E[i, a] = e_a(z_i)`` for points of shape ``(k, n)``."""
        pts = np.asarray(z, dtype=complex).reshape(-1, self.n)
        mono = np.ones((len(pts), self.dim), dtype=complex)
        exps = self.exponents
        for k in range(self.n):
            powers = pts[:, k:k + 1] ** np.arange(self.max_degree + 1)
            mono *= powers[:, exps[:, k]]
        return mono / self.norms

    def coefficients(self, f: Polynomial) -> np.ndarray:
        """Coordinates of ``f`` in the orthonormal basis."""
        if f.n != self.n:
            raise ConfigError(f"polynomial has n={f.n}, basis has n={self.n}")
        if f.degree > self.max_degree:
            raise SizeExceeded(f"degree {f.degree} exceeds basis degree {self.max_degree}")
        vec = np.zeros(self.dim, dtype=complex)
        pos = self._positions()
        for m, c in f.coeffs.items():
            vec[pos[m]] = c * self.norms[pos[m]]
        return vec

    def norm(self, f: Polynomial) -> float:
        return float(np.linalg.norm(self.coefficients(f)))


def build_basis(space: str, w: WeightTransforms, max_degree: int,
                alpha: float | None = None) -> OrthoBasis:
    """Orthonormal monomial basis of ``A2`` or ``H(W_alpha)`` up to ``max_degree``.

    Raises
    ------
    SizeExceeded
        If ``max_degree`` is over the cap for this dimension.
    DegenerateWeight
        If some squared monomial norm underflows below ``1e-300``.
    """
    n = w.n
    cap = MAX_DEGREE.get(n, 8)
    if not 0 <= max_degree <= cap:
        raise SizeExceeded(f"degree {max_degree} outside [0, {cap}] for n={n}")
    indices = multi_indices(n, max_degree)
    degs = np.array([m.degree for m in indices])
    log_ang = _log_angular(indices, n) + math.log(2 * n)
    if space == "A2":
        if alpha is not None:
            raise ConfigError("alpha applies to the H space only")
        moments = w.moments(2 * n + 2 * np.arange(max_degree + 1) - 1)
        norm2 = np.exp(log_ang) * moments[degs]
    elif space == "H":
        alpha = 0.0 if alpha is None else float(alpha)
        if alpha >= 2:
            raise ConfigError(f"the H space needs alpha < 2, got {alpha}")
        wm = w.w_alpha_moments(alpha, 2 * n + 2 * np.arange(1, max_degree + 1) - 1)
        norm2 = np.empty(len(indices))
        pos = degs > 0
        norm2[~pos] = w.ball_mass()
        norm2[pos] = 4.0 * degs[pos] ** 2 * np.exp(log_ang[pos]) * wm[degs[pos] - 1]
    else:
        raise ConfigError(f"unknown space {space!r}; use 'A2' or 'H'")
    if not np.all(np.isfinite(norm2)) or np.any(norm2 < NORM_FLOOR):
        raise DegenerateWeight(f"monomial norms of {w.weight.label} underflow at degree "
                               f"<= {max_degree}")
    return OrthoBasis(space, n, max_degree, alpha, indices, np.sqrt(norm2), w.weight.label)


# ---------------------------------------------------------------------------
# quadrature on the sphere and the energy identity
# ---------------------------------------------------------------------------


def sphere_rule(n: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights on the unit sphere exact for ``|p|^2``, ``deg p <= degree``.

    ``n = 1`` uses equally spaced angles.  ``n = 2`` writes
    ``eta = (sqrt(x) e^(i a), sqrt(1 - x) e^(i b))``, under which ``x`` is
    uniform on ``[0, 1]``, and uses Gauss-Legendre in ``x``.
    """
    m = 2 * degree + 2
    angles = 2 * math.pi * np.arange(m) / m
    if n == 1:
        return np.exp(1j * angles)[:, None], np.full(m, 1.0 / m)
    if n == 2:
        x, wx = gauss_legendre(max(degree + 1, 2))
        xx, aa, bb = np.meshgrid(x, angles, angles, indexing="ij")
        pts = np.stack([np.sqrt(xx) * np.exp(1j * aa),
                        np.sqrt(1 - xx) * np.exp(1j * bb)], axis=-1).reshape(-1, 2)
        wts = (wx[:, None, None] * np.ones((1, m, m)) / m**2).ravel()
        return pts, wts
    raise ConfigError(f"sphere_rule supports n in (1, 2), got {n}")


def energy_norm2(f: Polynomial, w: WeightTransforms) -> float:
    """``|f(0)|^2 w(B) + 4 int |Rf|^2 nstar(|z|) / |z|^(2n) dV`` by quadrature.

    The sphere average of ``|Rf|^2`` uses :func:`sphere_rule`; the radial
    integral uses the graded rule with ``nstar`` at its nodes.
    """
    n = f.n
    rf = radial_derivative(f)
    f0 = f.coefficient((0,) * n)
    if rf.is_zero:
        return abs(f0) ** 2 * w.ball_mass()
    pts, wts = sphere_rule(n, rf.degree)
    rule = w.rule
    # ``|Rf(r eta)|^2`` is a polynomial in r; collect its coefficients per power
    by_degree: dict[int, np.ndarray] = {}
    for m, c in rf.coeffs.items():
        term = c * np.prod(pts ** np.array(m), axis=1)
        by_degree[m.degree] = by_degree.get(m.degree, 0) + term
    degs = sorted(by_degree)
    vals = np.array([by_degree[d] for d in degs])
    gram = (vals * wts) @ vals.conj().T
    logs = log_r(rule.r, rule.u)
    base = rule.weights * w.nstar_nodes() / rule.r
    radial = 0.0
    for i, da in enumerate(degs):
        for j, db in enumerate(degs):
            if abs(gram[i, j]) == 0:
                continue
            radial += float(np.real(gram[i, j])) * float(np.exp((da + db) * logs) @ base)
    return abs(f0) ** 2 * w.ball_mass() + 4.0 * 2 * n * radial
