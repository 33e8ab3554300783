"""The twelve desk-scale acceptance checks.

Each check returns a :class:`CheckResult` carrying the achieved constants
next to the thresholds they were held to, so that a failing band still
reports how far off it was.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import criteria
from .basis import Polynomial, build_basis, energy_norm2, parse_polynomial
from .geometry import (PHBall, block_measure_radial, dyadic_partition, ph_ball_weight_measure,
                       random_sphere)
from .kernels import bergman_kernel, dirichlet_kernel, kernel_eval
from .operators import (DiscreteMeasure, section_schatten, section_spectrum, toeplitz_section,
                        volterra_measure, volterra_section, weight_measure)
from .weights import (REGISTERED_DOUBLING, WeightTransforms, classify, doubling_ratio, expdecay,
                      moment_tail_band, parse_weight, power, standard, star_hat_band, two_sided)

FAMILY_RADII = (0.3, 0.6, 0.85)
FAMILY_DIRECTIONS = 4
FAMILY_SIZE = 12
FAMILY_SEED = 2026
OPERATOR_WEIGHTS = ("std:alpha=0", "logpow:beta=2")
CARLESON_BAND = 50.0
SCHATTEN_BAND = 50.0
INTEGRAL_BAND = 20.0
DRIFT = 0.15


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    achieved: dict
    thresholds: dict
    seconds: float = 0.0
    notes: list = field(default_factory=list)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.name} ({self.seconds:.1f} s)"

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "achieved": self.achieved, "thresholds": self.thresholds,
                "seconds": round(self.seconds, 3), "notes": list(self.notes)}


def _wt(spec: str, n: int = 1) -> WeightTransforms:
    return WeightTransforms(parse_weight(spec, n))


def measure_family(n: int = 1, seed: int = FAMILY_SEED) -> list[DiscreteMeasure]:
    """Twelve measures with atoms on three radii times four directions.

    Each member rotates the pattern by a seeded angle and draws its masses
    log-uniformly from ``[0.1, 10]``.
    """
    if n != 1:
        raise ValueError("the operator family is defined for n = 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    dirs = np.exp(2j * math.pi * np.arange(FAMILY_DIRECTIONS) / FAMILY_DIRECTIONS)
    base = np.array([[r * d] for r in FAMILY_RADII for d in dirs])
    out = []
    for _ in range(FAMILY_SIZE):
        turn = np.exp(1j * rng.uniform(0, 2 * math.pi))
        masses = 10.0 ** rng.uniform(-1, 1, base.shape[0])
        out.append(DiscreteMeasure(1, base * turn, masses))
    return out


def _ball_pairs(n: int, count: int, bound: float, rng) -> tuple[np.ndarray, np.ndarray]:
    zs, ws = [], []
    while len(zs) < count:
        rz, rw = rng.random(2) ** (1.0 / (2 * n))
        if rz * rw > bound:
            continue
        zs.append(rz * random_sphere(n, 1, rng)[0])
        ws.append(rw * random_sphere(n, 1, rng)[0])
    return np.array(zs), np.array(ws)


# ---------------------------------------------------------------------------
# the checks
# ---------------------------------------------------------------------------


def check_kernel_closed_form(seed: int = 0) -> tuple[bool, dict, dict]:
    rng = np.random.Generator(np.random.PCG64(seed))
    achieved = {}
    for n in (1, 2):
        zs, ws = _ball_pairs(n, 200, 0.9, rng)
        for alpha in (0.0, 1.0, 2.5):
            w = WeightTransforms(standard(alpha, n))
            got = kernel_eval(bergman_kernel(w), zs, ws, tol=1e-13)
            exact = (1 - np.sum(ws * zs.conj(), axis=1)) ** -(n + 1 + alpha)
            achieved[f"n={n},alpha={alpha:g}"] = float(np.max(np.abs(got - exact) / np.abs(exact)))
    return max(achieved.values()) <= 1e-8, achieved, {"max_rel_error": 1e-8}


def check_space_identity() -> tuple[bool, dict, dict]:
    achieved = {}
    for spec in REGISTERED_DOUBLING:
        w = _wt(spec)
        a2 = build_basis("A2", w, 64).norms
        h = build_basis("H", w, 64, alpha=0.0).norms
        bk = bergman_kernel(w).log_coefficients(200)
        dk = dirichlet_kernel(w, 0.0).log_coefficients(200)
        achieved[spec] = {"norm_rel": float(np.max(np.abs(h / a2 - 1))),
                          "coefficient_rel": float(np.max(np.abs(np.expm1(dk - bk))))}
    worst = max(max(v.values()) for v in achieved.values())
    return worst <= 1e-10, achieved, {"max_rel_error": 1e-10}


def check_toeplitz_identity() -> tuple[bool, dict, dict]:
    achieved = {}
    for spec in REGISTERED_DOUBLING:
        w = _wt(spec)
        sec = toeplitz_section(build_basis("A2", w, 31), weight_measure(w))
        achieved[spec] = float(np.max(np.abs(sec.entries - np.eye(sec.dim))))
    return max(achieved.values()) <= 1e-9, achieved, {"max_abs_error": 1e-9, "dimension": 32}


def check_rank_one() -> tuple[bool, dict, dict]:
    w = _wt("std:alpha=0")
    degree = 64
    spec = section_spectrum(toeplitz_section(build_basis("A2", w, degree),
                                             DiscreteMeasure.delta([0.5])))
    vals = spec.as_array()
    # the section sees the kernel series cut after degree ``degree``
    bound = bergman_kernel(w).tail_bound(degree + 1, 0.25)
    top_error = abs(vals[0] - 16 / 9)
    rest = float(np.max(np.abs(vals[1:])))
    achieved = {"top": float(vals[0]), "top_error": top_error, "certified_bound": bound,
                "largest_other": rest}
    return top_error <= bound and rest <= 1e-10, achieved, {"others_max": 1e-10}


def _compared(basis, g: Polynomial) -> np.ndarray:
    deg = basis.degrees
    return deg[:, None] + deg[None, :] <= basis.max_degree - g.degree


def check_volterra_factorization() -> tuple[bool, dict, dict]:
    achieved = {}
    for spec in ("std:alpha=0", "logpow:beta=2"):
        w = _wt(spec)
        basis = build_basis("A2", w, 63)
        for literal in ("z", "z^2", "z+0.3*z^3"):
            g = parse_polynomial(literal, 1)
            t = volterra_section(basis, g).entries
            lhs = t.conj().T @ t
            rhs = toeplitz_section(basis, volterra_measure(w, g)).entries
            mask = _compared(basis, g)
            achieved[f"{spec},{literal}"] = float(np.max(np.abs(lhs - rhs)[mask]))
    return max(achieved.values()) <= 1e-7, achieved, {"max_abs_error": 1e-7, "dimension": 64}


def _random_polynomial(n: int, degree: int, rng) -> Polynomial:
    from .basis import multi_indices

    coeffs = {m: complex(*rng.standard_normal(2)) for m in multi_indices(n, degree)}
    return Polynomial(n, coeffs)


def check_parseval(seed: int = 0) -> tuple[bool, dict, dict]:
    rng = np.random.Generator(np.random.PCG64(seed))
    achieved = {}
    for n in (1, 2):
        for spec in REGISTERED_DOUBLING:
            w = _wt(spec, n)
            basis = build_basis("A2", w, 12)
            worst = 0.0
            for _ in range(5):
                f = _random_polynomial(n, 12, rng)
                direct = basis.norm(f) ** 2
                worst = max(worst, abs(energy_norm2(f, w) / direct - 1))
            achieved[f"n={n},{spec}"] = worst
    return max(achieved.values()) <= 1e-8, achieved, {"max_rel_error": 1e-8}


def check_weight_classes() -> tuple[bool, dict, dict]:
    achieved: dict = {"doubling": {}, "bands": {}}
    ok = True
    for alpha in (0, 1, 2, 5):
        dc = classify(WeightTransforms(power(alpha))).doubling_constant
        err = abs(dc / 2.0 ** (alpha + 1) - 1)
        achieved["doubling"][f"alpha={alpha}"] = {"constant": dc, "rel_error": err}
        ok &= err <= 1e-8
    ratio = doubling_ratio(WeightTransforms(expdecay(1.0)), 0.99)
    achieved["exp_ratio_at_0.99"] = ratio
    ok &= ratio > 1e4
    for spec in REGISTERED_DOUBLING:
        w = _wt(spec)
        row = {}
        for name, band in (("moment_tail", moment_tail_band), ("star_hat", star_hat_band)):
            coarse, fine = band(w), band(w, rel_tol=w.rel_tol / 10)
            row[name] = {"constant": coarse, "tightened": fine,
                         "change": abs(fine / coarse - 1)}
            ok &= coarse <= 20 and row[name]["change"] <= 0.10
        achieved["bands"][spec] = row
    return bool(ok), achieved, {"doubling_rel": 1e-8, "exp_ratio_min": 1e4, "band_max": 20,
                                "band_stability": 0.10}


def check_partition(seed: int = 0) -> tuple[bool, dict, dict]:
    achieved = {}
    ok = True
    for n, kmax in ((1, 10), (2, 8)):
        part = dyadic_partition(n, kmax, seed=seed)
        rng = np.random.Generator(np.random.PCG64([seed, n]))
        count = 100_000
        radius = part.rmax * rng.random(count) ** (1.0 / (2 * n))
        pts = radius[:, None] * random_sphere(n, count, rng)
        k, j = part.locate(pts)
        valid = bool(np.all(j >= 1) and np.all(j <= np.array(part.counts)[k]))
        scaled = np.array(part.counts[2:], dtype=float) * 2.0 ** (-n * np.arange(2, kmax + 1))
        width = float(scaled.max() / scaled.min())
        uncovered = 0
        for level in range(1, kmax + 1):
            probe = random_sphere(n, count, np.random.Generator(np.random.PCG64([seed, n, level])))
            uncovered += int(np.count_nonzero(part.levels[level].uncovered(probe)))
        achieved[f"n={n}"] = {"kmax": kmax, "counts": part.counts, "located_all": valid,
                              "scaled_count_width": width, "uncovered_probes": uncovered}
        ok &= valid and width <= 10 and uncovered == 0
    return bool(ok), achieved, {"width_max": 10, "probes": 100_000}


def _family_sections(w: WeightTransforms, fam, degrees=(31, 63)):
    bases = [build_basis("A2", w, d) for d in degrees]
    return [[toeplitz_section(b, mu) for b in bases] for mu in fam]


def check_carleson_band() -> tuple[bool, dict, dict]:
    fam = measure_family()
    part = dyadic_partition(1, 10)
    achieved = {}
    ok = True
    for spec in OPERATOR_WEIGHTS:
        w = _wt(spec)
        lo, hi = [], []
        for mu, secs in zip(fam, _family_sections(w, fam)):
            c = criteria.carleson_quotient(w, mu, 2, 2, part).headline
            lo.append(section_spectrum(secs[0]).max / c)
            hi.append(section_spectrum(secs[1]).max / c)
        lo, hi = np.array(lo), np.array(hi)
        band = two_sided(hi)
        drift = float(np.max(np.abs(hi / lo - 1)))
        achieved[spec] = {"ratio_min": float(hi.min()), "ratio_max": float(hi.max()),
                          "band": band, "drift": drift}
        ok &= band <= CARLESON_BAND and drift <= DRIFT
    return bool(ok), achieved, {"band": CARLESON_BAND, "drift": DRIFT, "dimensions": [32, 64]}


def check_schatten_bands() -> tuple[bool, dict, dict]:
    fam = measure_family()
    part = dyadic_partition(1, 10)
    achieved = {}
    ok = True
    for spec in OPERATOR_WEIGHTS:
        w = _wt(spec)
        sections = _family_sections(w, fam)
        row = {}
        for p in (1.0, 1.5, 2.0):
            lo, hi, integral = [], [], {r: [] for r in (0.3, 0.5, 1.0)}
            for mu, secs in zip(fam, sections):
                m = criteria.schatten_dyadic(w, mu, part, p).headline
                lo.append(section_schatten(secs[0], p) / m)
                hi.append(section_schatten(secs[1], p) / m)
                for r in integral:
                    integral[r].append(m / criteria.schatten_integral(w, mu, p, r).headline)
            lo, hi = np.array(lo), np.array(hi)
            entry = {"section_band": two_sided(hi), "drift": float(np.max(np.abs(hi / lo - 1))),
                     "integral_band": {f"r={r:g}": two_sided(v) for r, v in integral.items()}}
            ok &= entry["section_band"] <= SCHATTEN_BAND and entry["drift"] <= DRIFT
            ok &= all(v <= INTEGRAL_BAND for v in entry["integral_band"].values())
            row[f"p={p:g}"] = entry
        achieved[spec] = row
    return bool(ok), achieved, {"section_band": SCHATTEN_BAND, "drift": DRIFT,
                                "integral_band": INTEGRAL_BAND}


VOLTERRA_FAMILY = ((1, "z", (1.5, 2.0, 3.0)), (1, "z^2", (1.5, 2.0, 3.0)),
                   (1, "z+0.3*z^3", (1.5, 2.0, 3.0)), (2, "z1*z2", (2.5, 3.0)))
VOLTERRA_DEGREES = {1: (100, 200), 2: (6, 12)}


def check_volterra_besov() -> tuple[bool, dict, dict]:
    achieved: dict = {}
    z = parse_polynomial("z", 1)
    exact = criteria.besov_integral(z, 2.0).headline
    divergent = criteria.besov_integral(z, 1.0)
    achieved["besov_p2_error"] = abs(exact - 0.5)
    achieved["besov_p1_slope"] = divergent.extras["slope"]
    w1 = _wt("std:alpha=0")
    sv = section_spectrum(volterra_section(build_basis("A2", w1, 200), z)).as_array()
    k = np.arange(10, 101)
    slope = float(np.polyfit(np.log(k), np.log(sv[k]), 1)[0])
    achieved["singular_value_slope"] = slope
    ok = achieved["besov_p2_error"] <= 1e-8 and achieved["besov_p1_slope"] >= 0.8 \
        and abs(slope + 1) <= 0.1
    bands = {}
    for n, literal, ps in VOLTERRA_FAMILY:
        w = _wt("std:alpha=0", n)
        g = parse_polynomial(literal, n)
        part = dyadic_partition(n, 12 if n == 1 else 8)
        small, large = (build_basis("A2", w, d) for d in VOLTERRA_DEGREES[n])
        for p in ps:
            s_small = section_schatten(volterra_section(small, g), p)
            s_large = section_schatten(volterra_section(large, g), p)
            dyadic = criteria.besov_statistic(g, part, p).headline
            converges = criteria.besov_integral(g, p).extras["converged"]
            bands[f"n={n},{literal},p={p:g}"] = {
                "ratio": s_large / dyadic, "growth_on_doubling": s_large / s_small - 1,
                "besov_converges": converges}
            ok &= 1 / 50 <= s_large / dyadic <= 50
    achieved["schatten_vs_besov"] = bands
    return bool(ok), achieved, {"besov_p2": 1e-8, "p1_slope_min": 0.8,
                                "singular_value_slope": "-1 +- 0.1", "band": 50}


GEOMETRY_GRID = 40
GEOMETRY_SAMPLES = 100_000
REGULAR_WEIGHTS = ("std:alpha=0", "std:alpha=1")


def check_geometry_bands(seed: int = 0) -> tuple[bool, dict, dict]:
    achieved: dict = {"block": {}, "ball": {}}
    ok = True
    radii = 1.0 - np.geomspace(1.0, 1e-3, 60)
    for n in (1, 2):
        for spec in REGISTERED_DOUBLING:
            w = _wt(spec, n)
            ratio = block_measure_radial(w, radii) / ((1 - radii) ** n * w.hat(radii))
            band = two_sided(ratio)
            achieved["block"][f"n={n},{spec}"] = band
            ok &= band <= 10
    grid = 1.0 - np.geomspace(1.0, 1e-2, GEOMETRY_GRID)
    for n in (1, 2):
        e1 = np.zeros(n, complex)
        e1[0] = 1.0
        for spec in REGULAR_WEIGHTS:
            w = _wt(spec, n)
            ratios, worst_err = [], 0.0
            for i, r in enumerate(grid):
                z = r * e1
                mass, err = ph_ball_weight_measure(w, PHBall(z, 0.5), GEOMETRY_SAMPLES,
                                                   seed=seed + i)
                ratios.append(mass / float(block_measure_radial(w, [r])[0]))
                worst_err = max(worst_err, err / mass)
            band = two_sided(ratios)
            achieved["ball"][f"n={n},{spec}"] = {"band": band, "worst_rel_stderr": worst_err}
            ok &= band <= 20 and worst_err <= 0.02
    return bool(ok), achieved, {"block_band": 10, "ball_band": 20, "rel_stderr": 0.02,
                                "grid": GEOMETRY_GRID, "samples": GEOMETRY_SAMPLES}


CHECKS = {
    1: ("kernel closed form", check_kernel_closed_form),
    2: ("space identity", check_space_identity),
    3: ("Toeplitz identity", check_toeplitz_identity),
    4: ("rank-one exactness", check_rank_one),
    5: ("Volterra factorization", check_volterra_factorization),
    6: ("energy identity", check_parseval),
    7: ("weight-class constants", check_weight_classes),
    8: ("partition and covering", check_partition),
    9: ("Carleson band", check_carleson_band),
    10: ("Schatten bands", check_schatten_bands),
    11: ("Volterra and Besov", check_volterra_besov),
    12: ("geometry bands", check_geometry_bands),
}


def run_check(number: int) -> CheckResult:
    name, fn = CHECKS[number]
    start = time.perf_counter()
    passed, achieved, thresholds = fn()
    return CheckResult(number, name, bool(passed), achieved, thresholds,
                       time.perf_counter() - start)


def run_suite(numbers=None, echo=None) -> list[CheckResult]:
    """Run the selected checks in order; ``echo`` receives each result line."""
    results = []
    for number in sorted(numbers or CHECKS):
        res = run_check(number)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
