"""Command-line front end.

Every subcommand writes a JSON report to stdout (or ``--out``) holding the
achieved numbers and an echo of the options that produced them.  Exit
codes: 0 when every asserted band holds, 1 when one fails, 2 for invalid
options and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, criteria, suite
from .basis import build_basis, parse_polynomial
from .errors import BergtoepError, ConfigError
from .geometry import dyadic_partition
from .kernels import bergman_kernel, dirichlet_kernel, kernel_eval
from .operators import (DiscreteMeasure, read_measure, section_schatten, section_spectrum,
                        toeplitz_section, volterra_section, weight_measure)
from .weights import WeightTransforms, classify, moment_tail_band, parse_weight, star_hat_band

EXIT_OK, EXIT_BAND, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
IDENTITY_TOL = 1e-9
KERNEL_TOL = 1e-8

_DELTA = re.compile(r"^delta:z=([^;]+)(?:;mass=(.+))?$")


def parse_measure(spec: str, w: WeightTransforms):
    """``id`` (the weight itself), ``delta:z=<c>[,<c>...][;mass=<m>]`` or a JSON path."""
    if spec == "id":
        return weight_measure(w)
    m = _DELTA.match(spec)
    if m:
        try:
            z = [complex(part.strip().replace("i", "j")) for part in m.group(1).split(",")]
            mass = float(m.group(2)) if m.group(2) else 1.0
        except ValueError as exc:
            raise ConfigError(f"bad delta measure {spec!r}: {exc}") from None
        if len(z) != w.n:
            raise ConfigError(f"delta point has {len(z)} coordinates, expected n={w.n}")
        return DiscreteMeasure.delta(z, mass)
    if Path(spec).suffix == ".json" or Path(spec).exists():
        mu = read_measure(spec)
        if mu.n != w.n:
            raise ConfigError(f"measure file has n={mu.n}, expected n={w.n}")
        return mu
    raise ConfigError(f"unknown measure {spec!r}; use id, delta:z=..., or a JSON file")


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _report(args, body: dict) -> dict:
    out = {"command": args.command, "version": __version__, "config": _config(args)}
    out.update(body)
    return out


def _weight(args) -> WeightTransforms:
    return WeightTransforms(parse_weight(args.weight, args.n))


def _partition(args):
    kmax = args.kmax if args.kmax is not None else (10 if args.n == 1 else 6)
    return dyadic_partition(args.n, kmax, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_weights(args):
    w = _weight(args)
    rep = classify(w)
    body = {"weight": w.weight.label, "mass": w.mass(), "ball_mass": w.ball_mass(),
            "classes": rep.as_dict()}
    if rep.verdicts["D_hat"]:
        body["moment_tail_band"] = moment_tail_band(w)
        body["star_hat_band"] = star_hat_band(w)
    return _report(args, body), None


def cmd_partition(args):
    part = _partition(args)
    body = {"n": part.n, "kmax": part.kmax, "counts": part.counts, "n_cells": part.n_cells}
    if args.out_cells:
        with open(args.out_cells, "w", newline="") as fh:
            writer = csv.writer(fh)
            head = ["k", "j"]
            for c in range(part.n):
                head += [f"re{c + 1}", f"im{c + 1}"]
            writer.writerow(head)
            for k, j, center, _ in part.cells():
                row = [k, j]
                for c in center:
                    row += [f"{c.real:.17g}", f"{c.imag:.17g}"]
                writer.writerow(row)
        body["cells_csv"] = args.out_cells
    return _report(args, body), None


def cmd_kernel(args):
    w = _weight(args)
    ks = bergman_kernel(w)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    zs, ws = suite._ball_pairs(args.n, args.pairs, 0.9, rng)
    got = kernel_eval(ks, zs, ws, tol=1e-13)
    body = {"weight": w.weight.label, "pairs": args.pairs}
    checks = []
    if w.weight.family == "standard":
        alpha = w.weight.params["alpha"]
        exact = (1 - np.sum(ws * zs.conj(), axis=1)) ** -(args.n + 1 + alpha)
        err = float(np.max(np.abs(got - exact) / np.abs(exact)))
        body["closed_form_max_rel_error"] = err
        checks.append(err <= KERNEL_TOL)
    kmax = args.degree
    gap = float(np.max(np.abs(np.expm1(dirichlet_kernel(w, 0.0).log_coefficients(kmax)
                                       - ks.log_coefficients(kmax)))))
    body["dirichlet_vs_bergman_coefficients"] = {"kmax": kmax, "max_rel_gap": gap}
    checks.append(gap <= 1e-10)
    body["tail_bound_at_0.9"] = ks.tail_bound(kmax + 1, 0.9)
    return _report(args, body), all(checks)


def cmd_toeplitz(args):
    w = _weight(args)
    mu = parse_measure(args.measure, w)
    sec = toeplitz_section(build_basis("A2", w, args.degree), mu)
    vals = section_spectrum(sec).as_array()
    body = {"dimension": sec.dim, "largest": float(vals[0]), "smallest": float(vals[-1])}
    passed = None
    if args.measure == "id":
        err = float(np.max(np.abs(vals - 1)))
        body["identity_max_error"] = err
        passed = err <= IDENTITY_TOL
    if args.spectrum_csv:
        with open(args.spectrum_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "eigenvalue"])
            writer.writerows((i, f"{v:.17g}") for i, v in enumerate(vals))
        body["spectrum_csv"] = args.spectrum_csv
    else:
        body["eigenvalues"] = [float(v) for v in vals]
    return _report(args, body), passed


def cmd_carleson(args):
    w = _weight(args)
    mu = parse_measure(args.measure, w)
    q = args.q if args.q is not None else args.p
    rep = criteria.carleson_quotient(w, mu, args.p, q, _partition(args))
    body = rep.as_dict()
    if args.degree is not None and args.p == q == 2:
        top = section_spectrum(toeplitz_section(build_basis("A2", w, args.degree), mu)).max
        body["section_norm"] = top
        body["section_over_headline"] = top / rep.headline if rep.headline else None
    return _report(args, body), None


def cmd_berezin(args):
    w = _weight(args)
    mu = parse_measure(args.measure, w)
    q = args.q if args.q is not None else args.p
    rep = criteria.berezin_quotient(bergman_kernel(w), w, mu, args.p, q, _partition(args))
    return _report(args, rep.as_dict()), None


def cmd_schatten(args):
    w = _weight(args)
    mu = parse_measure(args.measure, w)
    dyadic = criteria.schatten_dyadic(w, mu, _partition(args), args.p, args.alpha)
    body = {"dyadic": dyadic.as_dict(), "kind": "schatten", "headline": dyadic.headline}
    if args.r is not None:
        integ = criteria.schatten_integral(w, mu, args.p, args.r, args.alpha, rmax=args.rmax,
                                           seed=args.seed)
        body["integral"] = integ.as_dict()
        body["dyadic_over_integral"] = dyadic.headline / integ.headline if integ.headline else None
    if args.degree is not None:
        sec = toeplitz_section(build_basis("A2", w, args.degree), mu)
        body["section_schatten"] = section_schatten(sec, args.p)
    return _report(args, body), None


def cmd_volterra(args):
    if args.g is None:
        raise ConfigError("volterra needs --g")
    g = parse_polynomial(args.g, args.n)
    w = _weight(args)
    degree = args.degree if args.degree is not None else (100 if args.n == 1 else 12)
    sec = volterra_section(build_basis("A2", w, degree), g)
    sv = section_spectrum(sec).as_array()
    integral = criteria.besov_integral(g, args.p)
    dyadic = criteria.besov_statistic(g, _partition(args), args.p)
    schatten = float(np.sum(sv ** args.p))
    body = {"kind": "volterra", "headline": schatten, "dimension": sec.dim,
            "singular_values": [float(s) for s in sv[:20]],
            "besov_integral": integral.as_dict(), "besov_dyadic": dyadic.as_dict(),
            "schatten_over_dyadic": schatten / dyadic.headline if dyadic.headline else None}
    return _report(args, body), None


def cmd_suite(args):
    if args.preset != "desk":
        raise ConfigError(f"unknown preset {args.preset!r}; only 'desk' is defined")
    numbers = [int(x) for x in args.only.split(",")] if args.only else None
    if numbers and any(x not in suite.CHECKS for x in numbers):
        raise ConfigError(f"--only takes numbers from 1 to {len(suite.CHECKS)}")
    results = suite.run_suite(numbers, echo=lambda line: print(line, file=sys.stderr))
    body = {"checks": [r.as_dict() for r in results]}
    return _report(args, body), all(r.passed for r in results)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, measure: bool = False) -> None:
    p.add_argument("--weight", default="std:alpha=0", help="weight spec, e.g. std:alpha=1")
    p.add_argument("--n", type=int, choices=(1, 2), default=1, help="complex dimension")
    p.add_argument("--degree", type=int, default=None, help="basis degree")
    p.add_argument("--kmax", type=int, default=None, help="last dyadic level")
    p.add_argument("--rmax", type=float, default=0.999, help="radial cutoff for integrals")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the JSON report here")
    if measure:
        p.add_argument("--measure", default="id", help="id, delta:z=..., or a JSON file")
        p.add_argument("--p", type=float, default=2.0)
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--r", type=float, default=None, help="Bergman radius")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergtoep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    weights = sub.add_parser("weights", help="weight transforms and class constants")
    wsub = weights.add_subparsers(dest="action", required=True)
    p = wsub.add_parser("check")
    _common(p)
    p.set_defaults(func=cmd_weights)

    part = sub.add_parser("partition", help="dyadic partition of the ball")
    psub = part.add_subparsers(dest="action", required=True)
    p = psub.add_parser("emit")
    _common(p)
    p.add_argument("--cells", dest="out_cells", default=None, help="CSV file for cell centers")
    p.set_defaults(func=cmd_partition)

    kern = sub.add_parser("kernel", help="reproducing kernel checks")
    ksub = kern.add_subparsers(dest="action", required=True)
    p = ksub.add_parser("verify")
    _common(p)
    p.add_argument("--pairs", type=int, default=200)
    p.set_defaults(func=cmd_kernel, degree=200)

    toep = sub.add_parser("toeplitz", help="Toeplitz sections")
    tsub = toep.add_subparsers(dest="action", required=True)
    p = tsub.add_parser("spectrum")
    _common(p, measure=True)
    p.add_argument("--csv", dest="spectrum_csv", default=None, help="CSV file for eigenvalues")
    p.set_defaults(func=cmd_toeplitz, degree=31)

    for name, func, help_text in (
            ("carleson", cmd_carleson, "Carleson block quotient"),
            ("berezin", cmd_berezin, "Berezin transform quotient"),
            ("schatten", cmd_schatten, "dyadic and integral Schatten statistics"),
            ("volterra", cmd_volterra, "Volterra sections and Besov statistics")):
        p = sub.add_parser(name, help=help_text)
        _common(p, measure=True)
        if name == "volterra":
            p.add_argument("--g", default=None, help="polynomial symbol, e.g. 'z+0.3*z^3'")
        p.set_defaults(func=func)

    p = sub.add_parser("suite", help="run the acceptance checks")
    p.add_argument("--preset", default="desk")
    p.add_argument("--only", default=None, help="comma-separated check numbers")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_suite)
    return parser


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return str(obj)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, passed = args.func(args)
    except ConfigError as exc:
        _emit({"command": args.command, "error": type(exc).__name__, "message": str(exc)},
              None)
        return EXIT_CONFIG
    except BergtoepError as exc:
        _emit({"command": args.command, "error": type(exc).__name__, "message": str(exc)},
              None)
        return EXIT_NUMERIC
    if passed is not None:
        report["passed"] = bool(passed)
    _emit(report, getattr(args, "out", None))
    return EXIT_OK if passed in (None, True) else EXIT_BAND


if __name__ == "__main__":
    sys.exit(main())
