"""Compare the norm of Toeplitz sections with the Carleson-block quotient.

Runs the twelve-measure family through both sides for two weights and
prints the ratio per measure; the ratio staying inside a fixed band while
masses vary over two decades is the point of the exercise.
"""
import numpy as np

from bergtoep import build_basis, carleson_quotient, dyadic_partition, section_spectrum
from bergtoep import toeplitz_section, WeightTransforms, parse_weight
from bergtoep.suite import measure_family

part = dyadic_partition(1, 10)
family = measure_family()

for spec in ("std:alpha=0", "logpow:beta=2"):
    w = WeightTransforms(parse_weight(spec))
    basis = build_basis("A2", w, 63)
    print(f"\n{spec}")
    print(f"{'measure':>8} {'mass':>9} {'section':>10} {'quotient':>10} {'ratio':>7}")
    ratios = []
    for i, mu in enumerate(family):
        top = section_spectrum(toeplitz_section(basis, mu)).max
        quot = carleson_quotient(w, mu, 2, 2, part).headline
        ratios.append(top / quot)
        print(f"{i:>8d} {mu.total_mass:9.3f} {top:10.4f} {quot:10.4f} {top / quot:7.3f}")
    ratios = np.array(ratios)
    print(f"band constant: {max(ratios.max(), 1 / ratios.min()):.2f}")
