"""Singular values of the Volterra operator with symbol z, and its Besov side.

The singular values of the degree-200 section fall off like 1/k, so the
Schatten sums converge for p > 1 and creep up like log D at p = 1.  The
Besov integral shows the same split: finite at p = 2, divergent at p = 1.
"""
import numpy as np

from bergtoep import WeightTransforms, besov_integral, build_basis, parse_polynomial
from bergtoep import parse_weight, section_spectrum, volterra_section

w = WeightTransforms(parse_weight("std:alpha=0"))
g = parse_polynomial("z")

sv = section_spectrum(volterra_section(build_basis("A2", w, 200), g)).as_array()
k = np.arange(10, 101)
slope = np.polyfit(np.log(k), np.log(sv[k]), 1)[0]
print(f"log-log slope of sigma_k over k = 10..100: {slope:.3f}")

for degree in (50, 100, 200):
    sv = section_spectrum(volterra_section(build_basis("A2", w, degree), g)).as_array()
    print(f"D = {degree:3d}   sum sigma = {sv.sum():.4f}   sum sigma^2 = {np.sum(sv**2):.6f}")

for p in (1.0, 1.5, 2.0, 3.0):
    rep = besov_integral(g, p)
    print(f"Besov integral p = {p:.1f}: {rep.headline:.10g}  (growth slope {rep.extras['slope']:.3g})")
