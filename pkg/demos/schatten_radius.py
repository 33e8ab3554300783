"""How the dyadic Schatten sum compares with the ball-integral version as
the Bergman radius grows.

A single unit point mass is enough to see it: the ratio depends on the
radius and on p, and at radius 1 it drops far below 1/20 once p >= 1.5.
"""
import numpy as np

from bergtoep import DiscreteMeasure, WeightTransforms, dyadic_partition, parse_weight
from bergtoep import schatten_dyadic, schatten_integral

w = WeightTransforms(parse_weight("std:alpha=0"))
part = dyadic_partition(1, 10)

print(f"{'|a|':>5} {'p':>4} " + " ".join(f"{'r=' + str(r):>9}" for r in (0.3, 0.5, 1.0)))
for a in (0.3, 0.6, 0.85, 0.95):
    mu = DiscreteMeasure.delta(a)
    for p in (1.0, 1.5, 2.0):
        dyadic = schatten_dyadic(w, mu, part, p).headline
        row = [dyadic / schatten_integral(w, mu, p, r).headline for r in (0.3, 0.5, 1.0)]
        print(f"{a:5.2f} {p:4.1f} " + " ".join(f"{v:9.4f}" for v in row))
