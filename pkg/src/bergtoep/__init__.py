"""Numerical weighted Bergman spaces on the unit ball: kernels, Toeplitz and
Volterra sections, and the computable statistics behind their boundedness,
compactness and Schatten-class criteria."""

from .basis import MultiIndex, OrthoBasis, Polynomial, build_basis, parse_polynomial
from .criteria import (CriterionReport, besov_integral, besov_statistic, berezin_quotient,
                       carleson_quotient, qlessp_statistic, schatten_dyadic, schatten_integral)
from .errors import (BergtoepError, ConfigError, CoverageFailure, DegenerateWeight, DomainError,
                     InvalidInterval, LevelOverflow, MassOverflow, NegativeEigenvalue,
                     NonConvergent, NotUnit, SizeExceeded, TruncationFailure)
from .geometry import PHBall, cap_cover, dyadic_partition, pseudo_hyperbolic
from .kernels import KernelSeries, bergman_kernel, dirichlet_kernel, kernel_eval, kernel_norm
from .numerics import HermitianMatrix, Spectrum, hermitian_eigenvalues, integrate_radial
from .operators import (DiscreteMeasure, RadialDensityMeasure, section_schatten, section_spectrum,
                        toeplitz_section, volterra_measure, volterra_section, weight_measure)
from .weights import RadialWeight, WeightTransforms, classify, parse_weight

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
