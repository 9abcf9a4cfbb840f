"""Numerical verification of stability estimates for the Gaussian log-Sobolev inequality.

The package computes the log-Sobolev deficit, Wasserstein and ``W^{1,1}``
distances to the standard Gaussian, and checks stability inequalities
relating them on one-dimensional densities and their products.
"""
from .densities import (
    Density1D,
    ProductDensity,
    UDensity1D,
    make_custom,
    make_gaussian_family,
    make_mixture,
    make_tilt,
    normalize_center,
    piecewise_density,
    product_density,
)
from .errors import LSIError, NumericalError, PreconditionViolation, UsageError
from .functionals import (
    deficit,
    deficit_star,
    entropy,
    exp_moment,
    fisher_info,
    second_moment,
    sobolev11_dist,
    sobolev11_dist_u,
    to_f,
    to_u,
)
from .gauss_quad import Estimate, QuadratureRule, default_rule, integrate_gauss
from .stability import (
    StabilityReport,
    check_tensorization,
    check_thm1_density,
    check_thm1_u,
    check_w1_stability,
    sharpness_sweep,
)
from .transport1d import brenier_map, transport_gap, wasserstein1, wasserstein_p

__version__ = "0.1.0"


__all__ = [
    "Density1D",
    "ProductDensity",
    "UDensity1D",
    "make_custom",
    "make_gaussian_family",
    "make_mixture",
    "make_tilt",
    "normalize_center",
    "piecewise_density",
    "product_density",
    "LSIError",
    "NumericalError",
    "PreconditionViolation",
    "UsageError",
    "deficit",
    "deficit_star",
    "entropy",
    "exp_moment",
    "fisher_info",
    "second_moment",
    "sobolev11_dist",
    "sobolev11_dist_u",
    "to_f",
    "to_u",
    "Estimate",
    "QuadratureRule",
    "default_rule",
    "integrate_gauss",
    "StabilityReport",
    "check_tensorization",
    "check_thm1_density",
    "check_thm1_u",
    "check_w1_stability",
    "sharpness_sweep",
    "brenier_map",
    "transport_gap",
    "wasserstein1",
    "wasserstein_p",
]
