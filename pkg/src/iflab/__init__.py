"""Dimension theory toolkit for continuous piecewise-linear iterated function systems."""

from .errors import (BadAxis, BadRatio, BudgetExceeded, DimensionMismatch, IflabError,
                     NonConvergence, NoRoot, NotRegular, NotSmall, NotStronglyConnected,
                     ParseError, Reducible, ValidationError)
from .pwl_core import CPLIFS, Interval, PiecewiseLinearMap, check_small, cylinder, invariant_interval
from .generated import SelfSimilarIFS, SimilarityMap, esc_scan, generate_selfsimilar, phi_rho
from .regularity import bdp_constants, point_in_attractor, regularity_order
from .gdifs import (GDIFS, associate_gdifs, entropy_lyapunov, markov_measure, natural_exponent,
                    pressure_matrix, spectral_radius, validate_gdifs)
from .dimension import (box_dimension_estimate, moran_cover, natural_dimension, pressure_direct,
                        s_star, sample_attractor, similarity_dimension)
from .paramscan import derivative_bounds_check, scan_regularity

__version__ = "0.1.0"

__all__ = [
    "BadAxis", "BadRatio", "BudgetExceeded", "DimensionMismatch", "IflabError", "NonConvergence",
    "NoRoot", "NotRegular", "NotSmall", "NotStronglyConnected", "ParseError", "Reducible",
    "ValidationError", "CPLIFS", "Interval", "PiecewiseLinearMap", "check_small", "cylinder",
    "invariant_interval", "SelfSimilarIFS", "SimilarityMap", "esc_scan", "generate_selfsimilar",
    "phi_rho", "bdp_constants", "point_in_attractor", "regularity_order", "GDIFS",
    "associate_gdifs", "entropy_lyapunov", "markov_measure", "natural_exponent",
    "pressure_matrix", "spectral_radius", "validate_gdifs", "box_dimension_estimate",
    "moran_cover", "natural_dimension", "pressure_direct", "s_star", "sample_attractor",
    "similarity_dimension", "derivative_bounds_check", "scan_regularity",
]
