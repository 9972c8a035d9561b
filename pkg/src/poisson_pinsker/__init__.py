"""Mean-function estimation for periodic inhomogeneous Poisson processes."""

from ._kernels import BACKEND
from .estimate import (EstimatorConfig, SpectralEstimate, cutoff, empirical_coeffs,
                       empirical_mean_eval, pinsker_bandwidth, pinsker_estimate, shrink_weights)
from .model import (CosineBasis, EllipsoidSpec, IntensityModel, ModelError, basis_eval,
                    intensity_cosine_coeff, intensity_eval, raised_cosine, series_eval,
                    sobolev_functional, two_harmonic, validate_model)
from .risk import (H_objective, NumericalError, RiskReport, convergence_sweep, exact_excess,
                   mise_monte_carlo, pinsker_constant, sigma_sq)
from .simulate import (ObservationSet, PeriodPath, count_at, pooled_events, sample_observations,
                       sample_period)

__all__ = [
    "BACKEND", "CosineBasis", "EllipsoidSpec", "EstimatorConfig", "H_objective",
    "IntensityModel", "ModelError", "NumericalError", "ObservationSet", "PeriodPath",
    "RiskReport", "SpectralEstimate", "basis_eval", "convergence_sweep", "count_at", "cutoff",
    "empirical_coeffs", "empirical_mean_eval", "exact_excess", "intensity_cosine_coeff",
    "intensity_eval", "mise_monte_carlo", "pinsker_bandwidth", "pinsker_constant",
    "pinsker_estimate", "pooled_events", "raised_cosine", "sample_observations",
    "sample_period", "series_eval", "shrink_weights", "sigma_sq", "sobolev_functional",
    "two_harmonic", "validate_model",
]
