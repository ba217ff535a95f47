"""Peaks-over-threshold forecasting: python surface of the C++ core."""

from potcast._core import (  # noqa: F401
    DomainError,
    InputError,
    NumericalError,
    extract_excesses,
    extreme_level,
    extreme_quantile,
    fit,
    gp_cdf,
    gp_density,
    gp_loglik,
    gp_quantile,
    gp_sample,
    hellinger_gp,
    peak_density,
    predictive_interval,
    sample_posterior,
)

__all__ = [
    "DomainError",
    "InputError",
    "NumericalError",
    "extract_excesses",
    "extreme_level",
    "extreme_quantile",
    "fit",
    "gp_cdf",
    "gp_density",
    "gp_loglik",
    "gp_quantile",
    "gp_sample",
    "hellinger_gp",
    "peak_density",
    "predictive_interval",
    "sample_posterior",
]
