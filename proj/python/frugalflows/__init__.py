"""Frugal flow models.

Fits normalising-flow models that jointly learn a marginal causal effect, a
covariate copula and a propensity score from observational tabular data, then
generates synthetic causal benchmarks with exactly specified average treatment
effects and controllable unobserved confounding.
"""

from _frugalflows import (
    FlowNumericError,
    FlowTrainingError,
    FlowValidationError,
    FrugalFit,
    estimate_ates,
    fit_frugal_flow,
    gaussian_copula_pair,
    ks_uniform,
    simulate_dgp,
    spearman_to_pearson,
)

__all__ = [
    "FlowNumericError",
    "FlowTrainingError",
    "FlowValidationError",
    "FrugalFit",
    "estimate_ates",
    "fit_frugal_flow",
    "gaussian_copula_pair",
    "ks_uniform",
    "simulate_dgp",
    "spearman_to_pearson",
]
