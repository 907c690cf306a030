"""Log-price regression: design matrices, OLS/WLS, and diagnostics."""

from walkgap.stats.design import DesignMatrix, ModelSpec, Observation, build_design_matrix
from walkgap.stats.diagnostics import VifResult, WhiteTestResult, durbin_watson, vif, white_test
from walkgap.stats.linear import FitResult, estimate_weights, ols_fit, wls_fit
from walkgap.stats.report import fit_to_dict, format_table

__all__ = [
    "DesignMatrix", "ModelSpec", "Observation", "build_design_matrix",
    "VifResult", "WhiteTestResult", "durbin_watson", "vif", "white_test",
    "FitResult", "estimate_weights", "ols_fit", "wls_fit",
    "fit_to_dict", "format_table",
]
