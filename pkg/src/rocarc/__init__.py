"""Arc length of the optimal ROC curve: divergence estimation, TV bounds and AUC lower bounds."""

__version__ = "0.1.0"

from .data import GaussianSpec, SampleSet, gen_gaussian_pair, load_csv, split, write_csv
from .divergence import (
    arc_length_estimate, arc_length_quadrature, estimate_divergence_pipeline,
    gaussian_divergences, tv_bounds,
)
from .estimator import FitDiagnostics, SolverConfig, cross_validate, fit_atan_ratio, fit_log_ratio
from .kernel import KernelParams, KernelScoreModel, gram, median_heuristic
from .rocgeom import auc_wmw, ecdf, empirical_roc, mixture_surface_grid, polyline_arc_length
from .twostep import TwoStepModel, two_step_fit

__all__ = [
    "GaussianSpec", "SampleSet", "gen_gaussian_pair", "load_csv", "split", "write_csv",
    "arc_length_estimate", "arc_length_quadrature", "estimate_divergence_pipeline",
    "gaussian_divergences", "tv_bounds", "FitDiagnostics", "SolverConfig", "cross_validate",
    "fit_atan_ratio", "fit_log_ratio", "KernelParams", "KernelScoreModel", "gram",
    "median_heuristic", "auc_wmw", "ecdf", "empirical_roc", "mixture_surface_grid",
    "polyline_arc_length", "TwoStepModel", "two_step_fit",
]
