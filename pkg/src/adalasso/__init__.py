"""Two-stage adaptive Lasso with KKT certificates, design diagnostics and a Monte Carlo harness."""

from .adaptive import AdaptiveConfig, AdaptiveTrace, adaptive_lasso, compute_weights, lambda_n_range, threshold_support
from .core import Constants, Estimate, RegressionProblem, TrueModel, WeightVector, diff_against_truth, validate_problem
from .ggm import GraphEstimate, PrecisionModel, beta_from_precision, select_graph
from .solver import SolverConfig, kkt_residual, reduce_to_standard, solve_lasso, solve_weighted_lasso

__version__ = "0.1.0"
