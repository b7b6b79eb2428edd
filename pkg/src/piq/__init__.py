"""Outlier-resistant estimation by quantile thresholding.

Each sample gets its own shift parameter gamma_i; a cardinality constraint
on gamma (and optionally on beta) plus a small ridge term turns any smooth
sample-additive loss into a resistant one.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    ConfigError,
    ConvergenceError,
    DataError,
    DimensionError,
    NonFiniteError,
    NumericalError,
    PiqError,
    UnsupportedError,
)
from .linalg import Dataset, hat_matrix, pseudo_inverse_apply, read_csv, restricted_sup_norm
from .losses import LossModel, huber, huberized_hinge, logistic, parse_loss, quadratic
from .selection import pic_penalty, pic_score, scale_free_pic, tune_q
from .simulate import SimSpec, evaluate, generate, run_replications
from .solvers import CoolingSchedule, Estimate, FitConfig, fit_piq, verify_fixed_point
from .thresholding import ThresholdRule, quantile_threshold

__all__ = [
    "BudgetExceededError", "ConfigError", "ConvergenceError", "CoolingSchedule", "DataError",
    "Dataset", "DimensionError", "Estimate", "FitConfig", "LossModel", "NonFiniteError",
    "NumericalError", "PiqError", "SimSpec", "ThresholdRule", "UnsupportedError", "evaluate",
    "fit_piq", "generate", "hat_matrix", "huber", "huberized_hinge", "logistic", "parse_loss",
    "pic_penalty", "pic_score", "pseudo_inverse_apply", "quadratic", "quantile_threshold",
    "read_csv", "restricted_sup_norm", "run_replications", "scale_free_pic", "tune_q",
    "verify_fixed_point",
]
