"""Coupled matrix-tensor factorization by all-at-once optimization and ALS."""
from .estimator import CMTF
from .evaluation import fms, normalize_model, paired_t_test, success, tcs
from .model import (CmtfModel, CoupledDataset, CouplingSpec, Side, gradient, objective, objective_and_gradient,
                    random_model, svd_model)
from .solvers import FitResult, LineSearchConfig, StopConfig, StopReason, cmtf_als, cmtf_opt

__version__ = "0.1.0"

__all__ = [
    "CMTF",
    "random_model",
    "svd_model",
    "CmtfModel",
    "CoupledDataset",
    "CouplingSpec",
    "Side",
    "objective",
    "gradient",
    "objective_and_gradient",
    "cmtf_opt",
    "cmtf_als",
    "FitResult",
    "LineSearchConfig",
    "StopConfig",
    "StopReason",
    "normalize_model",
    "fms",
    "success",
    "tcs",
    "paired_t_test",
]
