"""Scikit-learn style front end."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import objective
from .solvers import LineSearchConfig, StopConfig, cmtf_als, cmtf_opt
from .validation import check_dataset, check_rank, check_tensor

__all__ = ["CMTF"]

ALGORITHMS = ("opt", "als")


class CMTF(TransformerMixin, BaseEstimator):
    """Coupled matrix-tensor factorization.

    Fits ``X ~ [[A_0, ..., A_{N-1}]]`` jointly with side blocks that share
    one factor with the tensor.

    Parameters
    ----------
    rank : int, default 3
        Number of components.
    algorithm : {"opt", "als"}, default "opt"
        All-at-once nonlinear conjugate gradient or alternating least squares.
        Only ``"opt"`` accepts a mask.
    coupled_modes : int or sequence of int, optional
        Tensor mode of each side block; mode 0 for all when omitted.
    embedding_mode : int, default 0
        Mode whose factor `transform` returns.
    init : {"svd", "random"}, default "svd"
    tol : float, default 1e-8
        Relative change in objective at which to stop.
    max_iter : int, optional
        Defaults to 1000 for ``"opt"`` and 10000 for ``"als"``.
    max_fun : int, default 10000
        Function-evaluation cap for ``"opt"``.
    grad_tol : float, default 1e-8
        Gradient-norm stop for ``"opt"``, applied to ``||g|| / P``.
    random_state : int, optional

    Attributes
    ----------
    model_ : CmtfModel
    factors_ : list of ndarray
    side_factors_ : list of list of ndarray
    objective_trace_ : list of float
    stop_reason_ : StopReason
    n_iter_ : int
    """

    def __init__(self, rank=3, algorithm="opt", coupled_modes=None, embedding_mode=0, init="svd",
                 tol=1e-8, max_iter=None, max_fun=10000, grad_tol=1e-8, random_state=None):
        self.rank = rank
        self.algorithm = algorithm
        self.coupled_modes = coupled_modes
        self.embedding_mode = embedding_mode
        self.init = init
        self.tol = tol
        self.max_iter = max_iter
        self.max_fun = max_fun
        self.grad_tol = grad_tol
        self.random_state = random_state

    def _stop(self):
        default = 10000 if self.algorithm == "als" else 1000
        return StopConfig(rel_func_tol=self.tol, max_iterations=self.max_iter or default,
                          max_func_evals=self.max_fun, grad_norm_tol=self.grad_tol)

    def fit(self, X, y=None, side_data=None, mask=None):
        """Fit to tensor `X` and optional side blocks.

        `y` is accepted for pipeline compatibility and ignored.
        """
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        rank = check_rank(self.rank)
        data = check_dataset(X, side_data, self.coupled_modes, mask)
        if not 0 <= self.embedding_mode < data.tensor.ndim:
            raise ValueError(f"embedding_mode {self.embedding_mode} out of range")
        if self.algorithm == "als":
            result = cmtf_als(data, rank, init=self.init, random_state=self.random_state, stop=self._stop())
        else:
            result = cmtf_opt(data, rank, init=self.init, random_state=self.random_state,
                              stop=self._stop(), line_search=LineSearchConfig())
        self.model_ = result.model
        self.factors_ = result.model.factors
        self.side_factors_ = result.model.side_factors
        self.objective_trace_ = result.objective_trace
        self.stop_reason_ = result.stop_reason
        self.n_iter_ = result.iterations
        self.n_features_in_ = data.shape[self.embedding_mode]
        return self

    def transform(self, X):
        """Factor of the embedding mode, one row per slice of that mode.

        Factorizations are transductive: `X` must have the fitted tensor's
        shape and is only checked for consistency.
        """
        check_is_fitted(self, "model_")
        shape = tuple(f.shape[0] for f in self.factors_)
        if check_tensor(X).shape != shape:
            raise ValueError(f"X has shape {np.shape(X)}, model was fitted to {shape}")
        return self.factors_[self.embedding_mode].copy()

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform(X)

    def predict(self, X=None):
        """Full reconstructed tensor, which also fills any masked entries."""
        check_is_fitted(self, "model_")
        if X is not None:
            self.transform(X)
        return self.model_.full()

    def reconstruct_side(self, s=0):
        check_is_fitted(self, "model_")
        return self.model_.side_full(s)

    def score(self, X, y=None, side_data=None, mask=None):
        """Negative objective of the fitted model on the given data."""
        check_is_fitted(self, "model_")
        data = check_dataset(X, side_data, self.coupled_modes, mask)
        return -objective(data, self.model_)
