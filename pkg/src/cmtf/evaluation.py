"""Scoring fitted coupled models against a known ground truth."""
import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.special import stdtr

from .tensor import kruskal_to_full

__all__ = [
    "WeightedKruskal",
    "FmsReport",
    "TTestResult",
    "normalize_model",
    "fms",
    "success",
    "success_threshold",
    "tcs",
    "paired_t_test",
]

EXHAUSTIVE_MAX_RANK = 6


@dataclass
class WeightedKruskal:
    """A coupled model with unit-norm columns and per-component weights.

    Attributes
    ----------
    factors : list of ndarray
        Tensor factors followed by the side-block factors, every column of
        unit two-norm.
    tensor_weights : ndarray of shape (R,)
        Product of the removed tensor-factor column norms.
    side_weights : ndarray of shape (S, R)
        Same for each side block (shared tensor factor included).
    modes : tuple of int
        Coupled tensor mode of each side block.
    order : int
        Number of tensor factors.
    side_orders : tuple of int
        Number of own factors of each side block.
    """

    factors: list
    tensor_weights: np.ndarray
    side_weights: np.ndarray
    modes: tuple
    order: int
    side_orders: tuple

    @property
    def weights(self):
        """Per-component weight: tensor weight plus every side weight."""
        return self.tensor_weights + self.side_weights.sum(axis=0)

    @property
    def rank(self):
        return self.factors[0].shape[1]

    def _side_slice(self, s):
        start = self.order + sum(self.side_orders[:s])
        return self.factors[start:start + self.side_orders[s]]

    def full(self):
        return kruskal_to_full(self.factors[:self.order], self.tensor_weights)

    def side_full(self, s):
        block = [self.factors[self.modes[s]]] + self._side_slice(s)
        return kruskal_to_full(block, self.side_weights[s])


class FmsReport(NamedTuple):
    score: float
    per_component: list
    assignment: tuple


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float
    degenerate: bool


def normalize_model(model):
    """Move every column norm of `model` into per-component weights.

    Signs are canonicalized so the first tensor factor has a nonnegative
    leading entry in each column; the compensating flips go to the last
    tensor factor and to the last own factor of any side block whose sign
    would otherwise change.

    Raises
    ------
    ValueError
        If any factor column is exactly zero.
    """
    factors = [f.copy() for f in model.factors]
    sides = [[v.copy() for v in vs] for vs in model.side_factors]
    order = len(factors)
    rank = model.rank
    for f in factors + [v for vs in sides for v in vs]:
        if np.any(np.linalg.norm(f, axis=0) == 0):
            raise ValueError("cannot normalize a model with an all-zero column")

    norms = [np.linalg.norm(f, axis=0) for f in factors]
    lam = np.prod(norms, axis=0)
    alpha = np.zeros((len(sides), rank))
    for s, vs in enumerate(sides):
        w = norms[model.modes[s]].copy()
        for v in vs:
            w = w * np.linalg.norm(v, axis=0)
        alpha[s] = w

    factors = [f / n for f, n in zip(factors, norms)]
    sides = [[v / np.linalg.norm(v, axis=0) for v in vs] for vs in sides]

    flip = factors[0][0] < 0
    if np.any(flip):
        sign = np.where(flip, -1.0, 1.0)
        factors[0] = factors[0] * sign
        if order > 1:
            factors[-1] = factors[-1] * sign
        for s, vs in enumerate(sides):
            touched = (model.modes[s] == 0) + (order > 1 and model.modes[s] == order - 1)
            if touched % 2:
                vs[-1] = vs[-1] * sign

    return WeightedKruskal(
        factors=factors + [v for vs in sides for v in vs],
        tensor_weights=lam,
        side_weights=alpha,
        modes=tuple(model.modes),
        order=order,
        side_orders=tuple(len(vs) for vs in sides),
    )


def _score_matrix(truth, estimate, relaxed):
    congruence = np.ones((truth.rank, estimate.rank))
    for t, e in zip(truth.factors, estimate.factors):
        congruence = congruence * (t.T @ e)
    congruence = np.abs(congruence)
    if relaxed:
        return congruence
    xi = truth.weights[:, None]
    xi_hat = estimate.weights[None, :]
    top = np.maximum(xi, xi_hat)
    with np.errstate(invalid="ignore", divide="ignore"):
        penalty = np.where(top > 0, 1 - np.abs(xi - xi_hat) / top, 1.0)
    return penalty * congruence


def _bottleneck_exhaustive(scores):
    r, r_hat = scores.shape
    best, best_perm = -np.inf, None
    rows = np.arange(r)
    for perm in itertools.permutations(range(r_hat), r):
        value = scores[rows, perm].min()
        if value > best:
            best, best_perm = value, perm
    return tuple(best_perm)


def _bottleneck_matching(scores):
    r, r_hat = scores.shape
    levels = np.unique(scores)
    lo, hi = 0, len(levels) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((scores >= levels[mid]).astype(int))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            best = match
            lo = mid + 1
        else:
            hi = mid - 1
    return tuple(int(m) for m in best)


def fms(truth, estimate, relaxed=False):
    """Factor match score of `estimate` against `truth`.

    For a true component r matched to estimated component q the score is
    ``(1 - |xi_r - xi_q| / max(xi_r, xi_q)) * |prod_k t_k[:, r] . e_k[:, q]|``
    with the product over all factor matrices.  True components are matched
    injectively to estimated ones so that the smallest component score is as
    large as possible; that smallest score is the FMS.  Surplus estimated
    components are ignored.

    Parameters
    ----------
    truth, estimate : WeightedKruskal
    relaxed : bool, default False
        Drop the weight term and score on the congruence product alone.

    Returns
    -------
    FmsReport
    """
    if len(truth.factors) != len(estimate.factors) or any(
            t.shape[0] != e.shape[0] for t, e in zip(truth.factors, estimate.factors)):
        raise ValueError("truth and estimate have different factor structures")
    if estimate.rank < truth.rank:
        raise ValueError("estimate has fewer components than the truth")
    scores = _score_matrix(truth, estimate, relaxed)
    if estimate.rank <= EXHAUSTIVE_MAX_RANK:
        assignment = _bottleneck_exhaustive(scores)
    else:
        assignment = _bottleneck_matching(scores)
    per = [(q, float(scores[r, q])) for r, q in enumerate(assignment)]
    return FmsReport(min(p[1] for p in per), per, assignment)


def success_threshold(n_factor_matrices):
    if n_factor_matrices < 1:
        raise ValueError("n_factor_matrices must be at least 1")
    return 0.99 ** n_factor_matrices


def success(score, n_factor_matrices):
    """Whether `score` clears the ``0.99 ** n_factor_matrices`` threshold."""
    return bool(score > success_threshold(n_factor_matrices))


def tcs(original, mask, reconstructed):
    """Relative reconstruction error over the missing entries only."""
    original = np.asarray(original, dtype=float)
    mask = np.asarray(mask, dtype=float)
    reconstructed = np.asarray(reconstructed, dtype=float)
    if not original.shape == mask.shape == reconstructed.shape:
        raise ValueError("original, mask and reconstruction must share a shape")
    missing = mask == 0
    if not missing.any():
        raise ValueError("mask has no missing entries")
    denom = np.linalg.norm(original[missing])
    if denom == 0:
        raise ValueError("missing entries of the original are all zero")
    return float(np.linalg.norm(original[missing] - reconstructed[missing]) / denom)


def paired_t_test(a, b):
    """Two-sided paired-sample t-test on ``a - b``.

    Degenerate inputs follow fixed conventions: identical samples give
    ``t = 0, p = 1``; constant nonzero differences give ``t = +-inf, p = 0``.
    Both are flagged ``degenerate``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("paired_t_test needs two equal-length samples of size >= 2")
    diff = a - b
    n = diff.size
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0:
        if mean == 0:
            return TTestResult(0.0, 1.0, True)
        return TTestResult(float(np.copysign(np.inf, mean)), 0.0, True)
    t = mean / (sd / np.sqrt(n))
    p = 2.0 * stdtr(n - 1, -abs(t))
    return TTestResult(float(t), float(min(p, 1.0)), False)
