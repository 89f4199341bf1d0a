"""Alternating least squares for coupled factorizations."""
import numpy as np

from ..model import CoupledDataset, objective
from ..tensor import khatri_rao_complement, matricize
from .config import FitResult, StopConfig, StopReason
from .linalg import solve_normal_equations
from .ncg import _initial_model

__all__ = ["cmtf_als", "als_sweep"]


def _gram_product(factors, skip):
    """Hadamard product of ``F.T @ F`` over all factors except `skip`."""
    rank = factors[0].shape[1]
    out = np.ones((rank, rank))
    for k, f in enumerate(factors):
        if k != skip:
            out *= f.T @ f
    return out


RESCALE_MODES = ("preserve", "literal", "none")
ROUNDING_FLOOR = (1e3 * np.finfo(float).eps) ** 2


def _rescale(model, first, how):
    """Normalize factor matrices to unit Frobenius norm.

    ``"literal"`` divides every factor by its norm, which changes the model.
    ``"preserve"`` normalizes every tensor factor except `first`, moves the
    removed scale into `first` and compensates the side blocks sharing either
    factor through their last own factor, so the model is unchanged.  Within
    each side block the own factors are normalized into the last one.
    """
    if how == "none":
        return
    if how == "literal":
        for f in model.factors + [v for vs in model.side_factors for v in vs]:
            nrm = np.linalg.norm(f)
            if nrm > 0:
                f /= nrm
        return
    for n, f in enumerate(model.factors):
        nrm = np.linalg.norm(f)
        if n == first or nrm == 0:
            continue
        f /= nrm
        model.factors[first] *= nrm
        for mode, vs in zip(model.modes, model.side_factors):
            if mode == n:
                vs[-1] *= nrm
            if mode == first:
                vs[-1] /= nrm
    for vs in model.side_factors:
        scale = 1.0
        for v in vs[:-1]:
            nrm = np.linalg.norm(v)
            if nrm > 0:
                v /= nrm
                scale *= nrm
        vs[-1] *= scale


def als_sweep(data, model, rescale="preserve"):
    """One in-place sweep: rescale, coupled modes, uncoupled modes, side factors."""
    factors = model.factors
    coupled = sorted(set(data.modes))
    order = coupled + [n for n in range(len(factors)) if n not in coupled]
    _rescale(model, order[0], rescale)
    for n in order:
        gram = _gram_product(factors, n)
        rhs = matricize(data.tensor, n) @ khatri_rao_complement(factors, n)
        for s, side in enumerate(data.sides):
            if side.mode != n:
                continue
            block = model.side_factor_list(s)
            gram = gram + _gram_product(block, 0)
            rhs = rhs + matricize(side.data, 0) @ khatri_rao_complement(block, 0)
        factors[n] = solve_normal_equations(gram, rhs)
    for s, side in enumerate(data.sides):
        for k in range(1, side.data.ndim):
            block = model.side_factor_list(s)
            rhs = matricize(side.data, k) @ khatri_rao_complement(block, k)
            model.side_factors[s][k - 1] = solve_normal_equations(_gram_product(block, k), rhs)
    return model


def cmtf_als(data, rank, init=None, random_state=None, stop=None, rescale="preserve"):
    """Fit a coupled model by alternating least squares.

    Each sweep rescales the factor matrices to unit Frobenius norm and then
    solves exactly for one factor at a time, coupled modes first.  A factor shared with side
    blocks is solved from the stacked system of the tensor unfolding and the
    side unfoldings.

    Parameters
    ----------
    data : CoupledDataset
        Must not carry a mask.
    rank : int
    init : {"svd", "random"} or CmtfModel, default "svd"
        See :func:`cmtf_opt`.
    random_state : int or numpy Generator, optional
    stop : StopConfig, optional
        Only ``rel_func_tol`` and ``max_iterations`` are used; the default
        allows 10^4 sweeps.  A fit whose objective falls to rounding level
        relative to the data also stops with ``RelFuncTol``.
    rescale : {"preserve", "literal", "none"}, default "preserve"
        How factors are normalized at the start of each sweep.  ``"literal"``
        rescales every factor independently; it changes the model between
        sweeps and the objective trace is then no longer monotone.

    Returns
    -------
    FitResult
        ``func_evals`` counts objective evaluations, one per sweep plus the
        initial one.
    """
    if not isinstance(data, CoupledDataset):
        raise TypeError("data must be a CoupledDataset")
    if data.mask is not None:
        raise ValueError("ALS does not support masked data; use cmtf_opt")
    if rescale not in RESCALE_MODES:
        raise ValueError(f"rescale must be one of {RESCALE_MODES}")
    stop = stop or StopConfig.for_als()
    model = _initial_model(data, rank, init, random_state)

    # below this the objective is rounding noise and its relative change is meaningless
    floor = ROUNDING_FLOOR * 0.5 * (np.sum(data.tensor ** 2) + sum(np.sum(s.data ** 2) for s in data.sides))
    f = objective(data, model)
    trace = [f]
    reason = None
    iters = 0
    while reason is None:
        if iters >= stop.max_iterations:
            reason = StopReason.MAX_ITERATIONS
            break
        als_sweep(data, model, rescale)
        iters += 1
        f_old, f = f, objective(data, model)
        trace.append(f)
        if f <= floor or abs(f_old - f) / f_old <= stop.rel_func_tol:
            reason = StopReason.REL_FUNC_TOL
    return FitResult(model=model, objective_trace=trace, stop_reason=reason,
                     iterations=iters, func_evals=iters + 1)
