"""All-at-once fitting by nonlinear conjugate gradient."""
from dataclasses import replace

import numpy as np

from ..model import CoupledDataset, CmtfModel, flatten, objective_and_gradient, random_model, svd_model, unflatten
from .config import FitResult, LineSearchConfig, StopConfig, StopReason
from .linesearch import more_thuente

__all__ = ["ncg", "hestenes_stiefel", "cmtf_opt"]


def hestenes_stiefel(g_new, g_old, d_old):
    """Hestenes-Stiefel coefficient, or None when its denominator vanishes."""
    y = g_new - g_old
    denom = float(d_old @ y)
    if denom == 0.0 or not np.isfinite(denom):
        return None
    return float(g_new @ y) / denom


def _relative_change(f_old, f):
    if f_old == 0.0:
        return 0.0 if f == 0.0 else np.inf
    return abs(f_old - f) / abs(f_old)


def ncg(fun, x0, stop=None, line_search=None, restart_every=None):
    """Minimize ``fun`` with Hestenes-Stiefel NCG and a Moré-Thuente line search.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (f, g)``.
    x0 : ndarray
    stop : StopConfig, optional
    line_search : LineSearchConfig, optional
    restart_every : int, optional
        Reset to steepest descent after this many iterations; defaults to the
        problem dimension.

    Returns
    -------
    x : ndarray
    info : dict
        ``objective_trace``, ``grad_norm_trace``, ``stop_reason``,
        ``iterations`` and ``func_evals``.
    """
    stop = stop or StopConfig()
    line_search = line_search or LineSearchConfig()
    x = np.array(x0, dtype=float)
    n = x.size
    restart_every = restart_every or n

    f, g = fun(x)
    nfev = 1
    trace = [f]
    gtrace = [float(np.linalg.norm(g))]
    iters = 0
    reason = None

    if gtrace[-1] / n <= stop.grad_norm_tol:
        reason = StopReason.GRAD_NORM_TOL
    d = -g
    step = line_search.initial_step
    since_restart = 0

    while reason is None:
        if iters >= stop.max_iterations:
            reason = StopReason.MAX_ITERATIONS
            break
        if nfev >= stop.max_func_evals:
            reason = StopReason.MAX_FUNC_EVALS
            break
        trials = min(line_search.max_trials, stop.max_func_evals - nfev)
        res = more_thuente(fun, x, f, g, d, step, replace(line_search, max_trials=trials))
        nfev += res.nfev

        if not res.ok:
            steepest = since_restart == 0 and np.array_equal(d, -g)
            if not steepest and nfev < stop.max_func_evals:
                d = -g
                step = line_search.initial_step
                since_restart = 0
                continue
            if np.isfinite(res.f) and res.f < f:
                x = x + res.step * d
                f, g = res.f, res.g
                iters += 1
                trace.append(f)
                gtrace.append(float(np.linalg.norm(g)))
            reason = StopReason.MAX_FUNC_EVALS if nfev >= stop.max_func_evals else StopReason.LINE_SEARCH_FAILURE
            break

        x = x + res.step * d
        f_old, g_old, d_old = f, g, d
        f, g = res.f, res.g
        iters += 1
        trace.append(f)
        gtrace.append(float(np.linalg.norm(g)))

        if gtrace[-1] / n <= stop.grad_norm_tol:
            reason = StopReason.GRAD_NORM_TOL
            break
        if _relative_change(f_old, f) <= stop.rel_func_tol:
            reason = StopReason.REL_FUNC_TOL
            break

        since_restart += 1
        beta = hestenes_stiefel(g, g_old, d_old)
        if beta is None or since_restart >= restart_every:
            d = -g
            since_restart = 0
        else:
            d = -g + beta * d_old
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            since_restart = 0
            slope = -float(g @ g)
        step = res.step * float(g_old @ d_old) / slope
        step = min(max(step, line_search.step_min), line_search.step_max)

    return x, {
        "objective_trace": trace,
        "grad_norm_trace": gtrace,
        "stop_reason": reason,
        "iterations": iters,
        "func_evals": nfev,
    }


INIT_METHODS = ("svd", "random")


def _initial_model(data, rank, init, random_state):
    if int(rank) != rank or rank < 1:
        raise ValueError("rank must be a positive integer")
    spec = data.spec(int(rank))
    if init is None:
        init = "svd"
    if isinstance(init, str):
        if init == "svd":
            return svd_model(data, int(rank), random_state)
        if init == "random":
            return random_model(spec, random_state)
        raise ValueError(f"init must be a CmtfModel or one of {INIT_METHODS}")
    if not isinstance(init, CmtfModel):
        raise TypeError(f"init must be a CmtfModel or one of {INIT_METHODS}")
    if init.spec != spec:
        raise ValueError(f"initial model {init.spec} does not match the data {spec}")
    return init.copy()


def cmtf_opt(data, rank, init=None, random_state=None, stop=None, line_search=None):
    """Fit a coupled model to all factor matrices at once.

    Masked data (``data.mask`` set) is handled by the weighted objective, so
    entries marked missing do not influence the fit.

    Parameters
    ----------
    data : CoupledDataset
    rank : int
    init : {"svd", "random"} or CmtfModel, default "svd"
        Starting point.  ``"svd"`` uses leading singular vectors of the
        unfoldings, ``"random"`` draws i.i.d. standard normal entries from
        `random_state`.
    random_state : int or numpy Generator, optional
    stop : StopConfig, optional
    line_search : LineSearchConfig, optional

    Returns
    -------
    FitResult
    """
    if not isinstance(data, CoupledDataset):
        raise TypeError("data must be a CoupledDataset")
    model0 = _initial_model(data, rank, init, random_state)
    spec = model0.spec

    def fun(v):
        return objective_and_gradient(data, unflatten(v, spec))

    x, info = ncg(fun, flatten(model0), stop=stop, line_search=line_search)
    return FitResult(
        model=unflatten(x, spec),
        objective_trace=info["objective_trace"],
        stop_reason=info["stop_reason"],
        iterations=info["iterations"],
        func_evals=info["func_evals"],
        grad_norm_trace=info["grad_norm_trace"],
    )
