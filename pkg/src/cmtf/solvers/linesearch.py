"""Moré-Thuente line search for the strong Wolfe conditions.

Direct port of the MINPACK ``cvsrch``/``cstep`` pair: a safeguarded
cubic/quadratic interpolation search that keeps an interval of uncertainty
and terminates once

    f(x + t d) <= f(x) + c1 t g'd     and     |g(x + t d)'d| <= c2 |g'd|.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["LineSearchResult", "more_thuente"]


@dataclass
class LineSearchResult:
    """Outcome of a line search.

    ``info`` follows MINPACK: 1 strong Wolfe satisfied, 2 interval below
    ``xtol``, 3 trial cap reached, 4 step at ``step_min``, 5 step at
    ``step_max``, 6 rounding errors prevent progress.
    """

    step: float
    f: float
    g: np.ndarray
    info: int
    nfev: int

    @property
    def ok(self):
        return self.info == 1


def _cstep(stx, fx, dx, sty, fy, dy, stp, fp, dp, brackt, stpmin, stpmax):
    info = 0
    if (brackt and (stp <= min(stx, sty) or stp >= max(stx, sty))) or dx * (stp - stx) >= 0 or stpmax < stpmin:
        return stx, fx, dx, sty, fy, dy, stp, brackt, info
    sgnd = dp * np.sign(dx)

    if fp > fx:
        # higher function value: the minimum is bracketed
        info = 1
        bound = True
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt((theta / s) ** 2 - (dx / s) * (dp / s))
        if stp < stx:
            gamma = -gamma
        p = (gamma - dx) + theta
        q = ((gamma - dx) + gamma) + dp
        stpc = stx + (p / q) * (stp - stx)
        stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2) * (stp - stx)
        stpf = stpc if abs(stpc - stx) < abs(stpq - stx) else stpc + (stpq - stpc) / 2
        brackt = True
    elif sgnd < 0:
        # derivatives of opposite sign: the minimum is bracketed
        info = 2
        bound = False
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt((theta / s) ** 2 - (dx / s) * (dp / s))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = ((gamma - dp) + gamma) + dx
        stpc = stp + (p / q) * (stx - stp)
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
        brackt = True
    elif abs(dp) < abs(dx):
        # derivative decreases in magnitude
        info = 3
        bound = True
        theta = 3 * (fx - fp) / (stp - stx) + dx + dp
        s = max(abs(theta), abs(dx), abs(dp))
        gamma = s * np.sqrt(max(0.0, (theta / s) ** 2 - (dx / s) * (dp / s)))
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = (gamma + (dx - dp)) + gamma
        r = p / q
        if r < 0 and gamma != 0:
            stpc = stp + r * (stx - stp)
        elif stp > stx:
            stpc = stpmax
        else:
            stpc = stpmin
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        if brackt:
            stpf = stpc if abs(stp - stpc) < abs(stp - stpq) else stpq
        else:
            stpf = stpc if abs(stp - stpc) > abs(stp - stpq) else stpq
    else:
        # derivative does not decrease in magnitude
        info = 4
        bound = False
        if brackt:
            theta = 3 * (fp - fy) / (sty - stp) + dy + dp
            s = max(abs(theta), abs(dy), abs(dp))
            gamma = s * np.sqrt((theta / s) ** 2 - (dy / s) * (dp / s))
            if stp > sty:
                gamma = -gamma
            p = (gamma - dp) + theta
            q = ((gamma - dp) + gamma) + dy
            stpf = stp + (p / q) * (sty - stp)
        elif stp > stx:
            stpf = stpmax
        else:
            stpf = stpmin

    if fp > fx:
        sty, fy, dy = stp, fp, dp
    else:
        if sgnd < 0:
            sty, fy, dy = stx, fx, dx
        stx, fx, dx = stp, fp, dp

    stpf = max(stpmin, min(stpmax, stpf))
    stp = stpf
    if brackt and bound:
        if sty > stx:
            stp = min(stx + 0.66 * (sty - stx), stp)
        else:
            stp = max(stx + 0.66 * (sty - stx), stp)
    return stx, fx, dx, sty, fy, dy, stp, brackt, info


def more_thuente(fun, x, f, g, d, step, config):
    """Search along `d` from `x` for a step satisfying the strong Wolfe conditions.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (f, g)``.
    x, g : ndarray
        Current point and gradient.
    f : float
        Current objective value.
    d : ndarray
        Search direction; must satisfy ``g @ d < 0``.
    step : float
        Initial trial step.
    config : LineSearchConfig

    Returns
    -------
    LineSearchResult
        On failure the best point seen along the search is not tracked; the
        result holds the last evaluated trial, as MINPACK does.
    """
    ftol, gtol, xtol = config.c1, config.c2, config.xtol
    stpmin, stpmax, maxfev = config.step_min, config.step_max, config.max_trials
    dginit = float(g @ d)
    if dginit >= 0:
        raise ValueError("search direction is not a descent direction")

    brackt = False
    stage1 = True
    infoc = 1
    nfev = 0
    finit = f
    dgtest = ftol * dginit
    width = stpmax - stpmin
    width1 = 2 * width
    stx, fx, dgx = 0.0, finit, dginit
    sty, fy, dgy = 0.0, finit, dginit
    stp = step

    while True:
        if brackt:
            stmin, stmax = min(stx, sty), max(stx, sty)
        else:
            stmin, stmax = stx, stp + 4.0 * (stp - stx)
        stp = min(max(stp, stpmin), stpmax)
        if ((brackt and (stp <= stmin or stp >= stmax)) or nfev >= maxfev - 1 or infoc == 0
                or (brackt and stmax - stmin <= xtol * stmax)):
            stp = stx

        f, g = fun(x + stp * d)
        nfev += 1
        dg = float(g @ d)
        ftest1 = finit + stp * dgtest

        info = 0
        if (brackt and (stp <= stmin or stp >= stmax)) or infoc == 0:
            info = 6
        if stp == stpmax and f <= ftest1 and dg <= dgtest:
            info = 5
        if stp == stpmin and (f > ftest1 or dg >= dgtest):
            info = 4
        if nfev >= maxfev:
            info = 3
        if brackt and stmax - stmin <= xtol * stmax:
            info = 2
        if f <= ftest1 and abs(dg) <= gtol * (-dginit):
            info = 1
        if not np.isfinite(f):
            info = 6
        if info:
            return LineSearchResult(stp, f, g, info, nfev)

        if stage1 and f <= ftest1 and dg >= min(ftol, gtol) * dginit:
            stage1 = False

        if stage1 and f <= fx and f > ftest1:
            # modified function keeps the search inside the sufficient decrease region
            fm = f - stp * dgtest
            fxm = fx - stx * dgtest
            fym = fy - sty * dgtest
            dgm = dg - dgtest
            dgxm = dgx - dgtest
            dgym = dgy - dgtest
            stx, fxm, dgxm, sty, fym, dgym, stp, brackt, infoc = _cstep(
                stx, fxm, dgxm, sty, fym, dgym, stp, fm, dgm, brackt, stmin, stmax
            )
            fx = fxm + stx * dgtest
            fy = fym + sty * dgtest
            dgx = dgxm + dgtest
            dgy = dgym + dgtest
        else:
            stx, fx, dgx, sty, fy, dgy, stp, brackt, infoc = _cstep(
                stx, fx, dgx, sty, fy, dgy, stp, f, dg, brackt, stmin, stmax
            )

        if brackt:
            if abs(sty - stx) >= 0.66 * width1:
                stp = stx + 0.5 * (sty - stx)
            width1 = width
            width = abs(sty - stx)
