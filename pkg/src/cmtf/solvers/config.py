"""Stopping rules, line-search settings and the fit result container."""
from dataclasses import dataclass, field
from enum import Enum

from ..model import CmtfModel

__all__ = ["StopReason", "StopConfig", "LineSearchConfig", "FitResult"]


class StopReason(str, Enum):
    REL_FUNC_TOL = "RelFuncTol"
    MAX_ITERATIONS = "MaxIterations"
    MAX_FUNC_EVALS = "MaxFuncEvals"
    GRAD_NORM_TOL = "GradNormTol"
    LINE_SEARCH_FAILURE = "LineSearchFailure"

    def __str__(self):
        return self.value

    @property
    def converged(self):
        """True when the run ended on a tolerance rather than a cap or failure."""
        return self in (StopReason.REL_FUNC_TOL, StopReason.GRAD_NORM_TOL)


@dataclass(frozen=True)
class StopConfig:
    """Termination settings.

    ``grad_norm_tol`` is compared with ``||grad||_2 / P`` where P is the number
    of parameters; it and ``max_func_evals`` only apply to the gradient solver.
    """

    rel_func_tol: float = 1e-8
    max_iterations: int = 1000
    max_func_evals: int = 10000
    grad_norm_tol: float = 1e-8

    def __post_init__(self):
        if self.rel_func_tol <= 0 or self.grad_norm_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1 or self.max_func_evals < 1:
            raise ValueError("iteration and evaluation caps must be at least 1")

    @classmethod
    def for_als(cls, **kwargs):
        kwargs.setdefault("max_iterations", 10000)
        return cls(**kwargs)


@dataclass(frozen=True)
class LineSearchConfig:
    c1: float = 1e-4
    c2: float = 1e-2
    max_trials: int = 20
    initial_step: float = 1.0
    xtol: float = 1e-15
    step_min: float = 1e-15
    step_max: float = 1e15

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line search needs 0 < c1 < c2 < 1")
        if self.max_trials < 1 or self.initial_step <= 0:
            raise ValueError("max_trials must be >= 1 and initial_step > 0")


@dataclass
class FitResult:
    model: CmtfModel
    objective_trace: list
    stop_reason: StopReason
    iterations: int
    func_evals: int
    grad_norm_trace: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1]
