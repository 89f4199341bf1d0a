from .als import cmtf_als
from .config import FitResult, LineSearchConfig, StopConfig, StopReason
from .linalg import least_squares_solve, truncated_svd
from .linesearch import more_thuente
from .ncg import cmtf_opt, hestenes_stiefel, ncg

__all__ = [
    "cmtf_als",
    "cmtf_opt",
    "ncg",
    "hestenes_stiefel",
    "more_thuente",
    "least_squares_solve",
    "truncated_svd",
    "FitResult",
    "LineSearchConfig",
    "StopConfig",
    "StopReason",
]
