"""Input checks shared by the estimator, the bench harness and the CLI."""
import numbers

import numpy as np

from .model import CoupledDataset, Side

__all__ = ["check_tensor", "check_mask", "check_rank", "check_sides", "check_dataset"]


def check_tensor(x, name="X", min_order=1):
    """Return `x` as a finite float ndarray of at least `min_order` dimensions."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim < min_order:
        raise ValueError(f"{name} must have at least {min_order} dimensions, got {arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_mask(mask, shape):
    """Return a 0/1 float mask of the given shape, or None."""
    if mask is None:
        return None
    arr = np.asarray(mask, dtype=float)
    if arr.shape != tuple(shape):
        raise ValueError(f"mask shape {arr.shape} differs from tensor shape {tuple(shape)}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("mask entries must be 0 or 1")
    return arr


def check_rank(rank):
    if isinstance(rank, bool) or not isinstance(rank, numbers.Integral) or rank < 1:
        raise ValueError(f"rank must be a positive integer, got {rank!r}")
    return int(rank)


def check_sides(side_data, modes, order):
    """Pair side blocks with their coupled modes.

    `side_data` may be a single array, a sequence of arrays or a sequence of
    ``Side`` objects; `modes` is an int or a sequence of ints, defaulting to
    mode 0 for every block.
    """
    if side_data is None:
        return ()
    if isinstance(side_data, (np.ndarray, Side)):
        side_data = [side_data]
    side_data = list(side_data)
    if all(isinstance(s, Side) for s in side_data):
        return tuple(side_data)
    if modes is None:
        modes = [0] * len(side_data)
    elif isinstance(modes, numbers.Integral):
        modes = [int(modes)] * len(side_data)
    modes = list(modes)
    if len(modes) != len(side_data):
        raise ValueError(f"{len(side_data)} side blocks but {len(modes)} coupled modes")
    sides = []
    for k, (mode, y) in enumerate(zip(modes, side_data)):
        if not 0 <= mode < order:
            raise ValueError(f"coupled mode {mode} out of range for a tensor of order {order}")
        sides.append(Side(int(mode), check_tensor(y, name=f"side block {k}", min_order=2)))
    return tuple(sides)


def check_dataset(x, side_data=None, modes=None, mask=None):
    """Validate raw arrays and bundle them into a ``CoupledDataset``."""
    x = check_tensor(x)
    return CoupledDataset(x, check_sides(side_data, modes, x.ndim), check_mask(mask, x.shape))
