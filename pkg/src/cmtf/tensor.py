"""Dense tensor kernels.

Tensors are plain ``numpy.ndarray`` objects of dtype float64.  Everything that
depends on an element ordering (matricization, vectorization, the text file
format) uses the generalized column-major convention: the first index varies
fastest.  Under that convention the mode-0 unfolding of a Kruskal tensor
satisfies ``X_(0) = A @ khatri_rao(C, B).T``.

Modes are 0-based throughout.
"""
from functools import reduce

import numpy as np

__all__ = [
    "matricize",
    "dematricize",
    "khatri_rao",
    "khatri_rao_complement",
    "hadamard",
    "inner",
    "norm",
    "kruskal_to_full",
    "vectorize",
]


def _check_mode(mode, ndim):
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for a tensor of order {ndim}")


def matricize(x, mode):
    """Mode-`mode` unfolding of `x`.

    Columns are the mode-`mode` fibers, with the remaining indices ordered so
    that lower-numbered modes vary fastest.

    Parameters
    ----------
    x : ndarray
    mode : int

    Returns
    -------
    ndarray of shape (x.shape[mode], prod(other dims))
    """
    x = np.asarray(x, dtype=float)
    _check_mode(mode, x.ndim)
    return np.reshape(np.moveaxis(x, mode, 0), (x.shape[mode], -1), order="F")


def dematricize(m, shape, mode):
    """Inverse of :func:`matricize`."""
    m = np.asarray(m, dtype=float)
    shape = tuple(int(s) for s in shape)
    _check_mode(mode, len(shape))
    rest = shape[:mode] + shape[mode + 1:]
    if m.ndim != 2 or m.shape[0] != shape[mode] or m.shape[1] != int(np.prod(rest)):
        raise ValueError(
            f"matrix of shape {m.shape} cannot be folded into {shape} along mode {mode}"
        )
    folded = np.reshape(m, (shape[mode],) + rest, order="F")
    return np.moveaxis(folded, 0, mode)


def khatri_rao(a, b):
    """Columnwise Kronecker product ``[a_1 kron b_1, ..., a_R kron b_R]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(
            f"khatri_rao needs matrices with equal column counts, got {a.shape} and {b.shape}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def khatri_rao_complement(factors, skip):
    """Khatri-Rao product of every factor except ``factors[skip]``.

    The product is taken in descending mode order,
    ``A(N-1) kr ... kr A(skip+1) kr A(skip-1) kr ... kr A(0)``, which is the
    matrix that multiplies ``A(skip).T`` in the mode-`skip` unfolding of the
    Kruskal tensor.

    Parameters
    ----------
    factors : sequence of ndarray, each of shape (I_n, R)
    skip : int

    Returns
    -------
    ndarray of shape (prod_{n != skip} I_n, R)
    """
    factors = [np.asarray(f, dtype=float) for f in factors]
    _check_mode(skip, len(factors))
    rank = factors[0].shape[1]
    if any(f.ndim != 2 or f.shape[1] != rank for f in factors):
        raise ValueError("all factor matrices must share the same number of columns")
    # Ascending accumulation; row index of the result is
    # i_0 + I_0 * (i_1 + I_1 * (...)) over the kept modes.
    out = np.ones((1, rank))
    for n, f in enumerate(factors):
        if n == skip:
            continue
        out = (f[:, None, :] * out[None, :, :]).reshape(-1, rank)
    return out


def hadamard(x, y):
    """Elementwise product of two equally shaped tensors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x * y


def inner(x, y):
    """Sum of the elementwise products of `x` and `y`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x.ravel(), y.ravel()))


def norm(x):
    """Frobenius norm (two-norm for vectors)."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(inner(x, x)))


def kruskal_to_full(factors, weights=None):
    """Dense tensor generated by factor matrices.

    Entry ``(i_0, ..., i_{N-1})`` equals
    ``sum_r w_r * prod_n factors[n][i_n, r]``; the weights default to ones.
    """
    factors = [np.asarray(f, dtype=float) for f in factors]
    if not factors:
        raise ValueError("at least one factor matrix is required")
    rank = factors[0].shape[1]
    if any(f.ndim != 2 or f.shape[1] != rank for f in factors):
        raise ValueError("all factor matrices must share the same number of columns")
    lead = factors[0]
    if weights is not None:
        weights = np.asarray(weights, dtype=float).ravel()
        if weights.shape != (rank,):
            raise ValueError(f"weights must have length {rank}")
        lead = lead * weights
    shape = tuple(f.shape[0] for f in factors)
    if len(factors) == 1:
        return lead.sum(axis=1)
    rest = reduce(lambda acc, f: khatri_rao(f, acc), factors[2:], factors[1])
    return dematricize(lead @ rest.T, shape, 0)


def vectorize(m):
    """Stack the columns of `m` into one vector."""
    return np.asarray(m, dtype=float).ravel(order="F")
