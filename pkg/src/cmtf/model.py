"""Coupled matrix-tensor factorization objective and gradient.

A coupled dataset is one N-way tensor ``X`` (optionally with a binary mask of
known entries) plus any number of side blocks.  Each side block is a matrix
or a higher-order tensor whose first axis is shared with one mode of ``X``.
The model fits ``X ~ [[A_0, ..., A_{N-1}]]`` and, for a side block coupled
to mode ``n`` with its own factors ``V_1, ..., V_{K-1}``,
``Y ~ [[A_n, V_1, ..., V_{K-1}]]``; for a side matrix this is ``A_n @ V.T``.

The loss is

    f = 1/2 ||W * (X - [[A]])||^2 + 1/2 sum_s ||Y_s - [[A_{n_s}, V_s]]||^2

with ``W`` all ones when no mask is given.
"""
from dataclasses import dataclass, field

import numpy as np

from .tensor import kruskal_to_full, khatri_rao_complement, matricize

__all__ = [
    "Side",
    "CoupledDataset",
    "CouplingSpec",
    "CmtfModel",
    "flatten",
    "unflatten",
    "random_model",
    "svd_model",
    "objective",
    "gradient",
    "objective_and_gradient",
    "tensor_loss",
]


@dataclass(frozen=True)
class Side:
    """A side block coupled to tensor mode `mode` through its first axis."""

    mode: int
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if self.data.ndim < 2:
            raise ValueError("a side block must be a matrix or a higher-order tensor")


@dataclass(frozen=True)
class CoupledDataset:
    """One tensor, an optional 0/1 mask of known entries, and its side blocks.

    Entries of the tensor where the mask is zero are stored as zero so that no
    missing value can leak into a fit.
    """

    tensor: np.ndarray
    sides: tuple = ()
    mask: np.ndarray = None

    def __post_init__(self):
        x = np.array(self.tensor, dtype=float)
        sides = tuple(s if isinstance(s, Side) else Side(*s) for s in self.sides)
        for s in sides:
            if not 0 <= s.mode < x.ndim:
                raise ValueError(f"side block coupled to mode {s.mode}, tensor has order {x.ndim}")
            if s.data.shape[0] != x.shape[s.mode]:
                raise ValueError(
                    f"side block has {s.data.shape[0]} rows but tensor mode {s.mode} "
                    f"has size {x.shape[s.mode]}"
                )
        mask = self.mask
        if mask is not None:
            mask = np.asarray(mask, dtype=float)
            if mask.shape != x.shape:
                raise ValueError(f"mask shape {mask.shape} differs from tensor shape {x.shape}")
            if not np.all((mask == 0) | (mask == 1)):
                raise ValueError("mask entries must be 0 or 1")
            x = x * mask
        object.__setattr__(self, "tensor", x)
        object.__setattr__(self, "sides", sides)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.tensor.shape

    @property
    def modes(self):
        return tuple(s.mode for s in self.sides)

    def spec(self, rank):
        return CouplingSpec(
            tensor_shape=self.shape,
            rank=rank,
            modes=self.modes,
            side_shapes=tuple(s.data.shape[1:] for s in self.sides),
        )


@dataclass(frozen=True)
class CouplingSpec:
    """Dimensions of a coupled model.

    ``side_shapes[s]`` holds the dimensions of side block `s` without its
    coupled axis, e.g. ``(M,)`` for an ``I_n x M`` matrix.
    """

    tensor_shape: tuple
    rank: int
    modes: tuple = ()
    side_shapes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tensor_shape", tuple(int(i) for i in self.tensor_shape))
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        object.__setattr__(
            self, "side_shapes", tuple(tuple(int(d) for d in np.atleast_1d(s)) for s in self.side_shapes)
        )
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if len(self.modes) != len(self.side_shapes):
            raise ValueError("one coupled mode is needed per side block")
        for m in self.modes:
            if not 0 <= m < len(self.tensor_shape):
                raise ValueError(f"coupled mode {m} invalid for order {len(self.tensor_shape)}")

    @property
    def n_params(self):
        dims = sum(self.tensor_shape) + sum(sum(s) for s in self.side_shapes)
        return self.rank * dims


@dataclass
class CmtfModel:
    """Factor matrices of a coupled model.

    Attributes
    ----------
    factors : list of ndarray
        Tensor factors, ``factors[n]`` of shape (I_n, R).
    side_factors : list of list of ndarray
        Per side block, the factors of its non-coupled axes.  A side matrix
        has exactly one, ``V`` of shape (M, R).
    modes : tuple of int
        Tensor mode each side block is coupled to.
    """

    factors: list
    side_factors: list = field(default_factory=list)
    modes: tuple = ()

    def __post_init__(self):
        self.factors = [np.asarray(f, dtype=float) for f in self.factors]
        self.side_factors = [[np.asarray(v, dtype=float) for v in vs] for vs in self.side_factors]
        self.modes = tuple(int(m) for m in self.modes)
        rank = self.rank
        every = self.factors + [v for vs in self.side_factors for v in vs]
        if any(f.ndim != 2 or f.shape[1] != rank for f in every):
            raise ValueError("all factor matrices must share the same number of columns")
        if len(self.modes) != len(self.side_factors):
            raise ValueError("one coupled mode is needed per side block")

    @property
    def rank(self):
        return self.factors[0].shape[1]

    @property
    def spec(self):
        return CouplingSpec(
            tensor_shape=tuple(f.shape[0] for f in self.factors),
            rank=self.rank,
            modes=self.modes,
            side_shapes=tuple(tuple(v.shape[0] for v in vs) for vs in self.side_factors),
        )

    def side_factor_list(self, s):
        """All factors of side block `s`, the shared tensor factor first."""
        return [self.factors[self.modes[s]]] + self.side_factors[s]

    def full(self):
        """Dense tensor generated by the tensor factors."""
        return kruskal_to_full(self.factors)

    def side_full(self, s):
        return kruskal_to_full(self.side_factor_list(s))

    def copy(self):
        return CmtfModel(
            [f.copy() for f in self.factors],
            [[v.copy() for v in vs] for vs in self.side_factors],
            self.modes,
        )


def flatten(model):
    """Stack all factor matrices column-major: tensor factors, then side factors."""
    parts = [f.ravel(order="F") for f in model.factors]
    parts += [v.ravel(order="F") for vs in model.side_factors for v in vs]
    return np.concatenate(parts)


def unflatten(vec, spec):
    vec = np.asarray(vec, dtype=float).ravel()
    if vec.size != spec.n_params:
        raise ValueError(f"expected a vector of length {spec.n_params}, got {vec.size}")
    r = spec.rank
    pos = 0

    def take(rows):
        nonlocal pos
        out = vec[pos:pos + rows * r].reshape((rows, r), order="F")
        pos += rows * r
        return out.copy()

    factors = [take(i) for i in spec.tensor_shape]
    side_factors = [[take(d) for d in dims] for dims in spec.side_shapes]
    return CmtfModel(factors, side_factors, spec.modes)


def random_model(spec, random_state=None):
    """Model with i.i.d. standard normal entries."""
    rng = np.random.default_rng(random_state)
    factors = [rng.standard_normal((i, spec.rank)) for i in spec.tensor_shape]
    side_factors = [[rng.standard_normal((d, spec.rank)) for d in dims] for dims in spec.side_shapes]
    return CmtfModel(factors, side_factors, spec.modes)


def _leading_vectors(m, rank, rng):
    u = np.linalg.svd(m, full_matrices=False)[0][:, :rank]
    if u.shape[1] < rank:
        u = np.hstack([u, rng.standard_normal((m.shape[0], rank - u.shape[1]))])
    return u


def svd_model(data, rank, random_state=None):
    """Model built from leading left singular vectors of the unfoldings.

    A tensor factor comes from the mode-n unfolding of the (masked) tensor
    placed side by side with the first-axis unfoldings of every side block
    coupled to that mode.  A side block's own factors come from its own
    unfoldings.  When `rank` exceeds a dimension the missing columns are
    drawn standard normal from `random_state`.
    """
    rng = np.random.default_rng(random_state)
    factors = []
    for n in range(data.tensor.ndim):
        blocks = [matricize(data.tensor, n)]
        blocks += [matricize(side.data, 0) for side in data.sides if side.mode == n]
        factors.append(_leading_vectors(np.hstack(blocks), rank, rng))
    side_factors = [
        [_leading_vectors(matricize(side.data, k), rank, rng) for k in range(1, side.data.ndim)]
        for side in data.sides
    ]
    return CmtfModel(factors, side_factors, data.modes)


def _check_compatible(data, model):
    if tuple(f.shape[0] for f in model.factors) != data.shape:
        raise ValueError(
            f"model tensor factors have shape {tuple(f.shape[0] for f in model.factors)}, "
            f"data tensor has shape {data.shape}"
        )
    if model.modes != data.modes:
        raise ValueError(f"model couples modes {model.modes}, data couples {data.modes}")
    for s, side in enumerate(data.sides):
        dims = tuple(v.shape[0] for v in model.side_factors[s])
        if dims != side.data.shape[1:]:
            raise ValueError(f"side block {s}: model dims {dims}, data dims {side.data.shape[1:]}")


def _tensor_residual(data, model):
    resid = model.full() - data.tensor
    if data.mask is not None:
        resid *= data.mask
    return resid


def tensor_loss(data, model):
    """The tensor part ``1/2 ||W * (X - [[A]])||^2`` of the objective."""
    _check_compatible(data, model)
    resid = _tensor_residual(data, model)
    return 0.5 * float(np.dot(resid.ravel(), resid.ravel()))


def objective_and_gradient(data, model):
    """Objective value and gradient (in :func:`flatten` order) in one pass."""
    _check_compatible(data, model)
    resid = _tensor_residual(data, model)
    f = 0.5 * float(np.dot(resid.ravel(), resid.ravel()))
    grads = [matricize(resid, i) @ khatri_rao_complement(model.factors, i)
             for i in range(len(model.factors))]
    side_grads = []
    for s, side in enumerate(data.sides):
        block = model.side_factor_list(s)
        resid_s = kruskal_to_full(block) - side.data
        f += 0.5 * float(np.dot(resid_s.ravel(), resid_s.ravel()))
        grads[side.mode] = grads[side.mode] + matricize(resid_s, 0) @ khatri_rao_complement(block, 0)
        side_grads.append([matricize(resid_s, k) @ khatri_rao_complement(block, k)
                           for k in range(1, len(block))])
    g = flatten(CmtfModel(grads, side_grads, model.modes))
    return f, g


def objective(data, model):
    _check_compatible(data, model)
    f = tensor_loss(data, model)
    for s, side in enumerate(data.sides):
        resid_s = model.side_full(s) - side.data
        f += 0.5 * float(np.dot(resid_s.ravel(), resid_s.ravel()))
    return f


def gradient(data, model):
    return objective_and_gradient(data, model)[1]
