"""Seeded synthetic coupled datasets.

Every generator is a pure function of its arguments.  Randomness comes from
``numpy.random.default_rng(seed)`` (PCG64) and is drawn in a fixed order:
factor matrices, then component weights, then noise.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import CmtfModel, CoupledDataset, Side
from .tensor import kruskal_to_full

__all__ = [
    "Scenario",
    "WeightMode",
    "ScenarioConfig",
    "GroundTruth",
    "ClusteringExample",
    "gen_scenario",
    "gen_mask",
    "gen_clustering_example",
    "add_noise",
]


class Scenario(Enum):
    """Coupling layouts.

    1. A third-order tensor and a matrix sharing mode 0.
    2. Two third-order tensors sharing mode 0.
    3. A third-order tensor with one matrix on mode 0 and one on mode 2.
    """

    TENSOR_MATRIX = 1
    TENSOR_TENSOR = 2
    TENSOR_TWO_MATRICES = 3

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str) and not value.isdigit():
            return cls[value.upper().replace("-", "_")]
        return cls(int(value))


class WeightMode(str, Enum):
    UNIT = "unit"
    RANDOM_INTEGER = "random-integer"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario = Scenario.TENSOR_MATRIX
    shape: tuple = (20, 20, 20)
    side_dim: int = 20
    rank: int = 3
    eta: float = 0.1
    weight_mode: WeightMode = WeightMode.UNIT
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if len(self.shape) != 3:
            raise ValueError("scenarios are defined for third-order tensors")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")


@dataclass
class GroundTruth:
    """Generating model, its per-dataset weights and the (noisy) data.

    ``model`` has the weights absorbed (tensor weights into the last tensor
    factor, each side weight into the side's last own factor), so
    ``model.full()`` and ``model.side_full(s)`` are the noise-free data.
    """

    config: ScenarioConfig
    model: CmtfModel
    tensor_weights: np.ndarray
    side_weights: list
    data: CoupledDataset

    @property
    def n_factor_matrices(self):
        return len(self.model.factors) + sum(len(vs) for vs in self.model.side_factors)


@dataclass
class ClusteringExample:
    labels: np.ndarray
    tensor: np.ndarray
    matrix: np.ndarray
    factors: dict = field(default_factory=dict)


def _unit_columns(m):
    return m / np.linalg.norm(m, axis=0)


def _weights(rng, mode, rank):
    if mode is WeightMode.UNIT:
        return np.ones(rank)
    # |N(0, 25)| rounded to the nearest integer, plus one
    return np.rint(np.abs(rng.normal(0.0, 5.0, size=rank))) + 1.0


def add_noise(clean, eta, rng):
    """``clean + eta * N * ||clean|| / ||N||`` with standard normal N."""
    noise = rng.standard_normal(clean.shape)
    if eta == 0:
        return clean.copy()
    return clean + eta * noise * (np.linalg.norm(clean) / np.linalg.norm(noise))


def gen_scenario(config):
    """Generate one dataset and its ground truth for `config`."""
    rng = np.random.default_rng(config.seed)
    r = config.rank
    m = config.side_dim
    factors = [_unit_columns(rng.standard_normal((i, r))) for i in config.shape]
    if config.scenario is Scenario.TENSOR_MATRIX:
        modes = (0,)
        side_dims = [(m,)]
    elif config.scenario is Scenario.TENSOR_TENSOR:
        modes = (0,)
        side_dims = [(m, m)]
    else:
        modes = (0, 2)
        side_dims = [(m,), (m,)]
    side_factors = [[_unit_columns(rng.standard_normal((d, r))) for d in dims] for dims in side_dims]

    lam = _weights(rng, config.weight_mode, r)
    alphas = [_weights(rng, config.weight_mode, r) for _ in side_dims]
    factors[-1] = factors[-1] * lam
    for vs, a in zip(side_factors, alphas):
        vs[-1] = vs[-1] * a
    model = CmtfModel(factors, side_factors, modes)

    x = add_noise(model.full(), config.eta, rng)
    sides = [Side(mode, add_noise(model.side_full(s), config.eta, rng)) for s, mode in enumerate(modes)]
    return GroundTruth(config, model, lam, alphas, CoupledDataset(x, sides))


def gen_mask(shape, missing_fraction, seed=None):
    """Binary mask with exactly ``round(missing_fraction * size)`` zeros."""
    if not 0 <= missing_fraction < 1:
        raise ValueError("missing_fraction must lie in [0, 1)")
    shape = tuple(int(s) for s in shape)
    size = int(np.prod(shape))
    n_missing = int(round(missing_fraction * size))
    rng = np.random.default_rng(seed)
    flat = np.ones(size)
    flat[rng.choice(size, size=n_missing, replace=False)] = 0.0
    return flat.reshape(shape, order="F")


def gen_clustering_example(n_rows=40, n_cols=20, n_tubes=20, side_dim=20, noise_scale=0.1, seed=None):
    """Tensor and matrix whose first modes each see half of a four-group structure.

    Rows are split into four equal consecutive groups labelled 0..3.  The
    tensor's first-mode factor separates groups {0, 1} from {2, 3}; the
    matrix's separates {0, 2} from {1, 3}.  Both carry two columns holding
    a +-1 pattern and its negation plus Gaussian noise of scale
    `noise_scale`.  Every column is normalized to unit norm before forming
    ``X = [[A1, B, C]]`` and ``Y = A2 @ V.T``.
    """
    if n_rows % 4:
        raise ValueError("n_rows must be divisible by 4")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(4), n_rows // 4)
    split_tensor = np.where(labels < 2, 1.0, -1.0)
    split_matrix = np.where(labels % 2 == 0, 1.0, -1.0)
    a1 = np.column_stack([split_tensor, -split_tensor]) + noise_scale * rng.standard_normal((n_rows, 2))
    a2 = np.column_stack([split_matrix, -split_matrix]) + noise_scale * rng.standard_normal((n_rows, 2))
    b = rng.standard_normal((n_cols, 2))
    c = rng.standard_normal((n_tubes, 2))
    v = rng.standard_normal((side_dim, 2))
    a1, a2, b, c, v = (_unit_columns(f) for f in (a1, a2, b, c, v))
    return ClusteringExample(
        labels=labels,
        tensor=kruskal_to_full([a1, b, c]),
        matrix=a2 @ v.T,
        factors={"A1": a1, "A2": a2, "B": b, "C": c, "V": v},
    )
