import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cmtf.estimator import CMTF
from cmtf.solvers import StopReason
from cmtf.synth import ScenarioConfig, gen_scenario
from cmtf.validation import check_dataset, check_mask, check_rank, check_sides, check_tensor


@pytest.fixture(scope="module")
def scenario():
    return gen_scenario(ScenarioConfig(shape=(8, 7, 6), side_dim=5, eta=0.0, seed=3))


def test_params_and_clone():
    est = CMTF(rank=4, algorithm="als", random_state=1)
    params = est.get_params()
    assert params["rank"] == 4 and params["algorithm"] == "als"
    other = clone(est).set_params(rank=2)
    assert other.rank == 2 and est.rank == 4


@pytest.mark.parametrize("algorithm", ["opt", "als"])
def test_fit_transform_predict(scenario, algorithm):
    x, y = scenario.data.tensor, scenario.data.sides[0].data
    est = CMTF(rank=3, algorithm=algorithm).fit(x, side_data=y)
    assert est.objective_trace_[-1] < 1e-10
    assert isinstance(est.stop_reason_, StopReason)
    assert est.transform(x).shape == (8, 3)
    np.testing.assert_allclose(est.predict(), x, atol=1e-5)
    np.testing.assert_allclose(est.reconstruct_side(0), y, atol=1e-5)
    assert est.score(x, side_data=y) == pytest.approx(-est.objective_trace_[-1])
    assert len(est.factors_) == 3 and len(est.side_factors_) == 1


def test_fit_transform_embedding_mode(scenario):
    x = scenario.data.tensor
    z = CMTF(rank=2, embedding_mode=2).fit_transform(x)
    assert z.shape == (6, 2)


def test_mask_requires_opt(scenario):
    x = scenario.data.tensor
    mask = np.ones_like(x)
    mask[0, 0, 0] = 0
    CMTF(rank=3).fit(x, mask=mask)
    with pytest.raises(ValueError):
        CMTF(rank=3, algorithm="als").fit(x, mask=mask)


def test_errors(scenario):
    x = scenario.data.tensor
    with pytest.raises(NotFittedError):
        CMTF().transform(x)
    with pytest.raises(ValueError):
        CMTF(algorithm="sgd").fit(x)
    with pytest.raises(ValueError):
        CMTF(rank=0).fit(x)
    with pytest.raises(ValueError):
        CMTF(embedding_mode=3).fit(x)
    est = CMTF(rank=2).fit(x)
    with pytest.raises(ValueError):
        est.transform(x[:2])


def test_validation_helpers():
    with pytest.raises(ValueError):
        check_tensor([[np.nan]])
    with pytest.raises(ValueError):
        check_tensor(np.zeros(0))
    with pytest.raises(ValueError):
        check_tensor(np.zeros(3), min_order=2)
    assert check_mask(None, (2,)) is None
    with pytest.raises(ValueError):
        check_mask(np.full((2,), 2.0), (2,))
    assert check_rank(np.int64(3)) == 3
    for bad in (True, 0, 2.5, "3"):
        with pytest.raises(ValueError):
            check_rank(bad)
    sides = check_sides([np.zeros((2, 3)), np.zeros((4, 1))], [0, 2], 3)
    assert [s.mode for s in sides] == [0, 2]
    with pytest.raises(ValueError):
        check_sides([np.zeros((2, 3))], [0, 1], 3)
    with pytest.raises(ValueError):
        check_sides([np.zeros((2, 3))], 5, 3)
    with pytest.raises(ValueError):
        check_dataset(np.zeros((2, 3, 4)), np.zeros((3, 2)))
    data = check_dataset(np.zeros((2, 3, 4)), np.zeros((4, 2)), modes=2)
    assert data.modes == (2,)
