import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmtf.model import (CmtfModel, CoupledDataset, CouplingSpec, Side, flatten, gradient, objective,
                        objective_and_gradient, random_model, svd_model, unflatten)
from cmtf.tensor import kruskal_to_full

from conftest import finite_difference_gradient


def _dataset(rng, shape=(3, 4, 2), sides=((0, (5,)),), masked=False):
    x = rng.standard_normal(shape)
    blocks = [Side(m, rng.standard_normal((shape[m],) + dims)) for m, dims in sides]
    mask = (rng.random(shape) > 0.3).astype(float) if masked else None
    return CoupledDataset(x, blocks, mask)


def test_objective_matches_direct_formula(rng):
    data = _dataset(rng, masked=True)
    model = random_model(data.spec(2), 0)
    a, b, c = model.factors
    v = model.side_factors[0][0]
    expected = 0.5 * np.sum((data.mask * (data.tensor - kruskal_to_full([a, b, c]))) ** 2)
    expected += 0.5 * np.sum((data.sides[0].data - a @ v.T) ** 2)
    assert objective(data, model) == pytest.approx(expected, rel=1e-12)
    assert objective_and_gradient(data, model)[0] == pytest.approx(expected, rel=1e-12)


def test_side_matrix_gradients_match_closed_form(rng):
    data = _dataset(rng)
    model = random_model(data.spec(2), 1)
    a, b, c = model.factors
    v = model.side_factors[0][0]
    y = data.sides[0].data
    g = unflatten(gradient(data, model), model.spec)
    g_tensor_only = unflatten(gradient(CoupledDataset(data.tensor), CmtfModel(model.factors, [], ())),
                              CouplingSpec(data.shape, 2))
    np.testing.assert_allclose(g.factors[0] - g_tensor_only.factors[0], a @ v.T @ v - y @ v, atol=1e-12)
    np.testing.assert_allclose(g.side_factors[0][0], v @ a.T @ a - y.T @ a, atol=1e-12)


@pytest.mark.parametrize("masked", [False, True])
@pytest.mark.parametrize("sides", [(), ((0, (5,)),), ((0, (3, 2)),), ((0, (5,)), (2, (4,))), ((1, (2,)), (1, (3,)))])
def test_gradient_matches_finite_differences(rng, masked, sides):
    data = _dataset(rng, sides=sides, masked=masked)
    model = random_model(data.spec(3), 7)
    spec = model.spec
    x0 = flatten(model)
    fd = finite_difference_gradient(lambda v: objective(data, unflatten(v, spec)), x0)
    np.testing.assert_allclose(gradient(data, model), fd, rtol=1e-6, atol=1e-7)


def test_masked_entries_do_not_influence_fit(rng):
    data = _dataset(rng, masked=True)
    x2 = data.tensor + (1 - data.mask) * 100.0
    other = CoupledDataset(x2, data.sides, data.mask)
    model = random_model(data.spec(2), 3)
    assert objective(data, model) == objective(other, model)
    np.testing.assert_array_equal(gradient(data, model), gradient(other, model))


def test_zero_residual_gives_zero_objective(rng):
    model = random_model(CouplingSpec((3, 4, 2), 2, (0,), ((5,),)), 0)
    data = CoupledDataset(model.full(), [Side(0, model.side_full(0))])
    f, g = objective_and_gradient(data, model)
    assert f == pytest.approx(0.0, abs=1e-25)
    assert np.max(np.abs(g)) < 1e-12


@given(seed=st.integers(0, 10**6), rank=st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_flatten_round_trip(seed, rank):
    spec = CouplingSpec((3, 2, 4), rank, (0, 2), ((5,), (2, 3)))
    model = random_model(spec, seed)
    v = flatten(model)
    assert v.size == spec.n_params == rank * (3 + 2 + 4 + 5 + 2 + 3)
    back = unflatten(v, spec)
    for a, b in zip(back.factors + back.side_factors[0] + back.side_factors[1],
                    model.factors + model.side_factors[0] + model.side_factors[1]):
        np.testing.assert_array_equal(a, b)


def test_flatten_order_is_column_major():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    model = CmtfModel([a, np.array([[5.0, 6.0]])], [], ())
    assert flatten(model).tolist() == [1, 3, 2, 4, 5, 6]


def test_dataset_validation():
    x = np.zeros((3, 4, 2))
    with pytest.raises(ValueError):
        CoupledDataset(x, [Side(3, np.zeros((3, 2)))])
    with pytest.raises(ValueError):
        CoupledDataset(x, [Side(1, np.zeros((3, 2)))])
    with pytest.raises(ValueError):
        CoupledDataset(x, mask=np.full(x.shape, 0.5))
    with pytest.raises(ValueError):
        CoupledDataset(x, mask=np.ones((3, 4)))
    with pytest.raises(ValueError):
        Side(0, np.zeros(3))


def test_model_data_mismatch_raises(rng):
    data = _dataset(rng)
    with pytest.raises(ValueError):
        objective(data, random_model(CouplingSpec((3, 4, 2), 2), 0))
    with pytest.raises(ValueError):
        objective(data, random_model(CouplingSpec((3, 4, 3), 2, (0,), ((5,),)), 0))
    with pytest.raises(ValueError):
        unflatten(np.zeros(3), data.spec(2))


def test_svd_model_shapes_and_padding(rng):
    data = _dataset(rng, shape=(3, 4, 2), sides=((0, (5,)),))
    model = svd_model(data, 6, random_state=0)
    assert model.spec == data.spec(6)
    assert all(np.all(np.isfinite(f)) for f in model.factors)
    np.testing.assert_allclose(model.factors[2][:, :2].T @ model.factors[2][:, :2], np.eye(2), atol=1e-12)


def test_copy_is_deep(rng):
    model = random_model(CouplingSpec((2, 2), 1, (0,), ((2,),)), 0)
    clone = model.copy()
    clone.factors[0][0, 0] += 1
    clone.side_factors[0][0][0, 0] += 1
    assert model.factors[0][0, 0] != clone.factors[0][0, 0]
    assert model.side_factors[0][0][0, 0] != clone.side_factors[0][0][0, 0]
