import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqkan import _kernels_py, backend
from vqkan.model import sample_weights
from vqkan.optimize import ObjectiveBudget
from vqkan.problems import SampleSet
from vqkan.qnn import QnnModel, qnn_forward, qnn_train

from oracles import qnn_dense

HAM = [(1.0, {0: "Z", 1: "Z"}), (1.0, {2: "Z", 3: "Z"})]


def test_all_zero_angles_give_ground_value():
    # no rotation at all keeps |0000>, where Z0Z1 + Z2Z3 = 2
    m = QnnModel(thetas=np.zeros(24))
    assert m.predict(np.zeros((1, 4)))[0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("scale,dim", [(2.0, 4), (1.0, 2)])
def test_dense_oracle(scale, dim):
    rng = np.random.default_rng(int(scale * 10) + dim)
    for _ in range(10):
        m = QnnModel(input_scale=scale, seed=int(rng.integers(1 << 30)))
        u = rng.uniform(size=dim)
        angles = [scale * u[q % dim] for q in range(4)]
        ref = qnn_dense(4, 3, m.thetas, angles, HAM)
        assert m.predict(u)[0] == pytest.approx(ref, abs=1e-10)
        assert qnn_forward(m, u) == pytest.approx(ref, abs=1e-10)


def test_backends_agree():
    m = QnnModel(seed=3)
    u = np.random.default_rng(0).uniform(size=(30, 4))
    args = (np.ascontiguousarray(m.rx_angles(u)), m.thetas, m.num_layers, *m._ham)
    np.testing.assert_allclose(backend.qnn_forward(*args), _kernels_py.qnn_forward(*args), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_output_bounded(seed):
    m = QnnModel(seed=seed)
    out = m.predict(np.random.default_rng(seed).uniform(size=(6, 4)))
    assert np.all(np.abs(out) <= 2.0 + 1e-12)


def test_seeded_initialisation_and_validation():
    a, b = QnnModel(seed=5), QnnModel(seed=5)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    assert np.all((a.thetas >= 0) & (a.thetas < 2 * math.pi))
    assert a.num_parametric_gates == 24
    with pytest.raises(ValueError):
        QnnModel(thetas=np.zeros(5))
    with pytest.raises(ValueError):
        a.set_parameters(np.zeros(3))


def test_training_respects_budget_and_improves():
    rng = np.random.default_rng(1)
    u = rng.uniform(size=(6, 4))
    samples = SampleSet(u, u, rng.uniform(-1, 1, 6))
    w = sample_weights(6)
    m = QnnModel(seed=2)
    from vqkan.model import loss

    start = loss(m, samples, w)
    m, history = qnn_train(m, samples, w, ObjectiveBudget(60))
    assert len(history) <= 60
    assert loss(m, samples, w) == pytest.approx(min(history))
    assert min(history) <= start


def test_training_single_evaluation_keeps_start():
    u = np.full((2, 4), 0.5)
    samples = SampleSet(u, u, np.array([0.0, 1.0]))
    m = QnnModel(seed=7)
    start = m.parameters()
    m, history = qnn_train(m, samples, [1.0, 0.5], ObjectiveBudget(1))
    assert len(history) == 1
    np.testing.assert_array_equal(m.parameters(), start)


def test_forward_counter():
    m = QnnModel(seed=0)
    m.predict(np.zeros((5, 2)))
    assert m.forward_count == 5
