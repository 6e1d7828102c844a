import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqkan import _kernels_py, backend
from vqkan.model import (
    AdaptiveConfig,
    VqkanModel,
    candidate_gradient,
    forward,
    grow_way1,
    grow_way2,
    loss,
    parse_hamiltonian,
    run_adaptive,
    sample_weights,
    way2_losses,
)
from vqkan.pauli import PauliString, generate_pool
from vqkan.problems import SampleSet
from vqkan.qsim import ACOS
from vqkan.spline import SplineGrid

from oracles import vqkan_dense


def random_model(rng, num_qubits=2, num_layers=None, grid=None, scale=0.4, encoding="sqrt_acos"):
    num_layers = num_layers or int(rng.integers(1, 3))
    ham = [(float(rng.uniform(0.5, 1.5)), "Z0*Z1")] + ([(1.0, "Z2*Z3")] if num_qubits >= 4 else [])
    m = VqkanModel(
        num_qubits=num_qubits,
        num_layers=num_layers,
        hamiltonian=ham,
        input_dim=2,
        grid=grid or SplineGrid(2, 4),
        encoding=encoding,
    )
    pool = list(generate_pool(num_qubits))
    for _ in range(int(rng.integers(1, 5))):
        m.add_term(pool[int(rng.integers(len(pool)))], layer=int(rng.integers(num_layers)))
    m.coeffs[:] = rng.normal(scale=scale, size=m.coeffs.shape)
    return m


def dense_of(model, x):
    layers = [
        [(dict(t.operator.factors), t.coeffs.ravel()) for t in layer] for layer in model.layers
    ]
    ham = [(c, dict(p.factors)) for c, p in model.hamiltonian]
    return vqkan_dense(model.num_qubits, layers, model.grid.knots, ham, list(x), model.encoding)


def test_dense_oracle_agreement_two_qubits():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        m = random_model(rng)
        xs = rng.uniform(size=(3, 2))
        fast = m.predict(xs)
        for x, v in zip(xs, fast):
            ref = dense_of(m, x)
            assert v == pytest.approx(ref, abs=1e-10)
            assert forward(m, x)[0] == pytest.approx(ref, abs=1e-10)


def test_dense_oracle_agreement_four_qubits_acos():
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = random_model(rng, num_qubits=4, encoding=ACOS)
        x = rng.uniform(size=2)
        assert m.predict(x)[0] == pytest.approx(dense_of(m, x), abs=1e-10)


def test_backends_agree():
    rng = np.random.default_rng(9)
    m = random_model(rng, num_qubits=4, num_layers=2, grid=SplineGrid(), scale=0.2)
    xs = rng.uniform(size=(40, 2))
    args = m._kernel_args()
    li_a = np.zeros((3, 40, 2))
    li_b = np.zeros((3, 40, 2))
    a = backend.vqkan_forward(xs, *args, li_a)
    b = _kernels_py.vqkan_forward(xs, *args, li_b)
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(li_a, li_b, atol=1e-12)


def test_layer_inputs_are_readouts():
    rng = np.random.default_rng(1)
    m = random_model(rng, num_layers=2)
    x = rng.uniform(size=2)
    value, layer_inputs = forward(m, x)
    vals, li = m.predict(x, return_layer_inputs=True)
    assert len(layer_inputs) == 3
    for n in range(3):
        np.testing.assert_allclose(li[n, 0], layer_inputs[n], atol=1e-12)
        assert np.all((layer_inputs[n] >= 0) & (layer_inputs[n] <= 1))


def test_empty_ansatz_output_is_product_state_value():
    m = VqkanModel(num_qubits=4, input_dim=4)
    x = np.array([0.2, 0.7, 0.4, 0.9])
    z = 2 * x - 1
    assert m.predict(x)[0] == pytest.approx(z[0] * z[1] + z[2] * z[3], abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_output_within_spectral_bound(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, num_qubits=4, scale=2.0)
    out = m.predict(rng.uniform(size=(8, 2)))
    assert np.all(np.abs(out) <= 2.0 + 1e-12)


def test_add_term_places_by_layer():
    m = VqkanModel(num_layers=2)
    m.add_term("X0", layer=1)
    m.add_term("Y1", layer=0)
    m.add_term("Z2")
    assert [str(op) for op in m.operators] == ["Y1", "X0", "Z2"]
    assert m.term_layers == [0, 1, 1]
    assert [len(layer) for layer in m.layers] == [1, 2]
    with pytest.raises(IndexError):
        m.add_term("X4")


def test_model_validation():
    with pytest.raises(ValueError):
        VqkanModel(num_layers=0)
    with pytest.raises(ValueError):
        VqkanModel(input_dim=5)
    with pytest.raises(ValueError):
        VqkanModel(hamiltonian=[])
    with pytest.raises(ValueError):
        VqkanModel(encoding="angle")
    with pytest.raises(ValueError):
        VqkanModel().predict(np.zeros((2, 3)))


def test_parse_hamiltonian():
    h = parse_hamiltonian("Z0*Z1 + 0.5 X2")
    assert [(c, str(p)) for c, p in h] == [(1.0, "Z0*Z1"), (0.5, "X2")]


def test_refine_keeps_predictions():
    rng = np.random.default_rng(3)
    m = random_model(rng, num_qubits=4, grid=SplineGrid(), scale=0.1)
    xs = rng.uniform(size=(10, 2))
    before = m.predict(xs)
    m.refine(12)
    assert m.grid.num_splines == 12 and m.coeffs.shape[1] == 96
    np.testing.assert_allclose(m.predict(xs), before, atol=1e-9)


def test_loss_and_weights():
    np.testing.assert_allclose(sample_weights(4), [1.0, 0.75, 0.5, 0.25])
    m = VqkanModel(num_qubits=4, input_dim=4)
    x = np.full((2, 4), 0.5)  # output 0
    samples = SampleSet(x, x, np.array([1.0, -2.0]))
    assert loss(m, samples, [1.0, 0.5]) == pytest.approx(2.0)
    assert loss(m, [(x[0], 1.0), (x[1], -2.0)], [1.0, 0.5]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        loss(m, samples, [1.0])


def test_forward_counter():
    m = VqkanModel(num_qubits=4, input_dim=2)
    m.predict(np.zeros((7, 2)))
    assert m.forward_count == 7


def _fixture(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, num_layers=1)
    xs = rng.uniform(size=(4, 2))
    ys = rng.uniform(-1, 1, size=4)
    return m, SampleSet(xs, xs, ys), sample_weights(4)


def test_way2_picks_lowest_loss():
    m, samples, w = _fixture(0)
    pool = generate_pool(2)
    losses = way2_losses(m, pool, samples, w)
    current = loss(m, samples, w)
    chosen = grow_way2(m, pool, samples, w)
    if min(losses) < current:
        assert chosen == pool[int(np.argmin(losses))]
        assert m.operators[-1] == chosen
    else:
        assert chosen is None


def test_way2_declines_when_nothing_helps():
    m, samples, w = _fixture(1)
    n = m.num_terms

    class Always:  # every candidate appears worse
        def __call__(self, model, s, weights):
            return 1.0 + 0.1 * (model.num_terms - n)

    assert grow_way2(m, generate_pool(2), samples, w, loss_fn=Always()) is None
    assert m.num_terms == n


def test_candidate_gradient_matches_finite_difference_by_hand():
    m, samples, w = _fixture(2)
    cand = PauliString.parse("X0*Y1")
    g = candidate_gradient(m, cand, samples, w)
    trial = m.with_term(cand)
    base = trial.parameters()
    best = 0.0
    for k in range(trial.num_terms * 0 + trial.grid.num_basis):
        idx = (trial.num_terms - 1) * trial.grid.num_basis + k
        up, down = base.copy(), base.copy()
        up[idx] += 1e-6
        down[idx] -= 1e-6
        trial.set_parameters(up)
        lu = loss(trial, samples, w)
        trial.set_parameters(down)
        ld = loss(trial, samples, w)
        best = max(best, abs(lu - ld) / 2e-6)
    assert g == pytest.approx(best, rel=1e-12)


def test_way1_appends_argmax():
    m, samples, w = _fixture(3)
    pool = generate_pool(2)
    scores = [candidate_gradient(m, p, samples, w) for p in pool]
    chosen = grow_way1(m, pool, samples, w)
    assert chosen == pool[int(np.argmax(scores))]


def test_run_adaptive_records():
    rng = np.random.default_rng(4)
    m = VqkanModel(num_qubits=4, input_dim=4)
    m.add_term("X0")
    xs = rng.uniform(size=(6, 4))
    train = SampleSet(xs[:4], xs[:4], rng.uniform(-1, 1, 4))
    test = SampleSet(xs[4:], xs[4:], rng.uniform(-1, 1, 2))
    records = run_adaptive(m, generate_pool(4), train, test, AdaptiveConfig(way=2, epochs=3, trials_per_epoch=30))
    assert [r.epoch for r in records] == [0, 1, 2]
    assert records[0].chosen_operator is None
    for r in records:
        assert r.loss_after <= r.loss_before + 1e-12
        assert r.num_objective_evals <= 30
        assert r.test_distance_sum == pytest.approx(sum(r.test_distances))
        assert r.num_terms == len(r.ansatz)
    assert m.grid.num_splines == 16


def test_run_adaptive_stops_on_convergence():
    m = VqkanModel(num_qubits=4, input_dim=4)
    m.add_term("Z0")
    x = np.full((2, 4), 0.5)
    data = SampleSet(x, x, np.zeros(2))  # Z0 is diagonal: output stays 0 = target
    records = run_adaptive(m, generate_pool(4), data, data, AdaptiveConfig(epochs=5, trials_per_epoch=10))
    assert len(records) == 1 and records[0].converged


def test_adaptive_config_validation():
    with pytest.raises(ValueError):
        AdaptiveConfig(way=3)
    with pytest.raises(ValueError):
        AdaptiveConfig(epochs=0)


def test_angle_uses_clamped_acos():
    from vqkan.model import angle_phi

    m = VqkanModel(num_qubits=2, input_dim=2, hamiltonian=[(1.0, "Z0*Z1")], grid=SplineGrid(2, 4))
    term = m.add_term("X0")
    term.coeffs[:] = 5.0  # activation far above 1 -> acos(1) = 0
    assert angle_phi(term, [0.3, 0.6]) == 0.0
    term.coeffs[:] = -5.0
    assert angle_phi(term, [0.3, 0.6]) == pytest.approx(4 * math.pi)


def test_diagonal_candidate_has_zero_gradient():
    m = VqkanModel(num_qubits=2, input_dim=2, hamiltonian=[(1.0, "Z0*Z1")], grid=SplineGrid(2, 4))
    m.add_term("Z1")
    x = np.array([[0.3, 0.8], [0.6, 0.1]])
    samples = SampleSet(x, x, np.array([0.2, -0.4]))
    assert candidate_gradient(m, PauliString.parse("Z0"), samples, [1.0, 0.5]) == pytest.approx(0.0, abs=1e-8)


def test_way1_single_member_and_weight_scaling():
    m, samples, w = _fixture(5)
    only = [PauliString.parse("Y1")]
    assert grow_way1(m.copy(), only, samples, w) == only[0]
    pool = generate_pool(2)
    a = grow_way1(m.copy(), pool, samples, w)
    b = grow_way1(m.copy(), pool, samples, 2 * np.asarray(w))
    assert a == b


def test_gradient_step_self_consistent():
    m, samples, w = _fixture(6)
    cand = PauliString.parse("X1")
    trial = m.with_term(cand)
    base = trial.parameters()
    idx = trial.parameters().size - 1

    def fd(h):
        up, down = base.copy(), base.copy()
        up[idx] += h
        down[idx] -= h
        trial.set_parameters(up)
        lu = loss(trial, samples, w)
        trial.set_parameters(down)
        return (lu - loss(trial, samples, w)) / (2 * h)

    assert fd(1e-6) == pytest.approx(fd(1e-7), rel=1e-4, abs=1e-8)
