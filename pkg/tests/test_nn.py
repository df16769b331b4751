import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pastarl.errors import ContractViolationError, DivergenceError
from pastarl.nn import (
    ACTIVATIONS,
    AdamState,
    DenseLayer,
    Network,
    adam_step,
    adam_update,
    load_checkpoint,
    network_from_spec,
    network_spec,
    save_checkpoint,
)
from tests.conftest import finite_difference

ARCHS = [
    ([3, 5, 2], ["tanh", "sigmoid"]),
    ([4, 4], ["identity"]),
    ([2, 6, 3, 1], ["tanh", "tanh", "identity"]),
    ([5, 8, 8, 4], ["tanh", "tanh", "sigmoid"]),
]


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def manual_forward(net, x):
    """Independent re-evaluation of the stack, layer by layer."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    for layer in net.layers:
        h = _act(layer.activation, h @ layer.weights.T + layer.biases)
    return h[0] if np.asarray(x).ndim == 1 else h


class TestForward:
    def test_matches_manual_composition(self, rng):
        for dims, acts in ARCHS:
            net = Network.random(dims, acts, rng)
            x = rng.normal(size=(7, dims[0]))
            out, _ = net.forward(x)
            np.testing.assert_array_equal(out, manual_forward(net, x))

    def test_single_vector_equals_batch_row(self, rng):
        net = Network.random([3, 4, 2], ["tanh", "identity"], rng)
        x = rng.normal(size=3)
        single, _ = net.forward(x)
        batch, _ = net.forward(x[None, :])
        assert single.shape == (2,)
        np.testing.assert_array_equal(single, batch[0])

    def test_rejects_wrong_input_dim(self, rng):
        net = Network.random([3, 2], ["tanh"], rng)
        with pytest.raises(ContractViolationError):
            net.forward(np.zeros(4))

    def test_identity_single_layer_is_affine(self, rng):
        layer = DenseLayer(rng.normal(size=(2, 3)), rng.normal(size=2), "identity")
        net = Network([layer])
        x = rng.normal(size=(5, 3))
        out, _ = net.forward(x)
        np.testing.assert_allclose(out, x @ layer.weights.T + layer.biases, rtol=0, atol=0)


class TestInit:
    def test_uniform_bound_and_zero_biases(self, rng):
        net = Network.random([100, 50], ["tanh"], rng)
        bound = 1.0 / np.sqrt(100)
        w = net.layers[0].weights
        assert np.all(np.abs(w) <= bound)
        assert np.std(w) > 0.25 * bound  # actually spread out, not collapsed
        np.testing.assert_array_equal(net.layers[0].biases, np.zeros(50))

    def test_same_seed_same_network(self):
        a = Network.random([3, 4, 2], ["tanh", "sigmoid"], np.random.default_rng(42))
        b = Network.random([3, 4, 2], ["tanh", "sigmoid"], np.random.default_rng(42))
        np.testing.assert_array_equal(a.to_flat(), b.to_flat())

    def test_unknown_activation_rejected(self):
        with pytest.raises(ContractViolationError):
            DenseLayer(np.zeros((2, 2)), np.zeros(2), "relu")
        assert "relu" not in ACTIVATIONS


class TestFlatLayout:
    def test_layer_major_weights_then_biases(self):
        w0 = np.arange(6, dtype=np.float64).reshape(2, 3)
        b0 = np.array([10.0, 11.0])
        w1 = np.array([[20.0, 21.0]])
        b1 = np.array([30.0])
        net = Network([DenseLayer(w0, b0, "tanh"), DenseLayer(w1, b1, "identity")])
        expected = np.concatenate([w0.ravel(), b0, w1.ravel(), b1])
        np.testing.assert_array_equal(net.to_flat(), expected)

    def test_round_trip_preserves_outputs(self, rng):
        for dims, acts in ARCHS:
            net = Network.random(dims, acts, rng)
            clone = Network.zeros(dims, acts)
            clone.from_flat(net.to_flat())
            x = rng.normal(size=(4, dims[0]))
            np.testing.assert_array_equal(clone.forward(x)[0], net.forward(x)[0])

    def test_wrong_length_rejected(self, rng):
        net = Network.random([3, 2], ["tanh"], rng)
        with pytest.raises(ContractViolationError):
            net.from_flat(np.zeros(net.n_params + 1))


class TestBackward:
    def test_matches_finite_differences_all_archs(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            for dims, acts in ARCHS:
                net = Network.random(dims, acts, rng)
                x = rng.normal(size=(3, dims[0]))
                v = rng.normal(size=(3, dims[-1]))

                def loss(theta):
                    net.from_flat(theta)
                    out, _ = net.forward(x)
                    return float(np.sum(out * v))

                theta0 = net.to_flat()
                _, tape = net.forward(x)
                analytic, _ = net.backward(tape, v)
                numeric = finite_difference(loss, theta0)
                net.from_flat(theta0)
                np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)

    def test_input_grad_matches_finite_differences(self, rng):
        net = Network.random([4, 5, 2], ["tanh", "sigmoid"], rng)
        x = rng.normal(size=4)
        v = rng.normal(size=2)

        def loss_of_x(xt):
            out, _ = net.forward(xt)
            return float(out @ v)

        _, tape = net.forward(x)
        _, input_grad = net.backward(tape, v)
        np.testing.assert_allclose(input_grad, finite_difference(loss_of_x, x), rtol=1e-6, atol=1e-9)

    def test_batch_grad_is_sum_of_singles(self, rng):
        net = Network.random([3, 4, 2], ["tanh", "identity"], rng)
        x = rng.normal(size=(5, 3))
        v = rng.normal(size=(5, 2))
        _, tape = net.forward(x)
        batch_flat, _ = net.backward(tape, v)
        total = np.zeros(net.n_params)
        for b in range(5):
            _, tape_b = net.forward(x[b])
            flat_b, _ = net.backward(tape_b, v[b])
            total += flat_b
        np.testing.assert_allclose(batch_flat, total, rtol=1e-12, atol=1e-12)

    def test_tape_from_other_network_rejected(self, rng):
        a = Network.random([3, 2], ["tanh"], rng)
        b = Network.random([3, 3], ["tanh"], rng)
        _, tape = a.forward(np.zeros(3))
        with pytest.raises(ContractViolationError):
            b.backward(tape, np.zeros(3))

    def test_wrong_grad_shape_rejected(self, rng):
        net = Network.random([3, 2], ["tanh"], rng)
        _, tape = net.forward(np.zeros((4, 3)))
        with pytest.raises(ContractViolationError):
            net.backward(tape, np.zeros((5, 2)))


class TestAdam:
    def test_first_step_closed_form(self):
        theta = np.array([1.0, -2.0, 0.5])
        grad = np.array([0.3, -0.1, 0.0])
        state = AdamState(3, lr=0.01)
        new = adam_update(theta.copy(), grad, state)
        # After one step m_hat = g and v_hat = g^2, so the step is
        # lr * g / (|g| + eps) elementwise.
        expected = theta - 0.01 * grad / (np.abs(grad) + 1e-8)
        np.testing.assert_allclose(new, expected, rtol=1e-12, atol=1e-15)
        assert state.step_count == 1

    def test_ascent_mirrors_descent(self):
        theta = np.array([1.0, 2.0])
        grad = np.array([0.5, -0.5])
        down = adam_update(theta.copy(), grad, AdamState(2, lr=0.1))
        up = adam_update(theta.copy(), grad, AdamState(2, lr=0.1), ascent=True)
        np.testing.assert_allclose(up - theta, -(down - theta), rtol=1e-12)

    def test_two_steps_match_reference_recursion(self):
        lr, b1, b2, eps = 3e-4, 0.9, 0.999, 1e-8
        theta = np.array([0.2, -0.7])
        grads = [np.array([1.0, -2.0]), np.array([-0.5, 0.25])]
        state = AdamState(2, lr=lr)
        got = theta.copy()
        for g in grads:
            got = adam_update(got, g, state)
        m = np.zeros(2)
        v = np.zeros(2)
        want = theta.copy()
        for k, g in enumerate(grads, start=1):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            want -= lr * (m / (1 - b1**k)) / (np.sqrt(v / (1 - b2**k)) + eps)
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_non_finite_gradient_raises_named_divergence(self):
        state = AdamState(2)
        with pytest.raises(DivergenceError, match="actor"):
            adam_update(np.zeros(2), np.array([np.nan, 0.0]), state, name="actor")

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractViolationError):
            adam_update(np.zeros(3), np.zeros(2), AdamState(3))

    def test_adam_step_updates_network_in_place(self, rng):
        net = Network.random([2, 2], ["identity"], rng)
        before = net.to_flat()
        adam_step(net, np.ones(net.n_params), AdamState(net.n_params, lr=0.1))
        assert not np.array_equal(net.to_flat(), before)


class TestCheckpoint:
    def test_round_trip_is_bit_identical(self, rng, tmp_path):
        nets = {
            "backbone": Network.random([3, 8, 4], ["tanh", "tanh"], rng),
            "head": Network.random([4, 2], ["sigmoid"], rng),
        }
        vectors = {"log_std": rng.normal(size=2)}
        meta = {"environment": "stub", "iteration": 7}
        path = tmp_path / "ckpt.json"
        save_checkpoint(path, nets, vectors, meta)
        loaded_nets, loaded_vecs, loaded_meta = load_checkpoint(path)
        assert loaded_meta == meta
        np.testing.assert_array_equal(loaded_vecs["log_std"], vectors["log_std"])
        for name in nets:
            np.testing.assert_array_equal(loaded_nets[name].to_flat(), nets[name].to_flat())
            assert network_spec(loaded_nets[name]) == network_spec(nets[name])

    def test_version_mismatch_rejected(self, rng, tmp_path):
        path = tmp_path / "ckpt.json"
        save_checkpoint(path, {"n": Network.random([2, 1], ["identity"], rng)})
        payload = json.loads(path.read_text())
        payload["format_version"] = 999
        path.write_text(json.dumps(payload))
        with pytest.raises(ContractViolationError, match="format_version"):
            load_checkpoint(path)

    def test_spec_round_trip(self, rng):
        net = Network.random([3, 5, 2], ["tanh", "sigmoid"], rng)
        rebuilt = network_from_spec(network_spec(net))
        assert rebuilt.n_params == net.n_params
        assert rebuilt._signature() == net._signature()


@given(st.lists(st.floats(-8, 8), min_size=13, max_size=13))
def test_flat_assignment_round_trips_exactly(flat_values):
    # [2, 3, 1] identity/tanh has 2*3+3 + 3*1+1 = 13 parameters.
    net = Network.zeros([2, 3, 1], ["tanh", "identity"])
    flat = np.array(flat_values)
    net.from_flat(flat)
    np.testing.assert_array_equal(net.to_flat(), flat)
