"""Numeric substrate: activations, dense forward/backward vs the
finite-difference oracle, Adam, and determinism."""

import math

import numpy as np
import pytest

from softsense.errors import ConfigError, ShapeError
from softsense.gradcheck import finite_difference_grad, max_relative_error
from softsense.nn import (ACTIVATIONS, AdamState, DenseLayer, activation_apply,
                          adam_step, dense_backward, dense_forward, init_dense,
                          make_rng)


class TestActivations:
    def test_sigmoid_symmetry_point(self):
        assert activation_apply("sigmoid", np.array([[0.0]]))[0, 0] == 0.5

    def test_relu_sign_split(self):
        out = activation_apply("relu", np.array([[-1.0, 2.0]]))
        assert out.tolist() == [[0.0, 2.0]]

    def test_sigmoid_stable_tail(self):
        # 1 / (1 + e^50): tiny but strictly positive, no underflow to 0
        v = activation_apply("sigmoid", np.array([[-50.0]]))[0, 0]
        assert 0.0 < v <= 1e-20
        assert math.isfinite(math.log(v))

    def test_linear_identity(self):
        x = np.array([[1.5, -2.0]])
        assert activation_apply("linear", x).tolist() == x.tolist()

    def test_unknown_tag(self):
        with pytest.raises(ConfigError):
            activation_apply("tanh", np.array([[0.0]]))

    def test_no_nonfinite_for_large_inputs(self):
        rng = make_rng(0)
        X = rng.uniform(-1e3, 1e3, size=(16, 8))
        for act in ACTIVATIONS:
            layer = init_dense(make_rng(1), 8, 5, act)
            out, cache = dense_forward(layer, X)
            gw, gb, gx = dense_backward(layer, cache, np.ones_like(out))
            for arr in (out, gw, gb, gx):
                assert np.isfinite(arr).all()


class TestDenseForward:
    def test_identity_map(self):
        layer = DenseLayer(np.eye(3), np.zeros(3), "linear")
        X = np.arange(6.0).reshape(2, 3)
        out, _ = dense_forward(layer, X)
        np.testing.assert_array_equal(out, X)

    def test_zero_preactivation_sigmoid(self):
        layer = DenseLayer(np.array([[1.0, 1.0]]), np.zeros(1), "sigmoid")
        out, _ = dense_forward(layer, np.array([[0.0, 0.0]]))
        assert out[0, 0] == 0.5

    def test_hand_arithmetic_relu(self):
        layer = DenseLayer(np.array([[2.0]]), np.array([1.0]), "relu")
        out, _ = dense_forward(layer, np.array([[3.0]]))
        assert out[0, 0] == 7.0

    def test_shape_error_names_shapes(self):
        layer = init_dense(make_rng(0), 4, 2, "linear")
        with pytest.raises(ShapeError, match="3"):
            dense_forward(layer, np.zeros((5, 3)))


class TestDenseBackward:
    def test_bias_gradient_is_upstream_sum(self):
        layer = init_dense(make_rng(3), 4, 3, "linear")
        out, cache = dense_forward(layer, make_rng(4).standard_normal((1, 4)))
        _, gb, _ = dense_backward(layer, cache, np.ones_like(out))
        np.testing.assert_array_equal(gb, np.ones(3))

    def test_dead_relu_unit(self):
        layer = DenseLayer(np.ones((2, 3)), np.full(2, -100.0), "relu")
        X = np.zeros((4, 3))
        out, cache = dense_forward(layer, X)
        gw, gb, gx = dense_backward(layer, cache, np.ones_like(out))
        assert not gw.any() and not gb.any() and not gx.any()

    @pytest.mark.parametrize("activation", ACTIVATIONS)
    def test_gradients_match_finite_differences(self, activation):
        rng = make_rng(11)
        layer = init_dense(rng, 4, 3, activation)
        layer.bias[:] = rng.uniform(0.05, 0.2, size=3)  # keep off the relu kink
        X = rng.standard_normal((5, 4))
        U = rng.standard_normal((5, 3))

        out, cache = dense_forward(layer, X)
        gw, gb, gx = dense_backward(layer, cache, U)

        def loss_of_weights(w):
            probe = DenseLayer(w, layer.bias, activation)
            y, _ = dense_forward(probe, X)
            return float((y * U).sum())

        fd = finite_difference_grad(loss_of_weights, layer.weights.copy())
        assert max_relative_error(gw, fd) <= 1e-4

        def loss_of_input(x):
            y, _ = dense_forward(layer, x)
            return float((y * U).sum())

        fd_x = finite_difference_grad(loss_of_input, X.copy())
        assert max_relative_error(gx, fd_x) <= 1e-4

    def test_cache_layer_mismatch(self):
        a = init_dense(make_rng(0), 4, 3, "linear")
        b = init_dense(make_rng(0), 5, 3, "linear")
        out, cache = dense_forward(a, np.zeros((2, 4)))
        with pytest.raises(ShapeError):
            dense_backward(b, cache, out)


class TestAdam:
    def test_zero_gradient_is_fixed_point(self):
        param = np.array([1.0, -2.0, 3.0])
        state = AdamState.for_param(param)
        before = param.copy()
        adam_step(state, param, np.zeros(3))
        np.testing.assert_array_equal(param, before)
        assert not state.m.any() and not state.v.any()
        assert state.t == 1

    def test_first_step_magnitude(self):
        # bias-corrected m_hat = g, v_hat = g^2: step = lr * g/(|g| + eps)
        param = np.array([0.0])
        state = AdamState.for_param(param, learning_rate=1e-3)
        adam_step(state, param, np.array([1.0]))
        assert abs(abs(param[0]) - 1e-3) <= 1e-6
        assert param[0] < 0

    def test_second_identical_gradient(self):
        param = np.array([0.0])
        state = AdamState.for_param(param, learning_rate=1e-3)
        adam_step(state, param, np.array([1.0]))
        first = param[0]
        adam_step(state, param, np.array([1.0]))
        assert abs(abs(param[0] - first) - 1e-3) <= 1e-6
        assert state.t == 2

    def test_shape_mismatch(self):
        param = np.zeros(3)
        state = AdamState.for_param(param)
        with pytest.raises(ShapeError):
            adam_step(state, param, np.zeros(4))


class TestRngAndInit:
    def test_same_seed_same_draws(self):
        a = make_rng(99).uniform(size=10)
        b = make_rng(99).uniform(size=10)
        np.testing.assert_array_equal(a, b)

    def test_glorot_bounds_and_zero_bias(self):
        layer = init_dense(make_rng(5), 30, 20, "relu")
        limit = np.sqrt(6.0 / 50)
        assert np.abs(layer.weights).max() <= limit
        assert not layer.bias.any()

    def test_param_count(self):
        layer = init_dense(make_rng(5), 7, 3, "relu")
        assert layer.param_count() == 8 * 3


class TestFiniteDifferenceOracle:
    def test_quadratic_exact(self):
        fd = finite_difference_grad(lambda p: float(p[0] ** 2), np.array([3.0]))
        assert abs(fd[0] - 6.0) <= 1e-8

    def test_constant_is_zero(self):
        fd = finite_difference_grad(lambda p: 1.0, np.zeros(4))
        np.testing.assert_array_equal(fd, np.zeros(4))

    def test_nonpositive_eps_rejected(self):
        with pytest.raises(ValueError):
            finite_difference_grad(lambda p: 0.0, np.zeros(1), eps=0.0)

    def test_nonfinite_loss_reported(self):
        from softsense.errors import NumericError
        with pytest.raises(NumericError):
            finite_difference_grad(lambda p: float("nan"), np.zeros(1))
