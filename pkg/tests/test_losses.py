"""Loss functions, class weights, and the combiners."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_labels
from softsense.errors import ConfigError, ShapeError
from softsense.gradcheck import finite_difference_grad, max_relative_error
from softsense.heads import HeadLabels
from softsense.losses import (ClassWeights, VarianceParams, binary_ce,
                              class_weights, combined_loss_naive,
                              combined_loss_variance, mse_loss,
                              multihead_weighted_ce, unit_weights)
from softsense.nn import AdamState, adam_step, make_rng

LN2 = math.log(2.0)


class TestMse:
    def test_zero_at_equality(self):
        X = np.array([[1.0, 2.0]])
        assert mse_loss(X, X.copy())[0] == 0.0

    def test_hand_value(self):
        loss, _ = mse_loss(np.array([[1.0, 1.0]]), np.array([[0.0, 0.0]]))
        assert loss == 2.0

    def test_gradient_matches_finite_differences(self):
        rng = make_rng(2)
        X = rng.standard_normal((4, 3))
        X_hat = rng.standard_normal((4, 3))
        _, grad = mse_loss(X, X_hat)
        fd = finite_difference_grad(lambda p: mse_loss(X, p)[0], X_hat.copy())
        assert max_relative_error(grad, fd) <= 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros((2, 2)), np.zeros((2, 3)))


class TestBinaryCe:
    def test_confident_correct(self):
        assert binary_ce(1, 1.0) == pytest.approx(0.0, abs=1e-11)

    def test_half_is_ln2(self):
        assert binary_ce(1, 0.5) == pytest.approx(LN2, rel=1e-12)
        assert binary_ce(0, 0.5) == pytest.approx(LN2, rel=1e-12)

    def test_clamp_prevents_infinity(self):
        assert math.isfinite(binary_ce(1, 0.0))


class TestClassWeights:
    def test_balanced_single_head(self):
        codes = np.array([[0]] * 50 + [[1]] * 50, dtype=np.int8)
        w = class_weights(HeadLabels(codes))
        assert w.negative[0] == 1.0 and w.positive[0] == 1.0

    def test_imbalanced_single_head(self):
        codes = np.array([[0]] * 90 + [[1]] * 10, dtype=np.int8)
        w = class_weights(HeadLabels(codes))
        assert w.negative[0] == pytest.approx(100 / 180, rel=1e-15)
        assert w.positive[0] == 5.0

    def test_two_heads_partial_observation(self):
        # head 0: 40 negatives, 10 positives, 50 missing; N=100, n_heads=2
        codes = np.full((100, 2), -1, dtype=np.int8)
        codes[:40, 0] = 0
        codes[40:50, 0] = 1
        codes[:, 1] = 0  # keeps every row observed somewhere
        w = class_weights(HeadLabels(codes))
        assert w.negative[0] == pytest.approx(0.625, rel=1e-15)
        assert w.positive[0] == 2.5

    def test_absent_class_gets_zero_weight(self):
        codes = np.ones((10, 1), dtype=np.int8)
        w = class_weights(HeadLabels(codes))
        assert w.negative[0] == 0.0
        assert w.positive[0] > 0.0

    def test_mass_identity_exact(self):
        # w0 * n0 == w1 * n1 exactly, on the defining rationals
        rng = make_rng(7)
        for _ in range(25):
            labels = random_labels(rng, int(rng.integers(5, 200)),
                                   int(rng.integers(1, 6)))
            w = class_weights(labels)
            counts = labels.class_counts()
            for j in range(labels.n_heads):
                n0, n1 = int(counts[j, 0]), int(counts[j, 1])
                if n0 and n1:
                    assert w.exact_negative[j] * n0 == w.exact_positive[j] * n1

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            class_weights(HeadLabels(np.zeros((0, 2), dtype=np.int8)))


class TestMultiheadCe:
    def test_reduces_to_binary_ce(self):
        labels = HeadLabels(np.array([[1]], dtype=np.int8))
        probs = np.array([[0.5, 0.5]])
        loss, _ = multihead_weighted_ce(labels, probs, unit_weights(1))
        assert loss == pytest.approx(LN2, rel=1e-12)

    def test_correct_predictions_near_zero(self):
        codes = np.array([[0, 1], [1, -1]], dtype=np.int8)
        labels = HeadLabels(codes)
        probs = np.array([[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.5, 0.5]])
        loss, _ = multihead_weighted_ce(labels, probs, unit_weights(2))
        assert 0.0 <= loss < 1e-10

    def test_equals_mean_binary_ce_on_full_head(self, rng):
        n = 16
        codes = rng.integers(0, 2, size=(n, 1)).astype(np.int8)
        labels = HeadLabels(codes)
        p1 = rng.uniform(0.05, 0.95, size=n)
        probs = np.column_stack([1.0 - p1, p1])
        loss, _ = multihead_weighted_ce(labels, probs, unit_weights(1))
        expected = sum(binary_ce(int(c), p) for c, p in zip(codes[:, 0], p1)) / n
        assert loss == pytest.approx(expected, rel=1e-12)

    def test_weight_scaling_is_linear(self, rng):
        labels = random_labels(rng, 12, 3)
        probs = rng.uniform(0.1, 0.9, size=(12, 6))
        w = class_weights(labels)
        base, _ = multihead_weighted_ce(labels, probs, w)
        doubled, _ = multihead_weighted_ce(labels, probs, w.scaled(2.0))
        assert doubled == 2.0 * base  # exact: scaling by a power of two
        tripled, _ = multihead_weighted_ce(labels, probs, w.scaled(3.0))
        assert tripled == pytest.approx(3.0 * base, rel=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        labels = random_labels(rng, 4, 2)
        probs = rng.uniform(0.1, 0.9, size=(4, 4))
        w = class_weights(labels)
        _, grad = multihead_weighted_ce(labels, probs, w)
        fd = finite_difference_grad(
            lambda p: multihead_weighted_ce(labels, p, w)[0], probs.copy())
        assert max_relative_error(grad, fd) <= 1e-4

    def test_gradient_zero_at_masked_entries(self, rng):
        codes = np.array([[1, -1], [-1, 0]], dtype=np.int8)
        labels = HeadLabels(codes)
        probs = rng.uniform(0.2, 0.8, size=(2, 4))
        _, grad = multihead_weighted_ce(labels, probs, unit_weights(2))
        assert grad[0, 2] == 0.0 and grad[0, 3] == 0.0
        assert grad[1, 0] == 0.0 and grad[1, 1] == 0.0

    def test_head_count_mismatch(self, rng):
        labels = random_labels(rng, 4, 2)
        with pytest.raises(ConfigError):
            multihead_weighted_ce(labels, np.full((4, 4), 0.5), unit_weights(3))


class TestCombiners:
    def test_unit_variances(self):
        J, _, _ = combined_loss_variance(2.0, 3.0, VarianceParams())
        assert J == 4.0

    def test_gradients_match_finite_differences(self):
        v = VarianceParams(np.array([0.4, -0.7]))
        _, g1, g2 = combined_loss_variance(2.0, 3.0, v)
        fd = finite_difference_grad(
            lambda s: combined_loss_variance(2.0, 3.0, VarianceParams(s))[0],
            v.s.copy())
        assert max_relative_error(np.array([g1, g2]), fd) <= 1e-6

    def test_stationary_points(self):
        # d/ds of J_x e^-s/2 + s/2 vanishes at sigma1^2 = J_x;
        # d/ds of J_y e^-s + s/2 vanishes at sigma2^2 = 2 J_y.
        v = VarianceParams()
        state = AdamState.for_param(v.s, learning_rate=0.05)
        for _ in range(2000):
            _, g1, g2 = combined_loss_variance(2.0, 3.0, v)
            adam_step(state, v.s, np.array([g1, g2]))
        assert v.sigma1_sq == pytest.approx(2.0, abs=1e-3)
        assert v.sigma2_sq == pytest.approx(6.0, abs=1e-3)

    def test_combined_value_can_go_negative(self):
        v = VarianceParams(np.array([-8.0, -8.0]))
        J, _, _ = combined_loss_variance(1e-6, 1e-6, v)
        assert J < 0

    def test_naive_endpoints_and_midpoint(self):
        assert combined_loss_naive(2.0, 3.0, 1.0) == 2.0
        assert combined_loss_naive(2.0, 3.0, 0.0) == 3.0
        assert combined_loss_naive(2.0, 3.0, 0.5) == 2.5

    def test_naive_lambda_range(self):
        with pytest.raises(ConfigError):
            combined_loss_naive(1.0, 1.0, 1.5)


@settings(max_examples=40, deadline=None)
@given(n0=st.integers(1, 400), n1=st.integers(1, 400),
       extra_heads=st.integers(0, 4))
def test_mass_identity_property(n0, n1, extra_heads):
    codes = np.full((n0 + n1, 1 + extra_heads), -1, dtype=np.int8)
    codes[:n0, 0] = 0
    codes[n0:, 0] = 1
    for h in range(1, 1 + extra_heads):
        codes[h::2, h] = 1
    labels = HeadLabels(codes)
    w = class_weights(labels)
    assert w.exact_negative[0] * n0 == w.exact_positive[0] * n1
    # float projections agree to the last couple of ulps
    assert float(w.exact_negative[0] * n0) == pytest.approx(
        float(w.exact_positive[0] * n1), rel=1e-15)
