"""SMOTE properties: segment membership, reproducibility, per-head
rebalancing to parity."""

import numpy as np
import pytest

from conftest import random_labels
from softsense.errors import ConfigError, InsufficientDataError
from softsense.heads import HeadLabels
from softsense.nn import make_rng
from softsense.smote import smote_oversample, smote_rebalance


def recover_interpolation(synth_row, minority):
    """Best (anchor, partner, u, residual) explaining one synthetic row."""
    best = None
    for i in range(len(minority)):
        for j in range(len(minority)):
            if i == j:
                continue
            seg = minority[j] - minority[i]
            denom = float(seg @ seg)
            if denom == 0.0:
                u = 0.0
            else:
                u = float((synth_row - minority[i]) @ seg) / denom
            resid = float(np.max(np.abs(minority[i] + u * seg - synth_row)))
            if best is None or resid < best[3]:
                best = (i, j, u, resid)
    return best


class TestSmoteOversample:
    def test_identical_points_collapse(self):
        feats = np.array([[1.0, 2.0], [1.0, 2.0], [9.0, 9.0]])
        mask = np.array([True, True, False])
        out = smote_oversample(feats, mask, k=1, target_count=5, rng=make_rng(0))
        assert out.shape == (5, 2)
        np.testing.assert_allclose(out, np.tile([1.0, 2.0], (5, 1)))

    def test_points_on_segment(self):
        feats = np.array([[0.0, 0.0], [1.0, 1.0], [50.0, -3.0]])
        mask = np.array([True, True, False])
        out = smote_oversample(feats, mask, k=1, target_count=20, rng=make_rng(1))
        # both coordinates equal and in [0, 1]: convexity of interpolation
        assert np.allclose(out[:, 0], out[:, 1])
        assert (out >= 0.0).all() and (out <= 1.0).all()

    def test_empty_target(self):
        feats = np.random.default_rng(0).standard_normal((5, 3))
        out = smote_oversample(feats, np.ones(5, bool), k=2, target_count=0,
                               rng=make_rng(2))
        assert out.shape == (0, 3)

    def test_too_few_minority(self):
        with pytest.raises(InsufficientDataError):
            smote_oversample(np.zeros((3, 2)), np.array([True, False, False]),
                             k=1, target_count=1, rng=make_rng(0))

    def test_invalid_k(self):
        with pytest.raises(ConfigError):
            smote_oversample(np.zeros((3, 2)), np.ones(3, bool), k=0,
                             target_count=1, rng=make_rng(0))

    def test_seeded_reproducibility(self):
        feats = make_rng(5).standard_normal((20, 4))
        mask = np.zeros(20, bool)
        mask[:8] = True
        a = smote_oversample(feats, mask, 3, 30, make_rng(77))
        b = smote_oversample(feats, mask, 3, 30, make_rng(77))
        np.testing.assert_array_equal(a, b)

    def test_rows_are_minority_interpolations(self):
        rng = make_rng(9)
        feats = rng.standard_normal((30, 5))
        mask = np.zeros(30, bool)
        mask[:10] = True
        minority = feats[mask]
        out = smote_oversample(feats, mask, k=3, target_count=25, rng=make_rng(3))
        for row in out:
            i, j, u, resid = recover_interpolation(row, minority)
            assert resid <= 1e-9
            assert -1e-9 <= u <= 1.0 + 1e-9

    def test_no_dependence_on_majority_rows(self):
        rng = make_rng(13)
        feats = rng.standard_normal((25, 4))
        mask = np.zeros(25, bool)
        mask[:9] = True
        out_a = smote_oversample(feats, mask, 3, 40, make_rng(55))
        shuffled = feats.copy()
        shuffled[~mask] = rng.standard_normal(((~mask).sum(), 4)) * 100
        out_b = smote_oversample(shuffled, mask, 3, 40, make_rng(55))
        np.testing.assert_array_equal(out_a, out_b)


class TestSmoteRebalance:
    def test_counts_equal_after_rebalance(self, rng):
        labels = random_labels(rng, 120, 3)
        feats = rng.standard_normal((120, 6))
        aug_feats, aug_labels = smote_rebalance(feats, labels, 5, make_rng(4))
        counts = aug_labels.class_counts()
        for j in range(3):
            assert counts[j, 0] == counts[j, 1]
        assert aug_feats.shape[0] == aug_labels.n_samples

    def test_synthetic_rows_have_single_head(self, rng):
        labels = random_labels(rng, 80, 2)
        feats = rng.standard_normal((80, 4))
        aug_feats, aug_labels = smote_rebalance(feats, labels, 5, make_rng(4))
        extra = aug_labels.codes[80:]
        if extra.shape[0]:
            assert ((extra >= 0).sum(axis=1) == 1).all()

    def test_balanced_input_unchanged(self):
        codes = np.array([[0], [1], [0], [1]], dtype=np.int8)
        feats = np.arange(8.0).reshape(4, 2)
        aug_feats, aug_labels = smote_rebalance(feats, HeadLabels(codes), 5,
                                                make_rng(0))
        assert aug_feats.shape == (4, 2)
        np.testing.assert_array_equal(aug_labels.codes, codes)
