from math import log2

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmffc.fitness import (
    BinnedFeature,
    conditional_entropy,
    entropy,
    feature_entropy,
    gain_ratio,
    igr,
    info_gain,
    split_scores,
)

from oracles import class_entropy, quantile_bins, table_measures


def bf(ids):
    ids = np.asarray(ids)
    return BinnedFeature(ids, int(ids.max()) + 1)


class TestEntropy:
    def test_balanced_binary(self):
        assert entropy([0, 0, 1, 1], 2) == pytest.approx(1.0, abs=1e-12)

    def test_three_classes_uniform(self):
        assert entropy([0, 1, 2], 3) == pytest.approx(log2(3), abs=1e-12)

    def test_absent_class_contributes_nothing(self):
        assert entropy([0, 0, 0], 3) == 0.0

    def test_feature_entropy_examples(self):
        assert feature_entropy(bf([0, 0, 1, 1])) == pytest.approx(1.0)
        assert feature_entropy(BinnedFeature(np.zeros(5, dtype=int), 1)) == 0.0
        assert feature_entropy(bf([0, 0, 0, 1])) == pytest.approx(0.81128, abs=1e-5)

    def test_conditional_entropy_examples(self):
        assert conditional_entropy(bf([0, 0, 1, 1]), [0, 0, 1, 1], 2) == 0.0
        single = BinnedFeature(np.zeros(4, dtype=int), 1)
        assert conditional_entropy(single, [0, 1, 1, 1], 2) == pytest.approx(entropy([0, 1, 1, 1], 2))
        assert conditional_entropy(bf([0, 0, 1, 1]), [0, 1, 0, 1], 2) == pytest.approx(1.0)

    def test_gain_ratio_identity(self):
        assert gain_ratio(bf([0, 0, 1, 1]), [0, 0, 1, 1], 2) == pytest.approx(1.0)

    def test_igr_label_as_feature(self):
        y = np.repeat([0, 1, 2], 10)
        assert igr(y.astype(float), y, 3, n_bins=3) == pytest.approx(1.0)

    def test_igr_constant_is_zero(self):
        assert igr(np.full(8, 3.5), [0, 1] * 4, 2) == 0.0

    def test_label_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            igr([1.0, 2.0, 3.0], [0, 1], 2)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            igr([1.0, np.inf], [0, 1], 2)

    def test_binned_feature_validation(self):
        with pytest.raises(ValueError):
            BinnedFeature(np.array([0, 3]), 2)
        with pytest.raises(ValueError):
            BinnedFeature(np.array([0, 1]), 3)


@st.composite
def instances(draw):
    n = draw(st.integers(1, 50))
    c = draw(st.integers(1, 3))
    B = draw(st.integers(1, 4))
    bins = draw(st.lists(st.integers(0, B - 1), min_size=n, max_size=n))
    labels = draw(st.lists(st.integers(0, c - 1), min_size=n, max_size=n))
    # compact bin ids so every id in [0, bin_count) is used
    used = sorted(set(bins))
    return [used.index(b) for b in bins], labels, max(labels) + 1


class TestAgainstJointTable:
    @given(instances())
    @settings(max_examples=300, deadline=None)
    def test_all_measures(self, inst):
        bins, labels, c = inst
        f = bf(bins)
        h_y, h_f, h_y_f, ig, ratio = table_measures(bins, labels)
        assert entropy(labels, c) == pytest.approx(h_y, abs=1e-9)
        assert feature_entropy(f) == pytest.approx(h_f, abs=1e-9)
        assert conditional_entropy(f, labels, c) == pytest.approx(h_y_f, abs=1e-9)
        assert info_gain(f, labels, c) == pytest.approx(max(ig, 0.0), abs=1e-9)
        assert gain_ratio(f, labels, c) == pytest.approx(max(ratio, 0.0), abs=1e-9)

    @given(instances())
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, inst):
        bins, labels, c = inst
        f = bf(bins)
        assert 0.0 <= entropy(labels, c) <= log2(c) + 1e-12 if c > 1 else entropy(labels, c) == 0.0
        assert -1e-12 <= info_gain(f, labels, c) <= entropy(labels, c) + 1e-12
        assert 0.0 <= gain_ratio(f, labels, c) <= 1.0 + 1e-9

    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=40),
           st.integers(0, 2**32 - 1), st.integers(2, 6))
    @settings(max_examples=200, deadline=None)
    def test_igr_on_values_matches_oracle(self, values, seed, B):
        y = np.random.default_rng(seed).integers(0, 3, len(values))
        # values on a coarse grid so the oracle's float quantiles see exact ties
        v = np.round(np.asarray(values), 1)
        expected = table_measures(quantile_bins(v, B), y.tolist())[4]
        assert igr(v, y, 3, n_bins=B) == pytest.approx(max(expected, 0.0), abs=1e-9)


class TestInvariances:
    @given(st.lists(st.integers(-20, 20), min_size=2, max_size=40), st.integers(0, 2**32 - 1),
           st.sampled_from(["cube", "exp", "affine", "arctan"]), st.integers(2, 10))
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_map(self, grid, seed, kind, B):
        x = np.asarray(grid, dtype=float) / 4.0
        y = np.random.default_rng(seed).integers(0, 2, x.shape[0])
        fx = {"cube": x**3, "exp": np.exp(x / 5), "affine": 3.0 * x + 7.0, "arctan": np.arctan(x)}[kind]
        assert igr(fx, y, 2, n_bins=B) == pytest.approx(igr(x, y, 2, n_bins=B), abs=1e-12)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_row_permutation(self, values, seed):
        rng = np.random.default_rng(seed)
        v = np.asarray(values)
        y = rng.integers(0, 3, v.shape[0])
        perm = rng.permutation(v.shape[0])
        assert igr(v[perm], y[perm], 3) == pytest.approx(igr(v, y, 3), abs=1e-12)


class TestSplitScores:
    def test_matches_scalar_path(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(4, 30))
            y = rng.integers(0, 3, n)
            k = int(rng.integers(1, n))
            left = np.bincount(y[:k], minlength=3)
            total = np.bincount(y, minlength=3)
            gain, ratio = split_scores(left[None, :], total)
            h_cond = k / n * class_entropy(y[:k].tolist()) + (n - k) / n * class_entropy(y[k:].tolist())
            expect_gain = max(class_entropy(y.tolist()) - h_cond, 0.0)
            split_info = -(k / n) * log2(k / n) - ((n - k) / n) * log2((n - k) / n)
            assert gain[0] == pytest.approx(expect_gain, abs=1e-9)
            assert ratio[0] == pytest.approx(expect_gain / split_info, abs=1e-9)
