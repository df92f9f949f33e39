"""Information-theoretic fitness of a constructed feature (all logs base 2)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._pykernels import _entropy_of_counts


@dataclass(frozen=True)
class BinnedFeature:
    bin_ids: np.ndarray
    bin_count: int

    def __post_init__(self):
        ids = np.asarray(self.bin_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.shape[0] == 0:
            raise ValueError("bin_ids must be a non-empty vector")
        if self.bin_count < 1 or self.bin_count > ids.shape[0]:
            raise ValueError("bin_count must lie in [1, N]")
        if ids.min() < 0 or ids.max() >= self.bin_count:
            raise ValueError("bin id outside [0, bin_count)")
        object.__setattr__(self, "bin_ids", ids)

    @classmethod
    def from_values(cls, values, n_bins: int = 10) -> "BinnedFeature":
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] == 0:
            raise ValueError("need a non-empty vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")
        return cls(*kernels.equal_frequency_bins(v, n_bins))


def _labels(labels, n_classes, n=None):
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] == 0:
        raise ValueError("labels must be a non-empty vector")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"length mismatch: {y.shape[0]} labels vs {n} feature values")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return y


def entropy_of_counts(counts) -> float:
    """Entropy of the distribution given by non-negative ``counts``."""
    counts = list(counts)
    return _entropy_of_counts(counts, sum(counts))


def entropy(labels, n_classes: int) -> float:
    y = _labels(labels, n_classes)
    return entropy_of_counts(np.bincount(y, minlength=n_classes).tolist())


def feature_entropy(bf: BinnedFeature) -> float:
    return entropy_of_counts(np.bincount(bf.bin_ids, minlength=bf.bin_count).tolist())


def conditional_entropy(bf: BinnedFeature, labels, n_classes: int) -> float:
    """H(Y | f) weighted over the bins of ``bf``."""
    y = _labels(labels, n_classes, bf.bin_ids.shape[0])
    n = y.shape[0]
    joint = np.zeros((bf.bin_count, n_classes), dtype=np.int64)
    np.add.at(joint, (bf.bin_ids, y), 1)
    h = 0.0
    for row in joint.tolist():
        nj = sum(row)
        if nj:
            h += (nj / n) * entropy_of_counts(row)
    return h


def info_gain(bf: BinnedFeature, labels, n_classes: int) -> float:
    gain = entropy(labels, n_classes) - conditional_entropy(bf, labels, n_classes)
    return max(gain, 0.0)


def gain_ratio(bf: BinnedFeature, labels, n_classes: int) -> float:
    """IG / H(f); zero for a single-bin (constant) feature."""
    y = _labels(labels, n_classes, bf.bin_ids.shape[0])
    return kernels.igr_binned(bf.bin_ids, bf.bin_count, y, n_classes)


def igr(feature_values, labels, n_classes: int, n_bins: int = 10) -> float:
    """Gain ratio of a continuous feature after equal-frequency binning."""
    v = np.asarray(feature_values, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise ValueError("need a non-empty feature vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature values must be finite")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    y = _labels(labels, n_classes, v.shape[0])
    return kernels.igr_values(v, y, n_classes, n_bins)


def split_scores(class_counts_left: np.ndarray, class_counts_total: np.ndarray):
    """Vectorized (gain, gain ratio) for many binary splits of one node.

    ``class_counts_left`` is K x c (left-branch class counts per candidate);
    the right branch is ``total - left``. Same formulas as :func:`gain_ratio`
    with the two branches as bins.
    """
    left = np.asarray(class_counts_left, dtype=np.float64)
    total = np.asarray(class_counts_total, dtype=np.float64)
    right = total[None, :] - left
    n = total.sum()
    n_left = left.sum(axis=1)
    n_right = n - n_left

    def rows_entropy(counts, sizes):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = counts / sizes[:, None]
            terms = np.where(counts > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        return -terms.sum(axis=1)

    h_y = entropy_of_counts(total.tolist())
    h_cond = (n_left / n) * rows_entropy(left, np.maximum(n_left, 1)) + \
        (n_right / n) * rows_entropy(right, np.maximum(n_right, 1))
    gain = np.maximum(h_y - h_cond, 0.0)
    split_info = rows_entropy(np.stack([n_left, n_right], axis=1), np.full(left.shape[0], n))
    ratio = np.divide(gain, split_info, out=np.zeros_like(gain), where=split_info > 0)
    return gain, ratio
