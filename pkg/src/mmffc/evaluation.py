"""Edge-server evaluation: constructed features into a gain-ratio decision tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Split
from .fitness import split_scores
from .genome import OPERATORS, evaluate_feature, terminals

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class TransformedDataset:
    columns: np.ndarray  # N x CF
    y: np.ndarray

    def __post_init__(self):
        if self.columns.ndim != 2 or self.columns.shape[1] < 1:
            raise ValueError("need at least one constructed column")
        if self.columns.shape[0] != self.y.shape[0]:
            raise ValueError("row count mismatch")

    def rows(self, indices) -> "TransformedDataset":
        idx = np.asarray(indices)
        return TransformedDataset(self.columns[idx], self.y[idx])


@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class SplitNode:
    feature: int
    threshold: float
    left: object
    right: object


def transform(ds: Dataset, features, operators=OPERATORS) -> TransformedDataset:
    trees = list(features)
    for t in trees:
        bad = [f for f in terminals(t) if not 0 <= f < ds.n_features]
        if bad:
            raise IndexError(f"constructed feature references columns {bad}; dataset has {ds.n_features}")
    cols = np.column_stack([evaluate_feature(t, ds.X, operators) for t in trees])
    return TransformedDataset(cols, ds.y)


def _majority(y, n_classes):
    return int(np.argmax(np.bincount(y, minlength=n_classes)))


def _best_split(X, y, n_classes, min_leaf):
    n = y.shape[0]
    total = np.bincount(y, minlength=n_classes)
    onehot = np.eye(n_classes, dtype=np.int64)
    best = None  # (ratio, feature, threshold)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        v = X[order, j]
        k = np.flatnonzero(v[1:] > v[:-1]) + 1  # left branch = first k rows
        k = k[(k >= min_leaf) & (n - k >= min_leaf)]
        if k.shape[0] == 0:
            continue
        cum = np.cumsum(onehot[y[order]], axis=0)
        gain, ratio = split_scores(cum[k - 1], total)
        ok = gain > 1e-12
        if not ok.any():
            continue
        # mirrored splits tie exactly in theory but differ by a few ulps in
        # practice; treat near-equal ratios as ties so the lowest cut wins
        scored = np.where(ok, ratio, -1.0)
        pick = int(np.flatnonzero(scored >= scored.max() - _TIE_TOL)[0])
        if best is None or ratio[pick] > best[0] + _TIE_TOL:
            lo, hi = v[k[pick] - 1], v[k[pick]]
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (float(ratio[pick]), j, float(thr))
    return best


def train_c45(tds: TransformedDataset, min_leaf: int = 2, n_classes: int | None = None):
    """Unpruned binary tree; each node takes the split with the highest gain ratio.

    Candidate thresholds are midpoints between consecutive distinct values.
    A node becomes a leaf when it is pure, has fewer than ``2*min_leaf``
    samples, or no candidate split has positive information gain.
    """
    X = np.asarray(tds.columns, dtype=np.float64)
    y = np.asarray(tds.y, dtype=np.int64)
    if y.shape[0] == 0:
        raise ValueError("empty training set")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    c = n_classes if n_classes is not None else int(y.max()) + 1

    def grow(idx):
        yy = y[idx]
        if np.all(yy == yy[0]) or idx.shape[0] < 2 * min_leaf:
            return Leaf(_majority(yy, c))
        found = _best_split(X[idx], yy, c, min_leaf)
        if found is None:
            return Leaf(_majority(yy, c))
        _, j, thr = found
        go_left = X[idx, j] <= thr
        return SplitNode(j, thr, grow(idx[go_left]), grow(idx[~go_left]))

    return grow(np.arange(y.shape[0]))


def predict(tree, row) -> int:
    node = tree
    while isinstance(node, SplitNode):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.label


def accuracy(tree, tds: TransformedDataset) -> float:
    T = tds.y.shape[0]
    if T == 0:
        raise ValueError("empty test set")
    C = sum(predict(tree, row) == label for row, label in zip(tds.columns, tds.y))
    return 100.0 * C / T


def feature_reduction(total_features: int, constructed: int) -> float:
    if total_features <= 0:
        raise ValueError("total feature count must be positive")
    return (total_features - constructed) / total_features * 100.0


def baseline_no_fc(ds: Dataset, split: Split, min_leaf: int = 2) -> float:
    """Test accuracy of the same classifier on the original features."""
    full = TransformedDataset(ds.X, ds.y)
    tree = train_c45(full.rows(split.train_indices), min_leaf, ds.n_classes)
    return accuracy(tree, full.rows(split.test_indices))
