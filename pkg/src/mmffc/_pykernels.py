"""NumPy implementations of the hot kernels.

Reference semantics for ``_ckernels.pyx``: both modules must return
bit-identical results, so every floating-point reduction here is written as
an explicit left-to-right loop in the same order the compiled version uses.
"""
from math import log2

import numpy as np

SATURATION = 1e150
DIV_EPS = 1e-6

# values are snapped to 32 mantissa bits before binning so that results
# differing only by rounding noise, e.g. x - (1 + x) vs -1, count as ties
SNAP_BITS = 20
_SNAP_HALF = np.uint64(1 << (SNAP_BITS - 1))
_SNAP_MASK = np.uint64(~((1 << SNAP_BITS) - 1) & 0xFFFFFFFFFFFFFFFF)

# postfix opcodes; non-negative codes are feature columns
OP_ADD, OP_SUB, OP_MUL, OP_DIV = -1, -2, -3, -4


def eval_postfix(code, X):
    """Evaluate a postfix program over every row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    with np.errstate(over="ignore"):  # overflow saturates below
        return _eval_postfix(code, X)


def _eval_postfix(code, X):
    stack = []
    for c in code:
        c = int(c)
        if c >= 0:
            stack.append(X[:, c])
            continue
        b = stack.pop()
        a = stack.pop()
        if c == OP_ADD:
            r = a + b
        elif c == OP_SUB:
            r = a - b
        elif c == OP_MUL:
            r = a * b
        elif c == OP_DIV:
            small = np.abs(b) < DIV_EPS
            r = np.divide(a, b, out=a.copy(), where=~small)
        else:
            raise ValueError(f"unknown opcode {c}")
        stack.append(np.clip(r, -SATURATION, SATURATION))
    if len(stack) != 1:
        raise ValueError("malformed postfix program")
    return np.array(stack[0], dtype=np.float64)


def snap(values):
    """Round to nearest on the low mantissa bits (exact integer arithmetic)."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    bits = v.view(np.uint64)
    out = ((bits + _SNAP_HALF) & _SNAP_MASK).view(np.float64)
    return np.where(v == 0.0, 0.0, out)


def equal_frequency_bins(values, n_bins):
    """Return ``(bin_ids, bin_count)`` for equal-frequency binning.

    Values are snapped first (see :func:`snap`). Cut points are the
    empirical quantiles ``k/n_bins`` of ``values``; a value equal to a cut
    point falls in the lower bin. With fewer distinct values
    than ``n_bins`` each distinct value gets its own bin. Empty bins are
    squeezed out so ids are contiguous.
    """
    values = snap(values)
    n = values.shape[0]
    s = np.sort(values)
    distinct = np.unique(s)
    if distinct.shape[0] < n_bins:
        return np.searchsorted(distinct, values).astype(np.int64), int(distinct.shape[0])
    idx = (np.arange(1, n_bins, dtype=np.int64) * (n - 1)) // n_bins
    cuts = np.unique(s[idx])
    raw = np.searchsorted(cuts, values, side="left")
    used, bins = np.unique(raw, return_inverse=True)
    return bins.astype(np.int64), int(used.shape[0])


def _entropy_of_counts(counts, total):
    h = 0.0
    for k in counts:
        if k > 0:
            p = k / total
            h -= p * log2(p)
    return h


def igr_binned(bins, n_bins, labels, n_classes):
    n = len(bins)
    joint = np.zeros((n_bins, n_classes), dtype=np.int64)
    np.add.at(joint, (np.asarray(bins), np.asarray(labels)), 1)
    class_counts = joint.sum(axis=0).tolist()
    bin_counts = joint.sum(axis=1).tolist()
    h_y = _entropy_of_counts(class_counts, n)
    h_f = _entropy_of_counts(bin_counts, n)
    if h_f == 0.0:
        return 0.0
    h_y_f = 0.0
    for j, row in enumerate(joint.tolist()):
        nj = bin_counts[j]
        if nj > 0:
            h_y_f += (nj / n) * _entropy_of_counts(row, nj)
    gain = h_y - h_y_f
    if gain < 0.0:
        gain = 0.0
    return gain / h_f


def igr_values(values, labels, n_classes, n_bins):
    bins, count = equal_frequency_bins(values, n_bins)
    return igr_binned(bins, count, labels, n_classes)


def program_igr(code, X, labels, n_classes, n_bins):
    """Fused evaluate -> bin -> gain ratio, the per-agent fitness call."""
    return igr_values(eval_postfix(code, X), labels, n_classes, n_bins)


def hamming_rows(keys, ref):
    keys = np.asarray(keys)
    return np.count_nonzero(keys != np.asarray(ref)[None, :], axis=1).astype(np.int64)
