"""Independent brute-force references used by the test-suite.

Nothing here imports the code under test; each function re-derives its
quantity from first principles (explicit probability tables, interpolated
quantiles, exhaustive threshold search).
"""
from collections import Counter
from math import log2

import numpy as np


def quantile_bins(values, n_bins):
    """Equal-frequency bins via linearly interpolated quantiles.

    A value belongs to bin k when exactly k cut points lie strictly below it.
    Fewer distinct values than bins -> one bin per distinct value. Ids are
    compacted to the occupied bins.
    """
    v = np.asarray(values, dtype=float)
    distinct = sorted(set(v.tolist()))
    if len(distinct) < n_bins:
        return [distinct.index(x) for x in v.tolist()]
    cuts = np.quantile(v, [k / n_bins for k in range(1, n_bins)])
    raw = [int(np.sum(x > cuts)) for x in v]
    used = sorted(set(raw))
    return [used.index(r) for r in raw]


def joint_table(bins, labels):
    n = len(bins)
    return {k: c / n for k, c in Counter(zip(bins, labels)).items()}


def entropy_from_probs(probs):
    return -sum(p * log2(p) for p in probs if p > 0)


def class_entropy(labels):
    n = len(labels)
    return entropy_from_probs([c / n for c in Counter(labels).values()])


def table_measures(bins, labels):
    """(H(Y), H(f), H(Y|f), IG, IGR) from the explicit joint table."""
    bins, labels = list(bins), list(labels)
    n = len(bins)
    P = joint_table(bins, labels)
    # marginals from integer counts so a single bin has probability exactly 1
    p_bin = {b: k / n for b, k in Counter(bins).items()}
    p_cls = {c: k / n for c, k in Counter(labels).items()}
    h_y = entropy_from_probs(p_cls.values())
    h_f = entropy_from_probs(p_bin.values())
    h_y_f = -sum(p * log2(p / p_bin[b]) for (b, c), p in P.items() if p > 0)
    ig = h_y - h_y_f
    igr = 0.0 if h_f == 0 else ig / h_f
    return h_y, h_f, h_y_f, ig, igr


def closed_form_dimension(L, PD, NO):
    # geometric sums written out rather than looped
    return L + NO * (NO**PD - 1) // (NO - 1) + (NO**PD - 1) // (NO - 1)


def best_stump(x, y, tol=1e-12):
    """Exhaustive single-threshold search maximising gain ratio (binary split).

    Returns ``(best_ratio, cuts)`` with every cut whose ratio is within ``tol``
    of the best, since mirrored splits tie exactly up to rounding.
    """
    scored = []
    for thr in sorted(set(x)):
        left = [c for v, c in zip(x, y) if v <= thr]
        right = [c for v, c in zip(x, y) if v > thr]
        if not left or not right:
            continue
        n = len(y)
        h_cond = len(left) / n * class_entropy(left) + len(right) / n * class_entropy(right)
        gain = class_entropy(list(y)) - h_cond
        split_info = entropy_from_probs([len(left) / n, len(right) / n])
        scored.append((gain / split_info, thr))
    if not scored:
        return None
    best = max(r for r, _ in scored)
    return best, [thr for r, thr in scored if r >= best - tol]
