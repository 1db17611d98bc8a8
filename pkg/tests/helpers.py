"""Shared builders and independent oracles used across the test modules.

The tree-induction oracle here is deliberately written from the definition
(brute force over every feature and every midpoint between consecutive
distinct values) rather than reusing any library code, so the tests check
the implementation against an independent derivation.
"""

from __future__ import annotations

import math

import numpy as np

from sensorclass.forest import LabeledDataset
from sensorclass.trace import CLASS_COUNT, SensorType, validate_trace

# Hand-computed rich8 vector for the two-window fixture with window values
# {1,2,3} and {10,10,16}: MED = {2, 10}, VAR = {2/3, 8}.
F_ORACLE = (2.0, 10.0, 6.0, 16.0, 2.0 / 3.0, 8.0, 13.0 / 3.0, 121.0 / 9.0)


def make_trace(trace_id, timestamps, values, label=None):
    return validate_trace(trace_id, zip(timestamps, values), label)


def two_window_trace(label=None):
    """Six samples at 1 Hz; window_len 3.0 gives the F_ORACLE windows.

    A seventh sample sits exactly at the tiled end and must be dropped.
    """
    ts = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    vs = [1.0, 2.0, 3.0, 10.0, 10.0, 16.0, 99.0]
    return make_trace("two-window", ts, vs, label)


def constant_trace(value=5.0, n=12, interval=1.0, label=None):
    ts = [i * interval for i in range(n)]
    return make_trace("constant", ts, [value] * n, label)


def int_dataset(seed, n, d=2, classes=3, max_val=5, schema="baseline2"):
    """Small integer-valued dataset; duplicates and ties are likely."""
    rng = np.random.default_rng(seed)
    feats = rng.integers(0, max_val + 1, size=(n, d)).astype(float)
    labels = rng.integers(0, classes, size=n)
    if len(set(labels.tolist())) == 1 and n > 1:
        labels[0] = (labels[0] + 1) % classes
    ids = tuple(f"r{i}" for i in range(n))
    return LabeledDataset(ids, feats, labels, schema)


# --- independent tree-induction oracle ---------------------------------------


def oracle_entropy(counts) -> float:
    total = float(sum(counts))
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log(p)
    return h


def oracle_best_split(x: np.ndarray, y: np.ndarray):
    """Exhaustive search over all (feature, midpoint) pairs.

    Midpoints lie between consecutive distinct sorted values, gain must be
    strictly positive, and ties resolve to the lowest feature index then the
    smallest threshold. Returns (feature, threshold) or None.
    """
    n, d = x.shape
    parent = oracle_entropy(np.bincount(y, minlength=CLASS_COUNT))
    best = None
    best_gain = 0.0
    for j in range(d):
        vals = np.unique(x[:, j])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2.0
            mask = x[:, j] <= thr
            n_l = float(mask.sum())
            n_r = n - n_l
            h_l = oracle_entropy(np.bincount(y[mask], minlength=CLASS_COUNT))
            h_r = oracle_entropy(np.bincount(y[~mask], minlength=CLASS_COUNT))
            gain = parent - (n_l * h_l + n_r * h_r) / n
            if gain > best_gain:
                best_gain = gain
                best = (j, thr)
    return best


def assert_tree_matches_oracle(node, x: np.ndarray, y: np.ndarray) -> None:
    """Walk a trained tree alongside the oracle's recursive choice of splits."""
    counts = np.bincount(y, minlength=CLASS_COUNT)
    expected = None if counts.max() == len(y) else oracle_best_split(x, y)
    if expected is None:
        assert node.split is None, f"expected a leaf, found split {node.split}"
        assert (node.posterior == counts / len(y)).all()
        return
    feature, threshold = expected
    assert node.split is not None, f"expected split {expected}, found a leaf"
    assert node.split.feature == feature
    assert node.split.threshold == threshold
    mask = x[:, feature] <= threshold
    assert_tree_matches_oracle(node.left, x[mask], y[mask])
    assert_tree_matches_oracle(node.right, x[~mask], y[~mask])


def oracle_fully_separates(x: np.ndarray, y: np.ndarray) -> bool:
    """Whether greedy positive-gain induction reaches all-pure leaves.

    A distinct-row dataset can still stall: on a 2x2 XOR layout every single
    split has zero gain, so induction stops at an impure root.
    """
    counts = np.bincount(y, minlength=CLASS_COUNT)
    if counts.max() == len(y):
        return True
    split = oracle_best_split(x, y)
    if split is None:
        return False
    feature, threshold = split
    mask = x[:, feature] <= threshold
    return oracle_fully_separates(x[mask], y[mask]) and oracle_fully_separates(
        x[~mask], y[~mask]
    )


def resubstitution_accuracy(tree, x: np.ndarray, y: np.ndarray) -> float:
    hits = 0
    for row, truth in zip(x, y):
        node = tree.root
        while node.split is not None:
            if row[node.split.feature] <= node.split.threshold:
                node = node.left
            else:
                node = node.right
        hits += int(np.argmax(node.posterior)) == truth
    return hits / len(y)


def label_of(code: int) -> str:
    return SensorType(code).label
