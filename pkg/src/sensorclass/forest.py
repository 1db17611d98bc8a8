"""Random forest classifier, written out in full.

Induction follows the classic recipe. Each tree draws a bootstrap sample
of the same size as the dataset (with replacement); at every node a fresh
subset of m_try features is drawn without replacement and the split with
the highest information gain (Shannon entropy, natural log) over midpoint
thresholds is taken; growth continues until nodes are pure or no split
has positive gain. No pruning. Leaves store the class distribution of the
training instances that reached them, so a tree predicts a posterior, not
a vote.

Forest posteriors combine tree posteriors in one of two modes:

* "standard": plain mean over all trees.
* "paper": per class, the mean is taken only over trees that assign that
  class a nonzero probability, and the resulting vector is L1-normalized.
  This weights rare-but-confident leaf evidence more heavily. Example:
  trees {0.5, 0.5, 0, ...} and {1, 0, 0, ...} give raw entries
  0.75 = (0.5+1)/2 and 0.5 = 0.5/1, normalized to {0.6, 0.4, 0, ...}.

Determinism: every tree's RNG derives from (config.seed, tree index), so
the forest is a pure function of (dataset, config) no matter how many
threads build it or in what order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeding
from .errors import DataError, InvalidConfig, SchemaMismatch
from .features import FeatureVector, schema_length
from .trace import CLASS_COUNT, SensorType

MODEL_FORMAT = "sensorclass-forest-v1"

AVERAGING_MODES = ("paper", "standard")

# derivation tag separating tree RNG streams from other consumers of a seed
_TREE_TAG = 101


@dataclass(frozen=True)
class ForestConfig:
    """Training knobs.

    m_try of None means "decide at training time": floor(sqrt(D)) with a
    floor of 1, where D is the dataset's feature count.
    """

    n_trees: int = 50
    m_try: int | None = None
    seed: int = 0
    averaging_mode: str = "paper"

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfig(f"n_trees must be >= 1, got {self.n_trees}")
        if self.m_try is not None and self.m_try < 1:
            raise InvalidConfig(f"m_try must be >= 1, got {self.m_try}")
        if self.averaging_mode not in AVERAGING_MODES:
            raise InvalidConfig(
                f"averaging_mode must be one of {AVERAGING_MODES}, got {self.averaging_mode!r}"
            )

    def resolve_m_try(self, feature_count: int) -> int:
        m = self.m_try if self.m_try is not None else max(1, int(np.sqrt(feature_count)))
        if m > feature_count:
            raise InvalidConfig(f"m_try {m} exceeds feature count {feature_count}")
        return m


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with labels, ids, and the schema the rows follow."""

    ids: tuple[str, ...]
    features: np.ndarray  # (n, D) float
    labels: np.ndarray  # (n,) int codes from SensorType
    schema: str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] != len(self.ids) or labs.shape != (len(self.ids),):
            raise DataError("dataset ids, features, and labels are misaligned")
        if feats.shape[0] == 0:
            raise DataError("dataset is empty")
        if feats.shape[1] != schema_length(self.schema):
            raise DataError(
                f"schema {self.schema!r} expects {schema_length(self.schema)} features, "
                f"matrix has {feats.shape[1]}"
            )
        if not np.isfinite(feats).all():
            raise DataError("dataset features contain non-finite entries")
        if labs.min() < 0 or labs.max() >= CLASS_COUNT:
            raise DataError(f"labels must be codes in 0..{CLASS_COUNT - 1}")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray | Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            tuple(self.ids[i] for i in idx),
            self.features[idx],
            self.labels[idx],
            self.schema,
        )


@dataclass(frozen=True)
class Split:
    """A binary test: go left when value[feature] <= threshold."""

    feature: int
    threshold: float


@dataclass(frozen=True, eq=False)
class TreeNode:
    """Internal node (split set, two children) or leaf (posterior set)."""

    split: Split | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    posterior: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    root: TreeNode


@dataclass(frozen=True, eq=False)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    config: ForestConfig  # m_try resolved to a concrete value
    class_labels: tuple[SensorType, ...]
    feature_schema: str


def entropy_impurity(counts: np.ndarray | Sequence[float]) -> float:
    """Shannon entropy of a count vector, in nats. Zero counts contribute 0."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise DataError("entropy of an empty count vector is undefined")
    return float(_entropy_rows(c[None, :], np.array([total]))[0])


def _entropy_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Row-wise entropy of count matrices; shared by parent and child paths
    so that identical distributions produce bit-identical values."""
    p = counts / totals[:, None]
    plogp = np.where(counts > 0, p * np.log(np.where(counts > 0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def best_split(
    features: np.ndarray, labels: np.ndarray, candidates: Sequence[int]
) -> Split | None:
    """Highest-information-gain split over the candidate features.

    Thresholds are midpoints of consecutive distinct sorted values, so a
    split never produces an empty side. Returns None when no candidate has
    two distinct values or when the best achievable gain is not positive.
    Ties break toward the lowest feature index, then the smallest threshold.
    """
    n = len(labels)
    counts = np.bincount(labels, minlength=CLASS_COUNT).astype(float)
    parent = _entropy_rows(counts[None, :], np.array([float(n)]))[0]
    onehot = np.zeros((n, CLASS_COUNT))
    best: Split | None = None
    best_gain = 0.0
    for f in sorted(set(int(c) for c in candidates)):
        col = features[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        cuts = np.nonzero(sv[:-1] < sv[1:])[0]
        if cuts.size == 0:
            continue
        onehot[:] = 0.0
        onehot[np.arange(n), labels[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left = cum[cuts]
        right = counts[None, :] - left
        n_left = (cuts + 1).astype(float)
        n_right = n - n_left
        child = n_left * _entropy_rows(left, n_left) + n_right * _entropy_rows(right, n_right)
        gains = parent - child / n
        i = int(np.argmax(gains))  # first max: smallest threshold wins ties
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            cut = cuts[i]
            best = Split(f, float((sv[cut] + sv[cut + 1]) / 2.0))
    return best


def train_tree(
    dataset: LabeledDataset,
    config: ForestConfig,
    tree_index: int,
    *,
    identity_bootstrap: bool = False,
) -> DecisionTree:
    """Grow one fully-developed tree.

    The tree's RNG comes from (config.seed, tree_index) alone; draws happen
    in a fixed order (bootstrap first, then per-node feature subsets in
    preorder), so retraining reproduces the tree exactly. identity_bootstrap
    skips resampling and trains on the dataset as-is; evaluation code uses
    it where a deterministic single tree is wanted.
    """
    rng = seeding.generator(config.seed, _TREE_TAG, tree_index)
    n = len(dataset)
    d = dataset.feature_count
    m_try = config.resolve_m_try(d)
    if identity_bootstrap:
        chosen = np.arange(n)
    else:
        chosen = rng.integers(0, n, size=n)
    x = dataset.features[chosen]
    y = dataset.labels[chosen]
    all_features = np.arange(d)

    def grow(sel: np.ndarray) -> TreeNode:
        counts = np.bincount(y[sel], minlength=CLASS_COUNT).astype(float)
        node_n = len(sel)
        if counts.max() == node_n:  # pure
            return TreeNode(posterior=counts / node_n)
        if m_try == d:
            cand = all_features
        else:
            cand = np.sort(rng.choice(d, size=m_try, replace=False))
        split = best_split(x[sel], y[sel], cand)
        if split is None:
            return TreeNode(posterior=counts / node_n)
        go_left = x[sel, split.feature] <= split.threshold
        return TreeNode(split=split, left=grow(sel[go_left]), right=grow(sel[~go_left]))

    return DecisionTree(grow(np.arange(n)))


def train_forest(
    dataset: LabeledDataset, config: ForestConfig, threads: int = 1
) -> RandomForest:
    """Train config.n_trees trees. The result is independent of threads."""
    resolved = replace(config, m_try=config.resolve_m_try(dataset.feature_count))
    indices = range(resolved.n_trees)
    if threads <= 1:
        trees = tuple(train_tree(dataset, resolved, i) for i in indices)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = tuple(pool.map(lambda i: train_tree(dataset, resolved, i), indices))
    return RandomForest(trees, resolved, tuple(SensorType), dataset.schema)


def tree_posterior(tree: DecisionTree, values: np.ndarray) -> np.ndarray:
    """Route a feature vector to its leaf and return the class distribution."""
    node = tree.root
    while node.split is not None:
        node = node.left if values[node.split.feature] <= node.split.threshold else node.right
    return node.posterior


def _combine(tree_probs: np.ndarray, mode: str) -> np.ndarray:
    """Average a (n_trees, C) stack of posteriors into one distribution."""
    if mode == "standard":
        return tree_probs.mean(axis=0)
    if mode == "paper":
        nonzero = np.count_nonzero(tree_probs, axis=0)
        raw = np.where(nonzero > 0, tree_probs.sum(axis=0) / np.maximum(nonzero, 1), 0.0)
        return raw / raw.sum()
    raise InvalidConfig(f"unknown averaging mode {mode!r}")


def _check_schema(forest: RandomForest, schema: str) -> None:
    if schema != forest.feature_schema:
        raise SchemaMismatch(
            f"model expects schema {forest.feature_schema!r}, got {schema!r}"
        )


def forest_posterior(
    forest: RandomForest, fv: FeatureVector, mode: str | None = None
) -> np.ndarray:
    """Combined class distribution for one feature vector."""
    _check_schema(forest, fv.schema)
    mode = mode or forest.config.averaging_mode
    stack = np.stack([tree_posterior(t, fv.values) for t in forest.trees])
    return _combine(stack, mode)


def classify(
    forest: RandomForest, fv: FeatureVector, mode: str | None = None
) -> tuple[SensorType, np.ndarray]:
    """(predicted type, posterior). Probability ties go to the lowest code."""
    probs = forest_posterior(forest, fv, mode)
    return SensorType(int(np.argmax(probs))), probs


def predict_matrix(
    forest: RandomForest, features: np.ndarray, schema: str, mode: str | None = None
) -> np.ndarray:
    """Posteriors for a whole (n, D) matrix at once; rows sum to 1."""
    _check_schema(forest, schema)
    mode = mode or forest.config.averaging_mode
    stack = np.empty((len(forest.trees), len(features), CLASS_COUNT))
    for ti, tree in enumerate(forest.trees):
        for ri, row in enumerate(features):
            stack[ti, ri] = tree_posterior(tree, row)
    if mode == "standard":
        return stack.mean(axis=0)
    out = np.empty((len(features), CLASS_COUNT))
    for ri in range(len(features)):
        out[ri] = _combine(stack[:, ri, :], mode)
    return out


# --- model file -------------------------------------------------------------
#
# JSON, self-describing, versioned by the "format" key. Trees are stored as
# preorder node lists: ["s", feature, threshold] for a split node whose two
# subtrees follow immediately (left first), ["l", [p0..p5]] for a leaf.
# Floats round-trip exactly through repr, so save -> load -> save is
# byte-identical.


def _tree_to_nodes(tree: DecisionTree) -> list:
    nodes: list = []

    def walk(node: TreeNode) -> None:
        if node.split is not None:
            nodes.append(["s", node.split.feature, node.split.threshold])
            walk(node.left)
            walk(node.right)
        else:
            nodes.append(["l", [float(p) for p in node.posterior]])

    walk(tree.root)
    return nodes


def _nodes_to_tree(nodes: list) -> DecisionTree:
    pos = 0

    def build() -> TreeNode:
        nonlocal pos
        entry = nodes[pos]
        pos += 1
        if entry[0] == "s":
            left = build()
            right = build()
            return TreeNode(split=Split(int(entry[1]), float(entry[2])), left=left, right=right)
        if entry[0] == "l":
            post = np.asarray(entry[1], dtype=float)
            if len(post) != CLASS_COUNT:
                raise DataError(f"leaf posterior must have {CLASS_COUNT} entries")
            return TreeNode(posterior=post)
        raise DataError(f"unknown node tag {entry[0]!r} in model file")

    root = build()
    if pos != len(nodes):
        raise DataError("trailing nodes in model tree list")
    return DecisionTree(root)


def model_document(forest: RandomForest, run_meta: dict | None = None) -> dict:
    """The JSON document a model file holds, built in a fixed key order."""
    doc = {
        "format": MODEL_FORMAT,
        "config": {
            "n_trees": forest.config.n_trees,
            "m_try": forest.config.m_try,
            "seed": forest.config.seed,
            "averaging_mode": forest.config.averaging_mode,
        },
        "class_labels": [t.label for t in forest.class_labels],
        "feature_schema": forest.feature_schema,
    }
    if run_meta:
        doc["run"] = dict(sorted(run_meta.items()))
    doc["trees"] = [_tree_to_nodes(t) for t in forest.trees]
    return doc


def save_model(forest: RandomForest, path: str | Path, run_meta: dict | None = None) -> None:
    doc = model_document(forest, run_meta)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path: str | Path) -> tuple[RandomForest, dict]:
    """Read a model file back; returns (forest, run metadata dict)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"model file {path}: not valid JSON ({exc})") from None
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"model file {path}: unsupported format {doc.get('format')!r}")
    cfg = doc["config"]
    config = ForestConfig(
        n_trees=int(cfg["n_trees"]),
        m_try=int(cfg["m_try"]),
        seed=int(cfg["seed"]),
        averaging_mode=str(cfg["averaging_mode"]),
    )
    labels = tuple(SensorType.from_label(s) for s in doc["class_labels"])
    trees = tuple(_nodes_to_tree(nodes) for nodes in doc["trees"])
    if len(trees) != config.n_trees:
        raise DataError(f"model file {path}: tree count does not match config")
    forest = RandomForest(trees, config, labels, str(doc["feature_schema"]))
    return forest, dict(doc.get("run", {}))
