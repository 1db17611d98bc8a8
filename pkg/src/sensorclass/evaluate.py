"""Evaluation protocols: splits, cross-validation, transfer, and sweeps.

Every protocol here is a pure function of (data, config, master seed).
Randomness for split r of fraction f comes from a seed derived along the
path (seed, protocol tag, fraction index, repeat), so adding a fraction
or rerunning a repeat never disturbs the others.

Accuracy bookkeeping follows the reporting layout: one row per sensor
type plus an overall row, one column per training fraction plus the
cross-validation column. The overall figure is always micro-averaged
(correct / total), never the mean of the per-class rows; a class absent
from a test set is undefined for that run, not zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import seeding
from .errors import DataError, DegenerateFraction, SchemaMismatch
from .features import RICH8, extract, mask_indices, subset_schema
from .forest import (
    ForestConfig,
    LabeledDataset,
    RandomForest,
    predict_matrix,
    train_forest,
    train_tree,
    tree_posterior,
)
from .trace import SensorTrace, SensorType
from .uncertainty import Prediction, make_prediction

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.05, 0.10, 0.20, 0.33, 0.50)
WINDOW_SWEEP_MINUTES = (15, 30, 45, 60, 90, 120)
LOO_COLUMN = "loo"
FULL_COLUMN = "100%"

# seed derivation tags, one per protocol
_TAG_PERCENTAGE = 201
_TAG_LOO = 202
_TAG_INTER = 203
_TAG_SWEEP = 204


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def repeats_for_fraction(fraction: float) -> int:
    """round(1 / fraction) evaluation repeats, e.g. 20 at 5%, 2 at 50%."""
    if not 0.0 < fraction < 1.0:
        raise DegenerateFraction(f"fraction must be in (0, 1), got {fraction}")
    return _round_half_up(1.0 / fraction)


def build_dataset(
    traces: Sequence[SensorTrace], window_len: float, schema: str = RICH8
) -> LabeledDataset:
    """Featurize labeled traces into a dataset ready for training."""
    ids, rows, labels = [], [], []
    for tr in traces:
        if tr.label is None:
            raise DataError(f"trace {tr.trace_id!r} has no label; cannot build a dataset")
        ids.append(tr.trace_id)
        rows.append(extract(tr, window_len, schema).values)
        labels.append(int(tr.label))
    return LabeledDataset(tuple(ids), np.asarray(rows), np.asarray(labels), schema)


def stratified_split(
    dataset: LabeledDataset, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class train/test split. Returns (train indices, test indices).

    Each class contributes round(fraction * n_c) training instances,
    clamped to [1, n_c - 1] so both sides stay populated whenever the
    class has at least two members. A singleton class goes wholly to
    train and is untestable for this split. Raises DegenerateFraction if
    either side ends up globally empty.
    """
    if not 0.0 < fraction < 1.0:
        raise DegenerateFraction(f"fraction must be in (0, 1), got {fraction}")
    train: list[np.ndarray] = []
    test: list[np.ndarray] = []
    for code in range(len(SensorType)):
        idx = np.nonzero(dataset.labels == code)[0]
        n_c = len(idx)
        if n_c == 0:
            continue
        if n_c == 1:
            log.info(
                "stratified_split: class %s has one instance; untestable this split",
                SensorType(code).label,
            )
            train.append(idx)
            continue
        k = min(max(_round_half_up(fraction * n_c), 1), n_c - 1)
        chosen = rng.choice(idx, size=k, replace=False)
        train.append(np.sort(chosen))
        test.append(np.setdiff1d(idx, chosen))
    train_idx = np.sort(np.concatenate(train)) if train else np.array([], dtype=np.int64)
    test_idx = np.sort(np.concatenate(test)) if test else np.array([], dtype=np.int64)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise DegenerateFraction(
            f"fraction {fraction} leaves train={len(train_idx)}, test={len(test_idx)}"
        )
    return train_idx, test_idx


@dataclass(frozen=True)
class PerClassAccuracy:
    """Accuracy by class (None where the class had no test instances)."""

    per_class: dict[SensorType, float | None]
    overall: float
    support: dict[SensorType, int]


def per_class_accuracy(
    truth: np.ndarray | Sequence[int], predicted: np.ndarray | Sequence[int]
) -> PerClassAccuracy:
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if t.shape != p.shape or t.size == 0:
        raise DataError("truth and predictions must be equal-length and non-empty")
    per: dict[SensorType, float | None] = {}
    support: dict[SensorType, int] = {}
    for st in SensorType:
        sel = t == int(st)
        support[st] = int(sel.sum())
        per[st] = float((p[sel] == int(st)).mean()) if sel.any() else None
    return PerClassAccuracy(per, float((t == p).mean()), support)


@dataclass(frozen=True)
class AccuracyCell:
    """Mean accuracy over the repeats where the value was defined."""

    mean: float | None
    repeats: int


@dataclass
class AccuracyTable:
    """rows: sensor-type labels plus 'overall'; columns: protocol columns."""

    columns: list[str]
    rows: dict[str, dict[str, AccuracyCell]]

    @staticmethod
    def row_names() -> list[str]:
        return [t.label for t in SensorType] + ["overall"]


def _aggregate_column(results: Sequence[PerClassAccuracy]) -> dict[str, AccuracyCell]:
    cells: dict[str, AccuracyCell] = {}
    for st in SensorType:
        vals = [r.per_class[st] for r in results if r.per_class[st] is not None]
        cells[st.label] = AccuracyCell(float(np.mean(vals)) if vals else None, len(vals))
    overall = [r.overall for r in results]
    cells["overall"] = AccuracyCell(float(np.mean(overall)), len(overall))
    return cells


def _new_table() -> AccuracyTable:
    return AccuracyTable(columns=[], rows={name: {} for name in AccuracyTable.row_names()})


def _add_column(table: AccuracyTable, name: str, cells: dict[str, AccuracyCell]) -> None:
    table.columns.append(name)
    for row_name in AccuracyTable.row_names():
        table.rows[row_name][name] = cells[row_name]


def fraction_column_name(fraction: float) -> str:
    return f"{fraction * 100:g}%"


@dataclass(frozen=True)
class ProtocolResult:
    """Per-instance outcome of a protocol run, for uncertainty analysis."""

    predictions: list[Prediction]
    truth: dict[str, SensorType]
    accuracy: PerClassAccuracy

    @property
    def correctness(self) -> dict[str, bool]:
        by_id = {p.trace_id: p.predicted for p in self.predictions}
        return {tid: by_id[tid] == lab for tid, lab in self.truth.items()}


def _evaluate_fold(
    train_ds: LabeledDataset,
    test_ds: LabeledDataset,
    config: ForestConfig,
    entropy_base: str,
) -> ProtocolResult:
    forest = train_forest(train_ds, config)
    probs = predict_matrix(forest, test_ds.features, test_ds.schema)
    predicted = probs.argmax(axis=1)
    preds = [
        make_prediction(tid, SensorType(int(code)), row, entropy_base)
        for tid, code, row in zip(test_ds.ids, predicted, probs)
    ]
    truth = {tid: SensorType(int(lab)) for tid, lab in zip(test_ds.ids, test_ds.labels)}
    acc = per_class_accuracy(test_ds.labels, predicted)
    return ProtocolResult(preds, truth, acc)


def _check_scheme(dataset: LabeledDataset, feature_scheme: str | None) -> None:
    if feature_scheme is not None and feature_scheme != dataset.schema:
        raise SchemaMismatch(
            f"protocol asked for scheme {feature_scheme!r} but dataset is {dataset.schema!r}"
        )


def percentage_protocol(
    dataset: LabeledDataset,
    fractions: Sequence[float],
    config: ForestConfig,
    feature_scheme: str | None = None,
    entropy_base: str = "nats",
) -> AccuracyTable:
    """Stratified train fractions, each repeated round(1/fraction) times.

    Small fractions are noisier, so they get proportionally more repeats;
    every cell is the mean over the repeats where it was defined.
    """
    _check_scheme(dataset, feature_scheme)
    table = _new_table()
    for fi, fraction in enumerate(fractions):
        r = repeats_for_fraction(fraction)
        results = []
        for rep in range(r):
            rng = seeding.generator(config.seed, _TAG_PERCENTAGE, fi, rep, 0)
            train_idx, test_idx = stratified_split(dataset, fraction, rng)
            fold_config = ForestConfig(
                n_trees=config.n_trees,
                m_try=config.m_try,
                seed=seeding.derive_seed(config.seed, _TAG_PERCENTAGE, fi, rep, 1),
                averaging_mode=config.averaging_mode,
            )
            fold = _evaluate_fold(
                dataset.subset(train_idx), dataset.subset(test_idx), fold_config, entropy_base
            )
            results.append(fold.accuracy)
        _add_column(table, fraction_column_name(fraction), _aggregate_column(results))
    return table


def loo_cv(
    dataset: LabeledDataset,
    config: ForestConfig,
    feature_scheme: str | None = None,
    entropy_base: str = "nats",
) -> ProtocolResult:
    """Leave-one-out cross-validation; one forest per held-out instance."""
    _check_scheme(dataset, feature_scheme)
    n = len(dataset)
    if n < 2:
        raise DataError("leave-one-out needs at least two instances")
    all_preds: list[Prediction] = []
    truth: dict[str, SensorType] = {}
    predicted_codes = np.empty(n, dtype=np.int64)
    for i in range(n):
        rest = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        round_config = ForestConfig(
            n_trees=config.n_trees,
            m_try=config.m_try,
            seed=seeding.derive_seed(config.seed, _TAG_LOO, i),
            averaging_mode=config.averaging_mode,
        )
        fold = _evaluate_fold(
            dataset.subset(rest), dataset.subset([i]), round_config, entropy_base
        )
        all_preds.extend(fold.predictions)
        truth.update(fold.truth)
        predicted_codes[i] = int(fold.predictions[0].predicted)
    acc = per_class_accuracy(dataset.labels, predicted_codes)
    return ProtocolResult(all_preds, truth, acc)


def loo_column(result: ProtocolResult) -> dict[str, AccuracyCell]:
    cells = {
        st.label: AccuracyCell(result.accuracy.per_class[st], 1)
        if result.accuracy.per_class[st] is not None
        else AccuracyCell(None, 0)
        for st in SensorType
    }
    cells["overall"] = AccuracyCell(result.accuracy.overall, 1)
    return cells


def add_column(table: AccuracyTable, name: str, cells: dict[str, AccuracyCell]) -> None:
    """Append a prebuilt column (such as the LOO column) to a table."""
    _add_column(table, name, cells)


def inter_corpus(
    train_dataset: LabeledDataset,
    test_dataset: LabeledDataset,
    fractions: Sequence[float],
    config: ForestConfig,
    feature_scheme: str | None = None,
    entropy_base: str = "nats",
) -> tuple[AccuracyTable, ProtocolResult | None]:
    """Train on one corpus, evaluate on another.

    Fractions below 1 subsample the training corpus (stratified; the
    held-back complement is simply unused) with round(1/f) repeats;
    fraction 1.0 trains on the whole corpus exactly once. The second
    return value is the full-training-set run, when 1.0 was requested.
    """
    _check_scheme(train_dataset, feature_scheme)
    if train_dataset.schema != test_dataset.schema:
        raise SchemaMismatch(
            f"corpora disagree on schema: {train_dataset.schema!r} vs {test_dataset.schema!r}"
        )
    table = _new_table()
    full_result: ProtocolResult | None = None
    for fi, fraction in enumerate(fractions):
        if fraction == 1.0:
            fold_config = ForestConfig(
                n_trees=config.n_trees,
                m_try=config.m_try,
                seed=seeding.derive_seed(config.seed, _TAG_INTER, fi, 0, 1),
                averaging_mode=config.averaging_mode,
            )
            fold = _evaluate_fold(train_dataset, test_dataset, fold_config, entropy_base)
            full_result = fold
            _add_column(table, FULL_COLUMN, _aggregate_column([fold.accuracy]))
            continue
        r = repeats_for_fraction(fraction)
        results = []
        for rep in range(r):
            rng = seeding.generator(config.seed, _TAG_INTER, fi, rep, 0)
            train_idx, _ = stratified_split(train_dataset, fraction, rng)
            fold_config = ForestConfig(
                n_trees=config.n_trees,
                m_try=config.m_try,
                seed=seeding.derive_seed(config.seed, _TAG_INTER, fi, rep, 1),
                averaging_mode=config.averaging_mode,
            )
            fold = _evaluate_fold(
                train_dataset.subset(train_idx), test_dataset, fold_config, entropy_base
            )
            results.append(fold.accuracy)
        _add_column(table, fraction_column_name(fraction), _aggregate_column(results))
    return table, full_result


def window_sweep(
    traces: Sequence[SensorTrace],
    window_minutes: Sequence[int] = WINDOW_SWEEP_MINUTES,
    protocol: str = "intra_loo",
    config: ForestConfig = ForestConfig(),
    traces_b: Sequence[SensorTrace] | None = None,
    scheme: str = RICH8,
) -> list[tuple[int, float]]:
    """Overall accuracy as a function of segmentation window length.

    protocol "intra_loo" runs leave-one-out on the given traces.
    protocol "inter_10fold" trains on the full first corpus and averages
    accuracy over ten folds of the second corpus. Traces too short for a
    window length are dropped with a notice; a window length that drops
    every trace yields no curve point.
    """
    if protocol not in ("intra_loo", "inter_10fold"):
        raise DataError(f"unknown sweep protocol {protocol!r}")
    if protocol == "inter_10fold" and traces_b is None:
        raise DataError("inter_10fold sweep needs a second corpus")
    points: list[tuple[int, float]] = []
    for wi, minutes in enumerate(window_minutes):
        window_len = float(minutes) * 60.0
        usable = []
        for tr in traces:
            if tr.span >= window_len:
                usable.append(tr)
            else:
                log.warning(
                    "window sweep: trace %s span %.0fs < window %.0fs, skipped",
                    tr.trace_id, tr.span, window_len,
                )
        if not usable:
            log.warning("window sweep: no usable traces at %d minutes, point skipped", minutes)
            continue
        dataset = build_dataset(usable, window_len, scheme)
        if protocol == "intra_loo":
            result = loo_cv(dataset, config)
            points.append((minutes, result.accuracy.overall))
            continue
        usable_b = [tr for tr in traces_b if tr.span >= window_len]
        if not usable_b:
            log.warning("window sweep: second corpus empty at %d minutes, point skipped", minutes)
            continue
        dataset_b = build_dataset(usable_b, window_len, scheme)
        fold_config = ForestConfig(
            n_trees=config.n_trees,
            m_try=config.m_try,
            seed=seeding.derive_seed(config.seed, _TAG_SWEEP, wi, 1),
            averaging_mode=config.averaging_mode,
        )
        forest = train_forest(dataset, fold_config)
        rng = seeding.generator(config.seed, _TAG_SWEEP, wi, 0)
        order = rng.permutation(len(dataset_b))
        folds = np.array_split(order, 10)
        accs = []
        for fold_idx in folds:
            if len(fold_idx) == 0:
                continue
            sub = dataset_b.subset(fold_idx)
            probs = predict_matrix(forest, sub.features, sub.schema)
            accs.append(float((probs.argmax(axis=1) == sub.labels).mean()))
        points.append((minutes, float(np.mean(accs))))
    return points


def _single_tree_loo(dataset: LabeledDataset) -> float:
    """LOO accuracy of one deterministic, fully-grown tree (no resampling)."""
    n = len(dataset)
    config = ForestConfig(n_trees=1, m_try=dataset.feature_count, seed=0)
    correct = 0
    for i in range(n):
        rest = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        tree = train_tree(dataset.subset(rest), config, 0, identity_bootstrap=True)
        probs = tree_posterior(tree, dataset.features[i])
        if int(np.argmax(probs)) == int(dataset.labels[i]):
            correct += 1
    return correct / n


def feature_subset_search(dataset: LabeledDataset) -> list[tuple[int, float]]:
    """LOO accuracy of every non-empty subset of the eight features.

    Each mask is scored with a single deterministic tree (all subset
    features available at every node, no bootstrap), so the ranking
    reflects the features rather than sampling noise. Sorted best-first;
    ties prefer fewer features, then the smaller mask value.
    """
    if dataset.schema != RICH8:
        raise SchemaMismatch(f"subset search expects a rich8 dataset, got {dataset.schema!r}")
    results = []
    for mask in range(1, 256):
        idx = mask_indices(mask)
        sub = LabeledDataset(
            dataset.ids, dataset.features[:, idx], dataset.labels, subset_schema(mask)
        )
        results.append((mask, _single_tree_loo(sub)))
    results.sort(key=lambda item: (-item[1], len(mask_indices(item[0])), item[0]))
    return results


# --- table rendering ----------------------------------------------------------


def _cell_text(cell: AccuracyCell, baseline: AccuracyCell | None) -> str:
    if cell.mean is None:
        return "-"
    text = f"{cell.mean * 100:.1f}"
    if baseline is not None and baseline.mean is not None:
        text += f" ({baseline.mean * 100:.1f})"
    return text


def render_table_text(
    table: AccuracyTable, baseline: AccuracyTable | None = None, title: str = ""
) -> str:
    """Aligned text table; accuracies in percent, one decimal.

    With a second table the cell reads "main (baseline)", matching the
    usual side-by-side presentation of the two feature schemes.
    """
    names = [n for n in AccuracyTable.row_names() if n in table.rows]
    body: list[list[str]] = []
    for name in names:
        row = [name]
        for col in table.columns:
            b = baseline.rows[name].get(col) if baseline is not None else None
            row.append(_cell_text(table.rows[name][col], b))
        body.append(row)
    header = ["type"] + table.columns
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def table_csv_rows(table: AccuracyTable) -> tuple[list[str], list[list]]:
    """(header, rows) for reporting.write_csv; cells are fractions, '' if undefined."""
    header = ["type"] + list(table.columns)
    rows = []
    for name in AccuracyTable.row_names():
        rows.append([name] + [table.rows[name][c].mean for c in table.columns])
    return header, rows


def table_repeat_meta(table: AccuracyTable) -> dict[str, int]:
    """Repeat counts per column (overall row), for artifact metadata."""
    return {f"repeats.{col}": table.rows["overall"][col].repeats for col in table.columns}
