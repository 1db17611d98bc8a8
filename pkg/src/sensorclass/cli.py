"""Command-line interface.

Subcommands compose into a file-based pipeline that mirrors the library:

    synth -> features -> train -> classify -> flag -> relabel
                              \\-> eval

Every artifact embeds the resolved run configuration and tool version as
`# key=value` header lines, and identical inputs plus the same --seed
produce byte-identical outputs regardless of --threads.

Exit codes: 0 success, 2 configuration error (including bad flags),
3 data error, 4 all requested metrics came back undefined.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, evaluate, reporting, seeding
from .errors import (
    ConfigError,
    DataError,
    NonInteractiveWithoutAnswers,
    NoWindows,
    SensorClassError,
)
from .features import BASELINE2, RICH8, extract, feature_names, mask_indices
from .forest import ForestConfig, LabeledDataset, load_model, predict_matrix, save_model, train_forest
from .synth import PRESET_NAMES, generate_corpus, load_corpus_spec, preset_spec
from .trace import SensorType, write_trace_csv
from .uncertainty import (
    attach_metrics,
    entropy_cdf,
    flag_above_threshold,
    make_prediction,
    max_entropy,
    rank_by_uncertainty,
    roc_sweep,
)

log = logging.getLogger("sensorclass")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_UNDEFINED = 4

DEFAULT_SEED = 0
DEFAULT_WINDOW_MINS = 45.0
DEFAULT_TREES = 50
DEFAULT_THRESHOLD = 0.425


def _shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help=f"master seed for every random draw (default {DEFAULT_SEED})")
    parser.add_argument("--window-mins", type=float, default=DEFAULT_WINDOW_MINS,
                        help="segmentation window length in minutes (default 45)")
    parser.add_argument("--trees", type=int, default=DEFAULT_TREES,
                        help="trees per forest (default 50)")
    parser.add_argument("--mtry", type=int, default=None,
                        help="features tried per node (default floor(sqrt(D)))")
    parser.add_argument("--averaging", choices=["paper", "standard"], default=None,
                        help="posterior averaging mode (default paper)")
    parser.add_argument("--entropy-base", choices=["nats", "bits", "normalized"],
                        default="nats", help="entropy unit (default nats)")
    parser.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                        help="entropy flag threshold, strict > (default 0.425)")
    parser.add_argument("--scheme", choices=[RICH8, BASELINE2, "both"], default=RICH8,
                        help="feature scheme (default rich8)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for tree building (results identical)")


def _seed(args) -> int:
    return DEFAULT_SEED if args.seed is None else args.seed


def _averaging(args) -> str:
    return args.averaging or "paper"


def _forest_config(args, seed: int | None = None) -> ForestConfig:
    return ForestConfig(
        n_trees=args.trees,
        m_try=args.mtry,
        seed=_seed(args) if seed is None else seed,
        averaging_mode=_averaging(args),
    )


def _run_meta(args, **extra) -> dict:
    meta = {
        "tool": "sensorclass",
        "tool_version": __version__,
        "seed": _seed(args),
        "window_mins": args.window_mins,
        "trees": args.trees,
        "mtry": "auto" if args.mtry is None else args.mtry,
        "averaging": _averaging(args),
        "entropy_base": args.entropy_base,
        "threshold": args.threshold,
        "scheme": args.scheme,
    }
    meta.update(extra)
    return meta


def _schemes(args) -> list[str]:
    return [RICH8, BASELINE2] if args.scheme == "both" else [args.scheme]


# --- synth -------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.spec:
        spec = load_corpus_spec(args.spec)
        if args.seed is not None:
            import dataclasses
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = preset_spec(args.preset, seed=_seed(args),
                           traces_per_type=args.traces_per_type)
    out = Path(args.out)
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    traces = generate_corpus(spec)
    entries = []
    for tr in traces:
        rel = f"traces/{tr.trace_id}.csv"
        write_trace_csv(tr, out / rel)
        entries.append((tr.trace_id, rel, tr.label))
    meta = _run_meta(
        args,
        corpus=spec.name,
        traces_per_type=spec.traces_per_type,
        duration_s=spec.duration_s,
        interval_s=spec.interval_s,
    )
    meta["seed"] = spec.seed
    reporting.write_manifest(out / "manifest.csv", entries, meta)
    print(f"wrote {len(traces)} traces and manifest.csv under {out}")
    return EXIT_OK


# --- features ----------------------------------------------------------------


def cmd_features(args) -> int:
    traces = reporting.load_manifest_traces(args.manifest)
    if args.scheme == "both":
        raise ConfigError("features writes a single matrix; pick --scheme rich8 or baseline2")
    window_len = args.window_mins * 60.0
    ids, labels, rows = [], [], []
    for tr in traces:
        try:
            fv = extract(tr, window_len, args.scheme)
        except NoWindows:
            log.warning("trace %s is shorter than one window, row skipped", tr.trace_id)
            continue
        ids.append(tr.trace_id)
        labels.append(tr.label)
        rows.append(fv.values)
    if not rows:
        raise DataError("every trace was shorter than one window")
    reporting.write_feature_matrix(
        args.out, ids, labels, np.asarray(rows), args.scheme, _run_meta(args)
    )
    print(f"wrote {len(ids)} x {len(rows[0])} feature matrix to {args.out}")
    return EXIT_OK


def _dataset_from_matrix(path) -> tuple[LabeledDataset, dict]:
    ids, labels, feats, schema, meta = reporting.read_feature_matrix(path)
    keep = [i for i, lab in enumerate(labels) if lab is not None]
    if not keep:
        raise DataError(f"{path}: no labeled rows to train on")
    if len(keep) < len(ids):
        log.info("ignoring %d unlabeled rows", len(ids) - len(keep))
    ds = LabeledDataset(
        tuple(ids[i] for i in keep),
        feats[keep],
        np.array([int(labels[i]) for i in keep]),
        schema,
    )
    return ds, meta


# --- train / classify ----------------------------------------------------------


def cmd_train(args) -> int:
    dataset, _ = _dataset_from_matrix(args.features)
    config = _forest_config(args)
    forest = train_forest(dataset, config, threads=args.threads)
    run = _run_meta(args, scheme=dataset.schema)
    save_model(forest, args.out, run)
    print(f"trained {config.n_trees} trees on {len(dataset)} instances -> {args.out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    forest, run = load_model(args.model)
    ids, _labels, feats, schema, _meta = reporting.read_feature_matrix(args.features)
    mode = args.averaging  # None means: use the model's mode
    probs = predict_matrix(forest, feats, schema, mode)
    preds = [
        make_prediction(tid, SensorType(int(row.argmax())), row, args.entropy_base)
        for tid, row in zip(ids, probs)
    ]
    meta = _run_meta(args, averaging=mode or forest.config.averaging_mode, scheme=schema)
    reporting.write_predictions(args.out, preds, meta)
    print(f"classified {len(preds)} instances -> {args.out}")
    return EXIT_OK


# --- flag ----------------------------------------------------------------------


def cmd_flag(args) -> int:
    preds, pmeta = read_preds_rebase(args.predictions, args.entropy_base)
    report = flag_above_threshold(preds, args.threshold)
    meta = _run_meta(args)
    code = EXIT_OK
    if args.manifest:
        entries, _ = reporting.read_manifest(args.manifest)
        labels = {tid: lab for tid, _, lab in entries}
        missing = [p.trace_id for p in preds if labels.get(p.trace_id) is None]
        if missing:
            raise DataError(f"manifest lacks labels for {missing[:3]} (and maybe more)")
        correctness = {p.trace_id: p.predicted == labels[p.trace_id] for p in preds}
        report = attach_metrics(report, correctness)
        if report.tpr is None and report.fpr is None and report.ppv is None:
            print("all metrics undefined for this report", file=sys.stderr)
            code = EXIT_UNDEFINED
    reporting.write_flag_report(args.out, preds, report, meta)
    print(f"flagged {len(report.flagged)}/{report.total} -> {args.out}")
    return code


def read_preds_rebase(path, base: str):
    """Load predictions, recomputing entropy in the requested base."""
    raw, meta = reporting.read_predictions(path)
    preds = [make_prediction(p.trace_id, p.predicted, p.probs, base) for p in raw]
    return preds, meta


# --- eval ----------------------------------------------------------------------


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError(f"{flag}: empty list")
    return values


def _write_result_artifacts(out_dir: Path, stem: str, result, base: str, meta: dict) -> None:
    reporting.write_predictions(out_dir / f"predictions_{stem}.csv", result.predictions, meta)
    correctness = result.correctness
    grid = [round(float(x), 12) for x in np.linspace(0.0, max_entropy(base), 37)]
    reporting.write_roc(out_dir / f"roc_{stem}.csv", roc_sweep(result.predictions, correctness, grid), meta)
    reporting.write_cdf(out_dir / f"cdf_{stem}.csv", entropy_cdf(result.predictions, correctness), meta)


def cmd_eval(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = reporting.load_manifest_traces(args.manifest)
    window_len = args.window_mins * 60.0
    config = _forest_config(args)
    base = args.entropy_base

    if args.protocol in ("percentage", "loo"):
        fractions = _parse_floats(args.fractions, "--fractions")
        tables = {}
        for scheme in _schemes(args):
            dataset = evaluate.build_dataset(traces, window_len, scheme)
            meta = _run_meta(args, scheme=scheme, protocol=args.protocol)
            if args.protocol == "percentage":
                table = evaluate.percentage_protocol(dataset, fractions, config, scheme, base)
                loo = evaluate.loo_cv(dataset, config, scheme, base)
                evaluate.add_column(table, evaluate.LOO_COLUMN, evaluate.loo_column(loo))
            else:
                loo = evaluate.loo_cv(dataset, config, scheme, base)
                table = evaluate.AccuracyTable(columns=[], rows={n: {} for n in evaluate.AccuracyTable.row_names()})
                evaluate.add_column(table, evaluate.LOO_COLUMN, evaluate.loo_column(loo))
            _write_result_artifacts(out_dir, scheme, loo, base, meta)
            header, rows = evaluate.table_csv_rows(table)
            meta_t = dict(meta)
            meta_t.update(evaluate.table_repeat_meta(table))
            reporting.write_csv(out_dir / f"accuracy_{scheme}.csv", header, rows, meta_t)
            tables[scheme] = table
        _write_table_text(out_dir, tables, args)
        return EXIT_OK

    if args.protocol == "inter":
        if not args.manifest_b:
            raise ConfigError("--protocol inter needs --manifest-b")
        traces_b = reporting.load_manifest_traces(args.manifest_b)
        fractions = _parse_floats(args.fractions, "--fractions")
        if 1.0 not in fractions:
            fractions = fractions + [1.0]
        tables = {}
        for scheme in _schemes(args):
            ds_a = evaluate.build_dataset(traces, window_len, scheme)
            ds_b = evaluate.build_dataset(traces_b, window_len, scheme)
            meta = _run_meta(args, scheme=scheme, protocol="inter")
            table, full = evaluate.inter_corpus(ds_a, ds_b, fractions, config, scheme, base)
            if full is not None:
                _write_result_artifacts(out_dir, scheme, full, base, meta)
            header, rows = evaluate.table_csv_rows(table)
            meta_t = dict(meta)
            meta_t.update(evaluate.table_repeat_meta(table))
            reporting.write_csv(out_dir / f"accuracy_{scheme}.csv", header, rows, meta_t)
            tables[scheme] = table
        _write_table_text(out_dir, tables, args)
        return EXIT_OK

    if args.protocol == "window-sweep":
        minutes = [int(x) for x in _parse_floats(args.windows, "--windows")]
        traces_b = reporting.load_manifest_traces(args.manifest_b) if args.manifest_b else None
        mode = "inter_10fold" if traces_b is not None else "intra_loo"
        points = evaluate.window_sweep(traces, minutes, mode, config, traces_b)
        meta = _run_meta(args, protocol=f"window-sweep/{mode}", scheme=RICH8)
        reporting.write_csv(
            out_dir / "window_sweep.csv", ["window_mins", "accuracy"], points, meta
        )
        for m, acc in points:
            print(f"{m:4d} min  {acc * 100:6.1f}%")
        return EXIT_OK

    if args.protocol == "subset-search":
        dataset = evaluate.build_dataset(traces, window_len, RICH8)
        results = evaluate.feature_subset_search(dataset)
        rows = [
            [f"{mask:02x}", "+".join(feature_names(RICH8)[i] for i in mask_indices(mask)),
             len(mask_indices(mask)), acc]
            for mask, acc in results
        ]
        meta = _run_meta(args, protocol="subset-search", scheme=RICH8)
        reporting.write_csv(
            out_dir / "subset_search.csv", ["mask", "features", "n_features", "accuracy"],
            rows, meta,
        )
        best_mask, best_acc = results[0]
        names = "+".join(feature_names(RICH8)[i] for i in mask_indices(best_mask))
        print(f"best mask 0x{best_mask:02x} ({names}) accuracy {best_acc * 100:.1f}%")
        return EXIT_OK

    raise ConfigError(f"unknown protocol {args.protocol!r}")


def _write_table_text(out_dir: Path, tables: dict, args) -> None:
    if RICH8 in tables and BASELINE2 in tables:
        text = evaluate.render_table_text(
            tables[RICH8], tables[BASELINE2],
            title="accuracy % as rich8 (baseline2)",
        )
    else:
        scheme, table = next(iter(tables.items()))
        text = evaluate.render_table_text(table, title=f"accuracy % with {scheme}")
    (out_dir / "accuracy.txt").write_text(text)
    print(text, end="")


# --- relabel --------------------------------------------------------------------


def _answer_stream(args):
    if args.answers:
        lines = Path(args.answers).read_text().splitlines()
        return iter(lines)
    if not sys.stdin.isatty():
        raise NonInteractiveWithoutAnswers(
            "stdin is not a terminal; pass --answers FILE for scripted review"
        )
    return None  # interactive


def cmd_relabel(args) -> int:
    preds, _pmeta = read_preds_rebase(args.predictions, args.entropy_base)
    manifest_meta, header, rows = reporting.read_csv(args.manifest)
    if header != reporting.MANIFEST_HEADER:
        raise DataError(f"{args.manifest}: not a manifest file")
    row_by_id = {}
    for row in rows:
        if len(row) != 3:
            raise DataError(f"{args.manifest}: bad row {row!r}")
        row_by_id[row[0]] = row
    unknown = [p.trace_id for p in preds if p.trace_id not in row_by_id]
    if unknown:
        raise DataError(f"predictions not in manifest: {unknown[:3]} (and maybe more)")

    queue = rank_by_uncertainty(preds)[: args.budget]
    answers = _answer_stream(args) if queue else None
    corrected = 0
    reviewed = 0
    for p in queue:
        row = row_by_id[p.trace_id]
        current = row[2] or "(unlabeled)"
        prompt = (
            f"{p.trace_id}: predicted={p.predicted.label} "
            f"entropy={p.entropy:.3f} label={current}\n"
            f"  [enter]=keep, type name to correct, q to stop: "
        )
        if answers is None:
            answer = input(prompt).strip()
        else:
            answer = next(answers, "q").strip()
            print(prompt + (answer or "(keep)"))
        if answer.lower() == "q":
            break
        reviewed += 1
        if answer and answer.lower() not in ("y", "keep"):
            new_label = SensorType.from_label(answer)  # raises DataError on typos
            if row[2] != new_label.label:
                row[2] = new_label.label
                corrected += 1

    reporting.write_csv(args.out_manifest, reporting.MANIFEST_HEADER, rows, manifest_meta)

    forest, run = load_model(args.model)
    ids, _labels, feats, schema, _fmeta = reporting.read_feature_matrix(args.features)
    label_by_id = {row[0]: row[2] for row in rows}
    keep, codes = [], []
    for i, tid in enumerate(ids):
        lab = label_by_id.get(tid, "")
        if lab:
            keep.append(i)
            codes.append(int(SensorType.from_label(lab)))
    if not keep:
        raise DataError("no labeled instances left to retrain on")
    dataset = LabeledDataset(
        tuple(ids[i] for i in keep), feats[keep], np.array(codes), schema
    )
    retrained = train_forest(dataset, forest.config, threads=args.threads)
    save_model(retrained, args.out_model, run)
    print(
        f"reviewed {reviewed}, corrected {corrected}; "
        f"retrained on {len(dataset)} instances -> {args.out_model}"
    )
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorclass",
        description="classify building sensors by type from their time series",
    )
    parser.add_argument("--version", action="version", version=f"sensorclass {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _shared_flags(p)
    p.add_argument("--preset", choices=PRESET_NAMES, default="default")
    p.add_argument("--spec", help="JSON corpus spec file (overrides --preset)")
    p.add_argument("--traces-per-type", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract features from a manifest")
    _shared_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="feature matrix CSV")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a forest on a feature matrix")
    _shared_flags(p)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="model file (JSON)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="predict types for a feature matrix")
    _shared_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="predictions CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("flag", help="threshold predictions into a review queue")
    _shared_flags(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--manifest", help="with labels: compute tpr/fpr/ppv")
    p.add_argument("--out", required=True, help="flag report CSV")
    p.set_defaults(func=cmd_flag)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    _shared_flags(p)
    p.add_argument("--protocol", required=True,
                   choices=["percentage", "loo", "inter", "window-sweep", "subset-search"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--manifest-b", help="second corpus (inter, window-sweep)")
    p.add_argument("--fractions", default="0.05,0.1,0.2,0.33,0.5")
    p.add_argument("--windows", default="15,30,45,60,90,120",
                   help="window-sweep grid, minutes")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("relabel", help="review uncertain predictions, retrain")
    _shared_flags(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--budget", type=int, default=10, help="max prompts this session")
    p.add_argument("--answers", help="scripted answers file, one per line")
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=cmd_relabel)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SensorClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
