"""Experiment runner CLI.

Subcommands map to the main experiment artifacts:

    bench    repeated train/evaluate cycles for a classifier grid
    uq       ensemble training, certainty decisions, UQ confusion matrix
    pca-map  2D projection joined with per-sample uncertainty
    synth    generate a synthetic feature file
    inspect  print an FMX file header

Every invocation writes into its own output directory (config echo,
per-run CSV, summary JSON, figure-data CSVs) and is fully determined by
the master seed: flags > config file > CASTGUARD_SEED > 0.

Exit codes: 0 success, 2 config/validation error, 3 data error,
4 training failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers
from .dataio import (
    FeatureDataset,
    SplitSpec,
    SynthSpec,
    gen_synth,
    inspect_fmx,
    read_csv,
    read_fmx,
    split_dataset,
    write_fmx,
)
from .errors import DataFormatError, TrainingError, ValidationError
from .metrics import aggregate_runs, auc, binary_metrics
from .mlp import TrainConfig
from .pca import pca_fit, pca_transform
from .uq import (
    DEFAULT_THRESHOLD,
    DEFAULT_THRESHOLD_GRID,
    EnsembleConfig,
    assess,
    ensemble_train,
    entropy_histogram,
    threshold_sweep,
    uncertainty_accuracy,
    uq_confusion,
    write_assessment_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4

_METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "auc")


@dataclass
class ExperimentConfig:
    inputs: list = field(default_factory=list)  # FMX/CSV paths; empty means synth
    label_column: str = "label"
    synth: dict = field(default_factory=dict)  # SynthSpec overrides
    classifiers: list = field(default_factory=lambda: list(classifiers.KINDS))
    runs: int = 100
    train_fraction: float = 0.75
    stratified: bool = True
    threshold: float = DEFAULT_THRESHOLD
    threshold_grid: list = field(default_factory=lambda: list(DEFAULT_THRESHOLD_GRID))
    n_members: int = 10
    epochs: int = 30
    out: str = "castguard-out"
    master_seed: int = 0
    jobs: int = 1
    train_on_projected: bool = False  # pca-map: feed q-dim projections to the ensemble
    pca_q: int = 2


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    doc_keys: set = set()
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise DataFormatError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from exc
        unknown = set(doc) - set(config.__dict__)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        for key, value in doc.items():
            setattr(config, key, value)
        doc_keys = set(doc)

    # flags win over the config document
    if getattr(args, "input", None):
        config.inputs = list(args.input)
    if getattr(args, "classifiers", None):
        config.classifiers = [c.strip() for c in args.classifiers.split(",") if c.strip()]
    for flag, attr in (
        ("runs", "runs"),
        ("threshold", "threshold"),
        ("jobs", "jobs"),
        ("out", "out"),
        ("train_fraction", "train_fraction"),
        ("members", "n_members"),
        ("epochs", "epochs"),
        ("q", "pca_q"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, attr, value)
    if getattr(args, "no_stratify", False):
        config.stratified = False
    if getattr(args, "train_on_projected", False):
        config.train_on_projected = True

    # master seed precedence: flag > config document > environment > 0
    if getattr(args, "seed", None) is not None:
        config.master_seed = args.seed
    elif "master_seed" not in doc_keys and os.environ.get("CASTGUARD_SEED"):
        try:
            config.master_seed = int(os.environ["CASTGUARD_SEED"])
        except ValueError as exc:
            raise ValidationError(f"CASTGUARD_SEED must be an integer: {exc}") from exc

    if config.runs < 1:
        raise ValidationError(f"runs must be >= 1, got {config.runs}")
    unknown = set(config.classifiers) - set(classifiers.KINDS)
    if unknown:
        raise ValidationError(f"unknown classifiers: {sorted(unknown)}")
    return config


def _load_inputs(config: ExperimentConfig) -> list[tuple[str, FeatureDataset]]:
    """(tag, dataset) pairs; falls back to a synthetic dataset when no inputs given."""
    if not config.inputs:
        spec = SynthSpec(**{**{"seed": config.master_seed}, **config.synth})
        data = gen_synth(spec)
        return [("synth", data)]
    out = []
    for path in config.inputs:
        if not Path(path).exists():
            raise DataFormatError(f"input file not found: {path}")
        if str(path).endswith(".csv"):
            data = read_csv(path, label_column=config.label_column)
        else:
            data = read_fmx(path)
        out.append((Path(path).stem, data))
    return out


def _classifier_seed(master_seed: int, input_idx: int, clf_idx: int, run_idx: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(input_idx, clf_idx, run_idx))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _ensemble_config(config: ExperimentConfig) -> EnsembleConfig:
    return EnsembleConfig(
        n_members=config.n_members,
        member_seed_base=config.master_seed,
        train_config=TrainConfig(epochs=config.epochs, shuffle_seed=config.master_seed),
    )


def _prepare_out(config: ExperimentConfig, command: str) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = dict(asdict(config), command=command)
    with open(out / "config-echo.json", "w", encoding="utf-8") as fh:
        json.dump(echo, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _fmt(value: float) -> str:
    return "" if value is None else repr(float(value))


def _bench_one(tag, dataset, kind, input_idx, clf_idx, run_idx, config):
    """One train/evaluate cycle; returns a per-run CSV row.

    Failures (bad split, degenerate data, non-convergence) become error
    rows so the full grid always completes.
    """
    split_seed = (config.master_seed + run_idx) % 2**64
    row = {
        "run_index": run_idx,
        "classifier": kind,
        "architecture_tag": tag,
        "status": "ok",
        "accuracy": None,
        "sensitivity": None,
        "specificity": None,
        "auc": None,
    }
    try:
        train, test = split_dataset(
            dataset,
            SplitSpec(
                train_fraction=config.train_fraction, seed=split_seed, stratified=config.stratified
            ),
        )
        spec = classifiers.ClassifierSpec(
            kind=kind, seed=_classifier_seed(config.master_seed, input_idx, clf_idx, run_idx)
        )
        model = classifiers.fit(spec, train)
        predictions = model.predict(test.features)
        scores = model.score(test.features)
        accuracy, sensitivity, specificity = binary_metrics(predictions, test.labels)
        row.update(
            accuracy=accuracy,
            sensitivity=sensitivity,
            specificity=specificity,
            auc=auc(scores, test.labels),
        )
    except (TrainingError, ValidationError) as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_bench(config: ExperimentConfig) -> int:
    out = _prepare_out(config, "bench")
    datasets = _load_inputs(config)
    tasks = [
        (tag, dataset, kind, input_idx, clf_idx, run_idx)
        for input_idx, (tag, dataset) in enumerate(datasets)
        for clf_idx, kind in enumerate(config.classifiers)
        for run_idx in range(config.runs)
    ]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(lambda t: _bench_one(*t, config), tasks))
    else:
        rows = [_bench_one(*t, config) for t in tasks]

    with open(out / "per-run.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["run_index", "classifier", "architecture_tag", "accuracy", "sensitivity", "specificity", "auc", "status"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["run_index"],
                    row["classifier"],
                    row["architecture_tag"],
                    _fmt(row["accuracy"]),
                    _fmt(row["sensitivity"]),
                    _fmt(row["specificity"]),
                    _fmt(row["auc"]),
                    row["status"],
                ]
            )

    summary = {}
    for tag, _ in datasets:
        for kind in config.classifiers:
            good = [
                r
                for r in rows
                if r["architecture_tag"] == tag and r["classifier"] == kind and r["status"] == "ok"
            ]
            failed = sum(
                1
                for r in rows
                if r["architecture_tag"] == tag and r["classifier"] == kind and r["status"] != "ok"
            )
            cell = {"runs_ok": len(good), "runs_failed": failed}
            for metric in _METRIC_NAMES:
                values = [r[metric] for r in good if r[metric] is not None and np.isfinite(r[metric])]
                if values:
                    cell[metric] = aggregate_runs(metric, values).summary()
            summary.setdefault(tag, {})[kind] = cell
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # Table-shaped grid on stdout, one row per input x classifier
    print(f"{'input':<16} {'classifier':<18} {'accuracy':>14} {'sensitivity':>14} {'specificity':>14} {'auc':>14}")
    for tag, _ in datasets:
        for kind in config.classifiers:
            cell = summary[tag][kind]
            cols = []
            for metric in _METRIC_NAMES:
                if metric in cell:
                    cols.append(f"{cell[metric]['mean']:.3f}±{cell[metric]['std']:.3f}")
                else:
                    cols.append("-")
            print(f"{tag:<16} {kind:<18} " + " ".join(f"{c:>14}" for c in cols))
            if cell["runs_failed"]:
                print(f"{'':<16} {'':<18} ({cell['runs_failed']} failed runs)")
    return EXIT_OK


def _train_and_assess(config: ExperimentConfig, dataset: FeatureDataset, features_override=None):
    split = SplitSpec(
        train_fraction=config.train_fraction, seed=config.master_seed, stratified=config.stratified
    )
    base = dataset
    if features_override is not None:
        base = FeatureDataset(
            features=features_override, labels=dataset.labels, source_tag=dataset.source_tag
        )
    train, test = split_dataset(base, split)
    ensemble = ensemble_train(_ensemble_config(config), train)
    assessment = assess(ensemble, test, threshold=config.threshold)
    return train, test, ensemble, assessment


def cmd_uq(config: ExperimentConfig) -> int:
    out = _prepare_out(config, "uq")
    for tag, dataset in _load_inputs(config):
        prefix = f"{tag}-" if len(config.inputs) > 1 else ""
        _, _, _, assessment = _train_and_assess(config, dataset)
        write_assessment_csv(assessment, out / f"{prefix}assessment.csv")

        confusion = uq_confusion(assessment)
        ua = uncertainty_accuracy(confusion)
        sweep = threshold_sweep(assessment, config.threshold_grid)
        with open(out / f"{prefix}sweep.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "tc", "tu", "fu", "fc", "uncertainty_accuracy"])
            for t, conf, t_ua in sweep:
                writer.writerow([repr(t), conf.tc, conf.tu, conf.fu, conf.fc, repr(t_ua)])

        edges, correct_counts, incorrect_counts = entropy_histogram(assessment, n_bins=20)
        with open(out / f"{prefix}histogram.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_low", "bin_high", "correct", "incorrect"])
            for i in range(len(correct_counts)):
                writer.writerow(
                    [repr(float(edges[i])), repr(float(edges[i + 1])), int(correct_counts[i]), int(incorrect_counts[i])]
                )

        with open(out / f"{prefix}uq-summary.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "input": tag,
                    "threshold": config.threshold,
                    "tc": confusion.tc,
                    "tu": confusion.tu,
                    "fu": confusion.fu,
                    "fc": confusion.fc,
                    "uncertainty_accuracy": ua,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        print(f"{tag}: threshold {config.threshold}")
        print(f"  TC={confusion.tc} TU={confusion.tu} FU={confusion.fu} FC={confusion.fc}")
        print(f"  uncertainty accuracy = {ua:.4f}")
    return EXIT_OK


def cmd_pca_map(config: ExperimentConfig) -> int:
    out = _prepare_out(config, "pca-map")
    for tag, dataset in _load_inputs(config):
        prefix = f"{tag}-" if len(config.inputs) > 1 else ""
        split = SplitSpec(
            train_fraction=config.train_fraction,
            seed=config.master_seed,
            stratified=config.stratified,
        )
        train, test = split_dataset(dataset, split)
        pca = pca_fit(train.features, q=config.pca_q)
        if config.train_on_projected:
            projected = pca_transform(pca, dataset.features).astype(np.float32)
            _, _, _, assessment = _train_and_assess(config, dataset, features_override=projected)
        else:
            ensemble = ensemble_train(_ensemble_config(config), train)
            assessment = assess(ensemble, test, threshold=config.threshold)
        coords = pca_transform(pca, test.features)

        with open(out / f"{prefix}pca-map.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_index", "pc1", "pc2", "entropy", "predicted", "true"])
            for i in range(assessment.n_samples):
                writer.writerow(
                    [
                        i,
                        repr(float(coords[i, 0])),
                        repr(float(coords[i, 1])) if config.pca_q > 1 else "0.0",
                        repr(float(assessment.entropy[i])),
                        int(assessment.predicted[i]),
                        int(assessment.true_labels[i]),
                    ]
                )
        print(f"{tag}: wrote {assessment.n_samples}-row map ({prefix}pca-map.csv)")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_per_class=args.n_per_class,
        dim=args.dim,
        class_separation=args.separation,
        noise_sigma=args.sigma,
        seed=args.seed if args.seed is not None else 0,
    )
    dataset = gen_synth(spec)
    write_fmx(dataset, args.out_file)
    print(f"wrote {dataset.n_samples} x {dataset.feature_dim} features to {args.out_file}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    header = inspect_fmx(args.path)
    for key in ("version", "n_rows", "n_cols", "has_labels", "payload_bytes"):
        print(f"{key}: {header[key]}")
    if header["has_labels"]:
        dataset = read_fmx(args.path)
        n_ok, n_defect = dataset.class_counts()
        print(f"labels: {n_defect} defect / {n_ok} ok")
        print(f"source_tag: {dataset.source_tag!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="castguard",
        description="Casting-defect classification benchmarks and deep-ensemble uncertainty quantification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config document; flags override it")
        p.add_argument("--input", action="append", help="FMX or CSV input (repeatable)")
        p.add_argument("--classifiers", help="comma-separated classifier kinds")
        p.add_argument("--runs", type=int, help="train/evaluate cycles per combination")
        p.add_argument("--threshold", type=float, help="certainty threshold on entropy")
        p.add_argument("--train-fraction", type=float, dest="train_fraction")
        p.add_argument("--no-stratify", action="store_true", help="disable stratified splitting")
        p.add_argument("--members", type=int, help="ensemble size")
        p.add_argument("--epochs", type=int, help="ensemble member training epochs")
        p.add_argument("--seed", type=int, help="master seed (else config, else $CASTGUARD_SEED)")
        p.add_argument("--jobs", type=int, help="concurrent runs")
        p.add_argument("--out", help="output directory")

    p_bench = sub.add_parser("bench", help="benchmark classifiers over repeated runs")
    add_common(p_bench)

    p_uq = sub.add_parser("uq", help="ensemble uncertainty assessment and UQ confusion matrix")
    add_common(p_uq)

    p_map = sub.add_parser("pca-map", help="2D projection with per-sample uncertainty")
    add_common(p_map)
    p_map.add_argument("--q", type=int, help="projection dimension (default 2)")
    p_map.add_argument(
        "--train-on-projected",
        action="store_true",
        help="train the ensemble on the projected features instead of the full ones",
    )

    p_synth = sub.add_parser("synth", help="write a synthetic FMX feature file")
    p_synth.add_argument("out_file")
    p_synth.add_argument("--n-per-class", type=int, default=200, dest="n_per_class")
    p_synth.add_argument("--dim", type=int, default=20)
    p_synth.add_argument("--separation", type=float, default=8.0)
    p_synth.add_argument("--sigma", type=float, default=1.0)
    p_synth.add_argument("--seed", type=int, default=None)

    p_inspect = sub.add_parser("inspect", help="print an FMX file header")
    p_inspect.add_argument("path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        config = _load_config(args)
        if args.command == "bench":
            return cmd_bench(config)
        if args.command == "uq":
            return cmd_uq(config)
        if args.command == "pca-map":
            return cmd_pca_map(config)
        parser.error(f"unknown command {args.command}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
