"""Command-line harness.

Subcommands: train, evaluate, predict, experiment, headmode-compare,
params, generate. Global flags: --config PATH, --seed N (overrides the
config), --out DIR, --quiet. Exit codes: 0 success, 1 usage/config error,
2 data error, 3 numeric divergence.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import backend
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .data import generate_synthetic, load_csv, save_csv, standardize_apply
from .errors import (ConfigError, DataError, NumericError, ShapeError,
                     SoftsenseError)
from .experiments import (MODEL_LEGEND, headmode_compare,
                          imbalance_comparison, model_ranking, prepare_splits,
                          run_experiment, run_training, stack_depth_comparison)
from .metrics import evaluate
from .model import count_parameters, predict

log = logging.getLogger("softsense")

HISTORY_FIELDS = ("stage", "epoch", "J", "J_x", "J_y", "sigma1_sq", "sigma2_sq")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_config(config: RunConfig, out: str) -> None:
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(config.echo())


def _write_history(histories, out: str) -> None:
    with open(os.path.join(out, "history.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_FIELDS)
        for stage in histories:
            for st in stage.epochs:
                writer.writerow([stage.stage, st.epoch, repr(st.loss),
                                 repr(st.loss_x), repr(st.loss_y),
                                 repr(st.sigma1_sq), repr(st.sigma2_sq)])


def _write_report(report, out: str, stem: str = "metrics") -> None:
    with open(os.path.join(out, f"{stem}.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(report.CSV_FIELDS)
        writer.writerows(report.csv_rows())
    with open(os.path.join(out, f"{stem}.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.format_text() + "\n")


def _effective_config(args) -> RunConfig:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    return config.with_overrides(**overrides) if overrides else config


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    result = run_training(config)
    _write_config(config, out)
    # out_dir stays out of the checkpoint so identical config+seed runs
    # produce byte-identical checkpoints regardless of where they land
    ckpt_config = {k: v for k, v in config.doc.items() if k != "out_dir"}
    save_checkpoint(result.model, os.path.join(out, "checkpoint.json"),
                    seed=result.seed, config=ckpt_config,
                    train_class_counts=result.splits.train_class_counts)
    _write_history(result.histories, out)
    _write_report(result.report, out)
    if not args.quiet:
        print(result.report.format_text())
        print(f"artifacts written to {out}")
    return 0


def _load_eval_data(config: RunConfig, args, model, meta):
    if args.data is not None:
        schema = config.csv_schema() if config.doc["data"]["kind"] == "csv" else None
        if schema is None or not schema.feature_columns:
            raise ConfigError("evaluating a CSV file needs a config with "
                              "data.csv feature_columns/label_columns")
        ds = load_csv(args.data, schema)
        feats = standardize_apply(model.standardization, ds.features) \
            if model.standardization is not None else ds.features
        return feats, ds.labels, ds.head_names
    splits = prepare_splits(config, config.seed)
    return splits.test.features, splits.test.labels, splits.test.head_names


def cmd_evaluate(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    model, meta = load_checkpoint(args.checkpoint)
    feats, labels, head_names = _load_eval_data(config, args, model, meta)
    if feats.shape[1] != model.input_dim:
        raise ShapeError(f"data has {feats.shape[1]} feature columns but the "
                         f"checkpoint expects {model.input_dim}")
    counts = meta.get("train_class_counts")
    policy = config.doc["metrics"]["beta_policy"]
    if counts is None and policy == "per_head_imbalance_ratio":
        log.warning("checkpoint has no training class counts; using beta=1")
        policy, fixed = "fixed", 1.0
    else:
        fixed = config.doc["metrics"]["fixed_beta"]
    _, hard = predict(model, feats)
    report = evaluate(labels, hard, beta_policy=policy,
                      train_class_counts=counts, fixed_beta=fixed,
                      head_names=model.head_names or head_names)
    _write_config(config, out)
    _write_report(report, out)
    if not args.quiet:
        print(report.format_text())
    return 0


def cmd_predict(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    model, meta = load_checkpoint(args.checkpoint)
    if args.data is not None:
        schema = config.csv_schema()
        if not schema.feature_columns:
            raise ConfigError("predicting from CSV needs data.csv.feature_columns")
        ds = load_csv(args.data, schema)
        feats = ds.features
    else:
        ds = None
        feats = prepare_splits(config, config.seed).test.features
    if args.data is not None and model.standardization is not None:
        feats = standardize_apply(model.standardization, feats)
    if feats.shape[1] != model.input_dim:
        raise ShapeError(f"data has {feats.shape[1]} feature columns but the "
                         f"checkpoint expects {model.input_dim}")
    probs, hard = predict(model, feats)
    names = model.head_names or [f"Y{j+1}" for j in range(probs.shape[1])]
    path = os.path.join(out, "predictions.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"prob_{n}" for n in names] + [f"pred_{n}" for n in names])
        for i in range(probs.shape[0]):
            writer.writerow([repr(float(p)) for p in probs[i]]
                            + [int(v) for v in hard[i]])
    if not args.quiet:
        print(f"wrote {probs.shape[0]} predictions to {path}")
    return 0


def cmd_experiment(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    result = run_experiment(config, workers=args.workers)
    _write_config(config, out)

    def fmt(v):
        return "" if v is None else f"{v:.4f}"

    with open(os.path.join(out, "results_long.csv"), "w", newline="",
              encoding="utf-8") as fh:
        fields = ["model", "imbalance", "combiner", "cell", "seed", "head",
                  "support", "support_pos", "tp", "fp", "tn", "fn", "recall",
                  "precision", "f_beta", "beta"]
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in fields})
    with open(os.path.join(out, "cells.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["cell", "seed", "status", "error"])
        writer.writeheader()
        writer.writerows(result.run_status)

    imb = imbalance_comparison(result)
    with open(os.path.join(out, "imbalance_compare.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"{'output':<10}{'method':<18}{'recall':>10}{'f_beta':>10}\n")
        for row in imb:
            fh.write(f"{row['head']:<10}{row['imbalance']:<18}"
                     f"{fmt(row['recall']):>10}{fmt(row['f_beta']):>10}\n")

    depth = stack_depth_comparison(result)
    with open(os.path.join(out, "stack_compare.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"{'output':<10}{'model':<8}{'recall':>10}{'f_beta':>10}\n")
        for row in depth:
            fh.write(f"{row['head']:<10}{row['depth']:<8}"
                     f"{fmt(row['recall']):>10}{fmt(row['f_beta']):>10}\n")

    ranking = model_ranking(result)
    with open(os.path.join(out, "model_ranking.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"{'model':<26}{'recall':>10}{'f_beta':>10}\n")
        for row in ranking:
            fh.write(f"{row['cell']:<26}{fmt(row['recall']):>10}"
                     f"{fmt(row['f_beta']):>10}\n")
        fh.write("\n" + MODEL_LEGEND + "\n")

    if not args.quiet:
        print(f"{len(result.rows)} result rows, {result.failures} failed runs; "
              f"reports in {out}")
    ok_runs = sum(1 for s in result.run_status if s["status"] == "ok")
    return 0 if ok_runs else 1


def cmd_headmode_compare(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    result = headmode_compare(config)
    _write_config(config, out)
    for series, stem in ((result.multi, "headmode_multi"),
                         (result.categorical, "headmode_categorical")):
        with open(os.path.join(out, f"{stem}.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "updates", "J", "J_x", "J_y",
                             "sigma1_sq", "sigma2_sq"])
            for st in series.epochs:
                writer.writerow([st.epoch, st.epoch * series.batches_per_epoch,
                                 repr(st.loss), repr(st.loss_x), repr(st.loss_y),
                                 repr(st.sigma1_sq), repr(st.sigma2_sq)])
    summary = {
        "reference_epoch": result.reference_epoch,
        "reference_loss": result.reference_loss,
        "updates_multi_head": result.updates_multi,
        "updates_categorical": result.updates_categorical,
        "multi_head_faster": result.multi_head_faster,
        "batches_per_epoch_multi": result.multi.batches_per_epoch,
        "batches_per_epoch_categorical": result.categorical.batches_per_epoch,
    }
    with open(os.path.join(out, "headmode_summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump({k: (str(v) if v == math.inf else v)
                   for k, v in summary.items()}, fh, indent=2)
        fh.write("\n")
    if not args.quiet:
        print(f"multi-head reached reference loss {result.reference_loss:.4f} "
              f"after {result.updates_multi} updates; categorical after "
              f"{result.updates_categorical}")
    return 0


def cmd_params(args) -> int:
    config = _effective_config(args)
    if args.input_dim is not None:
        input_dim = args.input_dim
    elif config.doc["data"]["kind"] == "synthetic":
        input_dim = config.synthetic_spec().n_features
    else:
        input_dim = len(config.csv_schema().feature_columns)
    hidden = ([int(v) for v in args.hidden_dims.split(",")]
              if args.hidden_dims else config.model_spec().hidden_dims)
    if args.head_units is not None:
        units = args.head_units
    elif config.doc["data"]["kind"] == "synthetic":
        units = 2 * config.synthetic_spec().n_heads
    else:
        units = 2 * len(config.csv_schema().label_columns)
    report = count_parameters(input_dim, hidden, units)
    print(f"{'layer':<16}{'encoder':>12}{'decoder_x':>12}{'decoder_y':>12}"
          f"{'subtotal':>12}")
    for row in report.layers:
        print(f"{row.name:<16}{row.encoder:>12}{row.decoder_x:>12}"
              f"{row.decoder_y:>12}{row.subtotal:>12}")
    print(f"{'Classifier':<16}{'':>12}{'':>12}{report.classifier:>12}"
          f"{report.classifier:>12}")
    print(f"{'Total':<16}{'':>36}{report.total:>12}")
    print(f"plain stacked autoencoder subtotal: {report.plain_ae_subtotal}")
    print(f"head machinery overhead: {report.head_overhead} parameters "
          f"({100.0 * report.overhead_ratio:.2f}%)")
    return 0


def cmd_generate(args) -> int:
    config = _effective_config(args)
    out = _ensure_out(config.out_dir)
    ds = generate_synthetic(config.synthetic_spec())
    if args.flatten:
        from .data import flatten_to_categorical
        ds = flatten_to_categorical(ds)
    path = os.path.join(out, args.name)
    save_csv(ds, path)
    _write_config(config, out)
    if not args.quiet:
        print(f"wrote {ds.n_samples} rows x {ds.n_features} features, "
              f"{ds.n_heads} heads to {path}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="softsense",
                     description="Multi-headed quality-driven autoencoder "
                                 "toolkit for imbalanced soft-sensing data "
                                 f"(kernel backend: {backend.backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("train", help="train a model and write artifacts")
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", default=None, help="CSV file (default: the "
                   "config's test split)")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("predict", help="write per-head probabilities")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", default=None)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("experiment", help="run the comparison grid")
    common(p)
    p.add_argument("--workers", type=int, default=1,
                   help="run grid cells in a process pool (default: sequential)")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("headmode-compare",
                       help="multi-head vs categorical-input convergence")
    common(p)
    p.set_defaults(fn=cmd_headmode_compare)

    p = sub.add_parser("params", help="parameter accounting table")
    common(p)
    p.add_argument("--input-dim", type=int, default=None)
    p.add_argument("--hidden-dims", default=None,
                   help="comma-separated, e.g. 400,200,100,50")
    p.add_argument("--head-units", type=int, default=None)
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("generate", help="write synthetic data to CSV")
    common(p)
    p.add_argument("--name", default="data.csv")
    p.add_argument("--flatten", action="store_true",
                   help="emit the single-head categorical-input form")
    p.set_defaults(fn=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.WARNING if args.quiet else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.fn(args)
    except ConfigError as exc:
        print(f'error kind=config exit=1 message="{exc}"', file=sys.stderr)
        return 1
    except (DataError, ShapeError) as exc:
        print(f'error kind=data exit=2 message="{exc}"', file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f'error kind=numeric exit=3 message="{exc}"', file=sys.stderr)
        return 3
    except SoftsenseError as exc:
        print(f'error kind=other exit=1 message="{exc}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
