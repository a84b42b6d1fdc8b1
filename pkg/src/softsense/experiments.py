"""Experiment harness: the end-to-end training pipeline, the model
comparison grid (imbalance methods x model kinds x seeds), and the
multi-head vs categorical-input convergence comparison.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .data import (Dataset, flatten_to_categorical, generate_synthetic,
                   load_csv, split, standardize_apply, standardize_fit)
from .errors import SoftsenseError
from .heads import head_units
from .metrics import MetricsReport, evaluate
from .model import (QaeLayerSpec, StackedModel, TrainConfig, predict,
                    train_model, train_qae_layer, training_weights)
from .nn import make_rng
from .smote import smote_rebalance

log = logging.getLogger(__name__)

IMBALANCE_TAGS = {"weighted_class": "WC", "smote": "SMOTE", "none": "NONE"}
COMBINER_TAGS = {"naive": "WL", "variance_weighted": "VWL"}

MODEL_LEGEND = ("AE: autoencoder, Q: quality-driven, S: stacked, "
                "WC: weighted class, WL: weighted loss, "
                "VWL: variance weighted loss, LR: logistic regression "
                "classifier, NN: fully connected neural net classifier")


def prepare_dataset(config: RunConfig) -> Dataset:
    """Materialize the configured data source (synthetic or CSV)."""
    if config.doc["data"]["kind"] == "synthetic":
        return generate_synthetic(config.synthetic_spec())
    return load_csv(config.doc["data"]["csv"]["path"], config.csv_schema())


@dataclass
class PreparedSplits:
    """Standardized train/val/test views plus the fitting stats."""

    train: Dataset
    val: Dataset
    test: Dataset
    stats: object
    train_class_counts: np.ndarray


def prepare_splits(config: RunConfig, seed: int, ds: Dataset | None = None) -> PreparedSplits:
    if ds is None:
        ds = prepare_dataset(config)
    stratify = config.doc["split"]["stratify_head"]
    train, val, test = split(ds, config.split_fractions(), seed=seed,
                             stratify_head=stratify)
    stats = standardize_fit(train.features)
    parts = []
    for part in (train, val, test):
        feats = (standardize_apply(stats, part.features)
                 if part.n_samples else part.features)
        parts.append(Dataset(feats, part.labels, part.feature_names,
                             part.head_names))
    return PreparedSplits(train=parts[0], val=parts[1], test=parts[2],
                          stats=stats,
                          train_class_counts=parts[0].labels.class_counts())


@dataclass
class TrainRunResult:
    model: StackedModel
    histories: list
    report: MetricsReport
    splits: PreparedSplits
    seed: int
    kind: str
    imbalance: str
    combiner: str


def _evaluate_on(config: RunConfig, model: StackedModel, part: Dataset,
                 train_class_counts) -> MetricsReport:
    _, hard = predict(model, part.features)
    return evaluate(part.labels, hard,
                    beta_policy=config.doc["metrics"]["beta_policy"],
                    train_class_counts=train_class_counts,
                    fixed_beta=config.doc["metrics"]["fixed_beta"],
                    head_names=part.head_names)


def run_training(config: RunConfig, seed: int | None = None,
                 kind: str | None = None, imbalance: str | None = None,
                 combiner: str | None = None,
                 ds: Dataset | None = None) -> TrainRunResult:
    """Full pipeline: data, split, standardize, rebalance, train, evaluate.

    The per-head beta used in the report comes from the raw training-split
    class sizes (before any oversampling).
    """
    seed = config.seed if seed is None else seed
    kind = config.doc["model"]["kind"] if kind is None else kind
    imbalance = config.doc["imbalance"]["method"] if imbalance is None else imbalance
    combiner = config.doc["loss"]["combiner"] if combiner is None else combiner
    splits = prepare_splits(config, seed, ds=ds)
    cfg = config.train_config(seed=seed)
    cfg = TrainConfig(learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                      early_stop_min_delta=cfg.early_stop_min_delta,
                      patience=cfg.patience, max_epochs=cfg.max_epochs,
                      seed=seed, combiner=combiner,
                      naive_lambda=cfg.naive_lambda, imbalance=imbalance,
                      smote_k=cfg.smote_k)
    rng = make_rng(seed)
    feats, labels = splits.train.features, splits.train.labels
    if imbalance == "smote":
        feats, labels = smote_rebalance(feats, labels, cfg.smote_k, rng)
        log.info("SMOTE: training rows %d -> %d", splits.train.n_samples,
                 feats.shape[0])
    model, histories = train_model(kind, feats, labels, config.model_spec(),
                                   cfg, rng)
    model.standardization = splits.stats
    model.head_names = list(splits.train.head_names)
    report = _evaluate_on(config, model, splits.test, splits.train_class_counts)
    return TrainRunResult(model=model, histories=histories, report=report,
                          splits=splits, seed=seed, kind=kind,
                          imbalance=imbalance, combiner=combiner)


# ---------------------------------------------------------------------------
# comparison grid

@dataclass
class GridCell:
    kind: str
    imbalance: str
    combiner: str | None

    @property
    def label(self) -> str:
        parts = [self.kind.upper(), IMBALANCE_TAGS[self.imbalance]]
        if self.combiner is not None:
            parts.append(COMBINER_TAGS[self.combiner])
        return " ".join(parts)


def grid_cells(config: RunConfig) -> list:
    exp = config.doc["experiment"]
    cells = []
    for kind in exp["models"]:
        for imb in exp["imbalance_methods"]:
            if kind in ("lr", "nn"):
                cells.append(GridCell(kind, imb, None))
            else:
                for comb in exp["combiners"]:
                    cells.append(GridCell(kind, imb, comb))
    if not cells:
        raise SoftsenseError("experiment grid is empty")
    return cells


@dataclass
class ExperimentResult:
    cells: list
    seeds: list
    rows: list        # one dict per (successful run, head)
    run_status: list  # one dict per (cell, seed)
    failures: int


def _run_cell(doc: dict, cell: GridCell, seed: int):
    """One grid run, reduced to picklable status + per-head rows."""
    config = RunConfig(doc)
    try:
        result = run_training(config, seed=seed, kind=cell.kind,
                              imbalance=cell.imbalance,
                              combiner=cell.combiner
                              or config.doc["loss"]["combiner"])
    except SoftsenseError as exc:
        return ({"cell": cell.label, "seed": seed, "status": "failed",
                 "error": str(exc)}, [])
    rows = []
    for h in result.report.heads:
        rows.append({
            "model": cell.kind.upper(),
            "imbalance": cell.imbalance,
            "combiner": cell.combiner or "",
            "cell": cell.label,
            "seed": seed,
            "head": h.name,
            "support": h.support,
            "support_pos": h.support_pos,
            "tp": h.tp, "fp": h.fp, "tn": h.tn, "fn": h.fn,
            "recall": h.recall, "precision": h.precision,
            "f_beta": h.f_beta, "beta": h.beta_used,
        })
    return ({"cell": cell.label, "seed": seed, "status": "ok", "error": ""},
            rows)


def run_experiment(config: RunConfig, workers: int = 1) -> ExperimentResult:
    """Run every grid cell with every seed; cell failures are recorded and
    the grid continues.

    Cells run sequentially by default. With workers > 1 they run in a
    process pool; every cell owns its seed-derived rng and output rows are
    collected in grid order, so results are identical either way.
    """
    cells = grid_cells(config)
    seeds = list(config.doc["experiment"]["seeds"])
    jobs = [(cell, seed) for cell in cells for seed in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, config.doc, cell, seed)
                       for cell, seed in jobs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_run_cell(config.doc, cell, seed) for cell, seed in jobs]
    rows, status = [], []
    failures = 0
    for (cell, seed), (stat, cell_rows) in zip(jobs, outcomes):
        status.append(stat)
        if stat["status"] == "ok":
            rows.extend(cell_rows)
            log.info("cell %s seed %d ok", cell.label, seed)
        else:
            failures += 1
            log.warning("cell %s seed %d failed: %s", cell.label, seed,
                        stat["error"])
    return ExperimentResult(cells=cells, seeds=seeds, rows=rows,
                            run_status=status, failures=failures)


def _median_defined(values):
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def imbalance_comparison(result: ExperimentResult) -> list:
    """Per-output medians (across models, combiners, seeds) per imbalance
    method: [{head, imbalance, recall, f_beta, runs}]."""
    table = []
    heads = sorted({r["head"] for r in result.rows})
    methods = sorted({r["imbalance"] for r in result.rows})
    for head in heads:
        for method in methods:
            sel = [r for r in result.rows
                   if r["head"] == head and r["imbalance"] == method]
            if not sel:
                continue
            table.append({"head": head, "imbalance": method,
                          "recall": _median_defined([r["recall"] for r in sel]),
                          "f_beta": _median_defined([r["f_beta"] for r in sel]),
                          "runs": len(sel)})
    return table


def stack_depth_comparison(result: ExperimentResult) -> list:
    """Single-layer vs stacked quality-driven models per output."""
    table = []
    heads = sorted({r["head"] for r in result.rows})
    for head in heads:
        for depth, prefix in (("QAE", "QAE+"), ("SQAE", "SQAE+")):
            sel = [r for r in result.rows
                   if r["head"] == head and r["model"].startswith(prefix)]
            if not sel:
                continue
            table.append({"head": head, "depth": depth,
                          "recall": _median_defined([r["recall"] for r in sel]),
                          "f_beta": _median_defined([r["f_beta"] for r in sel]),
                          "runs": len(sel)})
    return table


def model_ranking(result: ExperimentResult) -> list:
    """Macro-average performance per grid cell, best first.

    Per run: mean of defined per-head values; per cell: median over seeds.
    """
    ranking = []
    for cell in result.cells:
        sel = [r for r in result.rows if r["cell"] == cell.label]
        if not sel:
            continue
        per_seed_recall, per_seed_fbeta = [], []
        for seed in result.seeds:
            srows = [r for r in sel if r["seed"] == seed]
            if not srows:
                continue
            rec = [r["recall"] for r in srows if r["recall"] is not None]
            fb = [r["f_beta"] for r in srows if r["f_beta"] is not None]
            if rec:
                per_seed_recall.append(sum(rec) / len(rec))
            if fb:
                per_seed_fbeta.append(sum(fb) / len(fb))
        ranking.append({"cell": cell.label,
                        "recall": _median_defined(per_seed_recall),
                        "f_beta": _median_defined(per_seed_fbeta)})
    ranking.sort(key=lambda r: (-1.0 if r["recall"] is None else -r["recall"],
                                r["cell"]))
    return ranking


# ---------------------------------------------------------------------------
# multi-head vs categorical-input comparison

@dataclass
class HeadmodeSeries:
    label: str
    batches_per_epoch: int
    epochs: list  # EpochStats

    def updates_to(self, reference: float) -> float:
        """Gradient updates until the epoch loss first reaches reference."""
        for st in self.epochs:
            if st.loss <= reference:
                return st.epoch * self.batches_per_epoch
        return math.inf


@dataclass
class HeadmodeResult:
    multi: HeadmodeSeries
    categorical: HeadmodeSeries
    reference_loss: float
    reference_epoch: int
    updates_multi: float
    updates_categorical: float

    @property
    def multi_head_faster(self) -> bool:
        return self.updates_multi < self.updates_categorical


def headmode_compare(config: RunConfig, seed: int | None = None) -> HeadmodeResult:
    """Train the multi-headed variant and the flattened categorical-input
    single-head variant with matched gradient-update budgets.

    The reference level is the multi-headed variant's epoch-loss at the
    configured reference epoch; both series are scored by the update count
    at which they first reach it. Loss values may go negative under the
    variance-weighted combiner; that is expected.
    """
    seed = config.seed if seed is None else seed
    hm = config.doc["headmode"]
    splits = prepare_splits(config, seed)
    train = splits.train

    def layer_cfg(max_epochs):
        base = config.train_config(seed=seed)
        # early stopping disabled: budgets must stay matched
        return TrainConfig(learning_rate=base.learning_rate,
                           batch_size=base.batch_size,
                           early_stop_min_delta=base.early_stop_min_delta,
                           patience=max_epochs + 1, max_epochs=max_epochs,
                           seed=seed, combiner=base.combiner,
                           naive_lambda=base.naive_lambda,
                           imbalance=base.imbalance, smote_k=base.smote_k)

    def train_variant(part: Dataset, label: str, max_epochs: int) -> HeadmodeSeries:
        cfg = layer_cfg(max_epochs)
        weights = training_weights(part.labels, cfg)
        spec = QaeLayerSpec(part.n_features, hm["hidden_dim"],
                            head_units(part.labels.n_heads))
        _, history = train_qae_layer(part.features, part.labels, weights, spec,
                                     cfg, make_rng(seed))
        batches = math.ceil(part.n_samples / min(cfg.batch_size, part.n_samples))
        return HeadmodeSeries(label=label, batches_per_epoch=batches,
                              epochs=history)

    multi = train_variant(train, "multi_head", hm["max_epochs"])
    budget = len(multi.epochs) * multi.batches_per_epoch
    flat = flatten_to_categorical(train)
    bs = min(config.train_config().batch_size, flat.n_samples)
    cat_epochs = max(1, math.ceil(budget / math.ceil(flat.n_samples / bs)))
    categorical = train_variant(flat, "categorical_input", cat_epochs)

    ref_epoch = min(hm["reference_epoch"], len(multi.epochs))
    reference = multi.epochs[ref_epoch - 1].loss
    return HeadmodeResult(multi=multi, categorical=categorical,
                          reference_loss=reference, reference_epoch=ref_epoch,
                          updates_multi=multi.updates_to(reference),
                          updates_categorical=categorical.updates_to(reference))
