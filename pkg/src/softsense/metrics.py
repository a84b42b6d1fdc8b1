"""Masked per-head evaluation: confusion counts, recall, precision, and
F-beta with the imbalance ratio as beta.

Zero-denominator metrics are reported as None (undefined), never silently
as 0; macro averages skip undefined heads and say how many were skipped.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError
from .heads import HeadLabels

BETA_POLICIES = ("per_head_imbalance_ratio", "fixed")


@dataclass
class ConfusionCounts:
    """Per-head counts over non-missing labels; positive = class 1."""

    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray

    @property
    def n_heads(self) -> int:
        return self.tp.shape[0]

    def support(self) -> np.ndarray:
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels: HeadLabels, hard_preds: np.ndarray) -> ConfusionCounts:
    preds = np.asarray(hard_preds)
    if preds.shape != labels.codes.shape:
        raise ShapeError(f"predictions {preds.shape} vs labels "
                         f"{labels.codes.shape}")
    obs = labels.observed()
    pos = labels.codes == 1
    pred_pos = preds == 1
    tp = (obs & pos & pred_pos).sum(axis=0).astype(np.int64)
    fp = (obs & ~pos & pred_pos).sum(axis=0).astype(np.int64)
    tn = (obs & ~pos & ~pred_pos).sum(axis=0).astype(np.int64)
    fn = (obs & pos & ~pred_pos).sum(axis=0).astype(np.int64)
    return ConfusionCounts(tp, fp, tn, fn)


def recall_precision(counts: ConfusionCounts):
    """Per-head (recall, precision) lists; None where the denominator is 0."""
    recalls, precisions = [], []
    for j in range(counts.n_heads):
        tp, fp, fn = int(counts.tp[j]), int(counts.fp[j]), int(counts.fn[j])
        recalls.append(tp / (tp + fn) if tp + fn else None)
        precisions.append(tp / (tp + fp) if tp + fp else None)
    return recalls, precisions


def f_beta(precision: float, recall: float, beta: float) -> float:
    """(1 + b^2) P R / (b^2 P + R); defined as 0 when P = R = 0."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1.0 + b2) * precision * recall / (b2 * precision + recall)


def imbalance_ratio(class_sizes) -> float:
    """max class size / min class size over the nonempty classes."""
    sizes = [s for s in class_sizes if s > 0]
    if not sizes:
        raise DataError("imbalance ratio undefined: all classes are empty")
    return max(sizes) / min(sizes)


@dataclass
class HeadMetrics:
    name: str
    support: int
    support_pos: int
    support_neg: int
    tp: int
    fp: int
    tn: int
    fn: int
    recall: float | None
    precision: float | None
    f_beta: float | None
    beta_used: float | None


@dataclass
class MetricsReport:
    heads: list
    macro_recall: float | None
    macro_precision: float | None
    macro_f_beta: float | None
    skipped_recall: int
    skipped_precision: int
    skipped_f_beta: int

    CSV_FIELDS = ("head", "support", "support_neg", "support_pos", "tp", "fp",
                  "tn", "fn", "recall", "precision", "f_beta", "beta")

    def csv_rows(self):
        rows = []
        for h in self.heads:
            rows.append([h.name, h.support, h.support_neg, h.support_pos,
                         h.tp, h.fp, h.tn, h.fn,
                         "" if h.recall is None else repr(h.recall),
                         "" if h.precision is None else repr(h.precision),
                         "" if h.f_beta is None else repr(h.f_beta),
                         "" if h.beta_used is None else repr(h.beta_used)])
        return rows

    def format_text(self) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.4f}"

        lines = [f"{'head':<8}{'support':>8}{'tp':>6}{'fp':>6}{'tn':>6}{'fn':>6}"
                 f"{'recall':>11}{'precision':>11}{'f_beta':>11}{'beta':>9}"]
        for h in self.heads:
            beta = "-" if h.beta_used is None else f"{h.beta_used:.2f}"
            lines.append(f"{h.name:<8}{h.support:>8}{h.tp:>6}{h.fp:>6}{h.tn:>6}"
                         f"{h.fn:>6}{fmt(h.recall):>11}{fmt(h.precision):>11}"
                         f"{fmt(h.f_beta):>11}{beta:>9}")
        lines.append(f"macro    recall={fmt(self.macro_recall)} "
                     f"precision={fmt(self.macro_precision)} "
                     f"f_beta={fmt(self.macro_f_beta)} "
                     f"(skipped {self.skipped_recall}/{self.skipped_precision}/"
                     f"{self.skipped_f_beta} undefined)")
        return "\n".join(lines)


def _macro(values):
    defined = [v for v in values if v is not None]
    skipped = len(values) - len(defined)
    mean = sum(defined) / len(defined) if defined else None
    return mean, skipped


def evaluate(labels: HeadLabels, hard_preds: np.ndarray,
             beta_policy: str = "per_head_imbalance_ratio",
             train_class_counts: np.ndarray | None = None,
             fixed_beta: float = 1.0,
             head_names: list | None = None) -> MetricsReport:
    """Assemble the per-head report.

    Under the default policy beta_j is the imbalance ratio of head j's
    TRAINING-split class sizes (train_class_counts, shape (n_heads, 2)), so
    the metric's weighting is fixed before evaluation; heads absent from
    the training counts fall back to beta = 1.
    """
    if beta_policy not in BETA_POLICIES:
        raise ValueError(f"beta_policy must be one of {BETA_POLICIES}")
    if beta_policy == "per_head_imbalance_ratio" and train_class_counts is None:
        raise ValueError("per_head_imbalance_ratio policy needs train_class_counts")
    counts = confusion(labels, hard_preds)
    recalls, precisions = recall_precision(counts)
    names = head_names or [f"Y{j + 1}" for j in range(labels.n_heads)]
    heads = []
    for j in range(labels.n_heads):
        support = int(counts.support()[j])
        if beta_policy == "fixed":
            beta = float(fixed_beta)
        else:
            sizes = train_class_counts[j]
            beta = imbalance_ratio(sizes) if max(sizes) > 0 else 1.0
        r, p = recalls[j], precisions[j]
        fb = f_beta(p, r, beta) if r is not None and p is not None else None
        heads.append(HeadMetrics(
            name=names[j], support=support,
            support_pos=int(counts.tp[j] + counts.fn[j]),
            support_neg=int(counts.tn[j] + counts.fp[j]),
            tp=int(counts.tp[j]), fp=int(counts.fp[j]),
            tn=int(counts.tn[j]), fn=int(counts.fn[j]),
            recall=r, precision=p, f_beta=fb,
            beta_used=beta if support else None))
    macro_r, skip_r = _macro([h.recall for h in heads])
    macro_p, skip_p = _macro([h.precision for h in heads])
    macro_f, skip_f = _macro([h.f_beta for h in heads])
    return MetricsReport(heads, macro_r, macro_p, macro_f, skip_r, skip_p, skip_f)
