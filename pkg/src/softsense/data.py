"""Data pipeline: dataset container, CSV ingestion, standardization,
splitting, and the synthetic wafer-line generator used at desk scale.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, ShapeError, StratificationError
from .heads import MISSING, HeadLabels
from .nn import make_rng


@dataclass
class Dataset:
    """Feature matrix with row-aligned per-head labels."""

    features: np.ndarray
    labels: HeadLabels
    feature_names: list[str]
    head_names: list[str]

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got {self.features.shape}")
        if self.features.shape[0] != self.labels.n_samples:
            raise ShapeError(f"{self.features.shape[0]} feature rows vs "
                             f"{self.labels.n_samples} label rows")
        if len(self.feature_names) != self.features.shape[1]:
            raise ConfigError(f"{len(self.feature_names)} feature names for "
                              f"{self.features.shape[1]} columns")
        if len(self.head_names) != self.labels.n_heads:
            raise ConfigError(f"{len(self.head_names)} head names for "
                              f"{self.labels.n_heads} heads")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_heads(self) -> int:
        return self.labels.n_heads

    def subset(self, rows) -> "Dataset":
        return Dataset(self.features[rows], self.labels.subset(rows),
                       list(self.feature_names), list(self.head_names))


# ---------------------------------------------------------------------------
# standardization

@dataclass
class StandardizationStats:
    """Per-feature mean and population stddev fit on the training split."""

    mean: np.ndarray
    std: np.ndarray

    STD_FLOOR = 1e-12

    def divisor(self) -> np.ndarray:
        return np.maximum(self.std, self.STD_FLOOR)


def standardize_fit(train_features: np.ndarray) -> StandardizationStats:
    if train_features.shape[0] == 0:
        raise DataError("cannot fit standardization on an empty split")
    mean = train_features.mean(axis=0)
    std = train_features.std(axis=0)
    return StandardizationStats(mean=mean, std=std)


def standardize_apply(stats: StandardizationStats, features: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray((features - stats.mean) / stats.divisor())


def standardize_inverse(stats: StandardizationStats, standardized: np.ndarray) -> np.ndarray:
    return standardized * stats.divisor() + stats.mean


# ---------------------------------------------------------------------------
# CSV interface: UTF-8, comma-separated, header row, shortest round-trip
# floats, missing label = empty field.

@dataclass
class CsvSchema:
    """Column-role mapping: which header names are features, which are heads."""

    feature_columns: list[str]
    label_columns: list[str]


def load_csv(path: str, schema: CsvSchema) -> Dataset:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        known = set(schema.feature_columns) | set(schema.label_columns)
        for name in header:
            if name not in known:
                raise DataError(f"{path}: unknown column {name!r} not named "
                                "in the schema")
        col_index = {name: i for i, name in enumerate(header)}
        for name in schema.feature_columns + schema.label_columns:
            if name not in col_index:
                raise DataError(f"{path}: column {name!r} required by the "
                                "schema is missing")
        feat_idx = [col_index[c] for c in schema.feature_columns]
        lab_idx = [col_index[c] for c in schema.label_columns]
        feats, codes = [], []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(row)} fields, "
                                f"expected {len(header)}")
            frow = np.empty(len(feat_idx))
            for k, ci in enumerate(feat_idx):
                try:
                    frow[k] = float(row[ci])
                except ValueError:
                    raise DataError(
                        f"{path}: row {rownum}, column {header[ci]!r}: "
                        f"non-numeric feature value {row[ci]!r}") from None
            crow = np.empty(len(lab_idx), dtype=np.int8)
            for k, ci in enumerate(lab_idx):
                cell = row[ci].strip()
                if cell == "":
                    crow[k] = MISSING
                elif cell in ("0", "1"):
                    crow[k] = int(cell)
                else:
                    raise DataError(
                        f"{path}: row {rownum}, column {header[ci]!r}: "
                        f"label must be 0, 1 or empty, got {cell!r}")
            feats.append(frow)
            codes.append(crow)
    n_feat = len(schema.feature_columns)
    n_head = len(schema.label_columns)
    features = np.array(feats) if feats else np.empty((0, n_feat))
    code_arr = (np.array(codes, dtype=np.int8) if codes
                else np.empty((0, n_head), dtype=np.int8))
    try:
        labels = HeadLabels(code_arr)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
    return Dataset(features, labels, list(schema.feature_columns),
                   list(schema.label_columns))


def save_csv(ds: Dataset, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + ds.head_names)
        for i in range(ds.n_samples):
            row = [repr(float(v)) for v in ds.features[i]]
            for c in ds.labels.codes[i]:
                row.append("" if c == MISSING else str(int(c)))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# splitting

def _largest_remainder_counts(n: int, fractions) -> list[int]:
    ideal = [f * n for f in fractions]
    counts = [int(x) for x in ideal]
    short = n - sum(counts)
    remainders = sorted(range(len(ideal)), key=lambda i: (ideal[i] - counts[i], -i),
                        reverse=True)
    for i in remainders[:short]:
        counts[i] += 1
    return counts


def split(ds: Dataset, fractions: tuple[float, float, float], seed: int,
          stratify_head: int | None = None) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint covering (train, val, test) partition, seeded.

    With stratify_head set, rows are allocated within each label group of
    that head (negative / positive / missing) so class rates stay balanced
    across the parts.
    """
    if any(f < 0 for f in fractions):
        raise ConfigError(f"split fractions must be non-negative: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
    n = ds.n_samples
    rng = make_rng(seed)
    n_parts = sum(1 for f in fractions if f > 0)
    if stratify_head is None:
        perm = rng.permutation(n)
        groups = [perm]
    else:
        if not 0 <= stratify_head < ds.n_heads:
            raise ConfigError(f"stratify_head {stratify_head} out of range "
                              f"for {ds.n_heads} heads")
        col = ds.labels.codes[:, stratify_head]
        groups = []
        for value in (0, 1, MISSING):
            idx = np.nonzero(col == value)[0]
            if value != MISSING and 0 < idx.size < n_parts:
                raise StratificationError(
                    f"head {stratify_head} class {value} has {idx.size} "
                    f"sample(s), fewer than {n_parts} split parts")
            if idx.size:
                groups.append(idx[rng.permutation(idx.size)])
    part_indices = [[], [], []]
    for g in groups:
        counts = _largest_remainder_counts(g.size, fractions)
        start = 0
        for p, c in enumerate(counts):
            part_indices[p].append(g[start:start + c])
            start += c
    parts = []
    for chunks in part_indices:
        idx = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, dtype=int)
        parts.append(ds.subset(idx.astype(int)))
    return parts[0], parts[1], parts[2]


# ---------------------------------------------------------------------------
# synthetic generator

@dataclass
class SyntheticSpec:
    """Desk-scale stand-in for a wafer-line dataset: low-rank features and
    partially observed, imbalanced heads."""

    n_samples: int = 5000
    n_features: int = 64
    n_heads: int = 4
    latent_rank: int = 8
    imbalance_ratios: tuple = (2.0, 9.0, 50.0, 225.0)
    observation_rate: float = 0.6
    label_noise: float = 0.02
    feature_noise: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if self.latent_rank > self.n_features:
            raise ConfigError(f"latent_rank {self.latent_rank} exceeds "
                              f"n_features {self.n_features}")
        if len(self.imbalance_ratios) != self.n_heads:
            raise ConfigError(f"{len(self.imbalance_ratios)} imbalance ratios "
                              f"for {self.n_heads} heads")
        if any(r < 1.0 for r in self.imbalance_ratios):
            raise ConfigError("imbalance ratios must be >= 1")
        if not 0.0 < self.observation_rate <= 1.0:
            raise ConfigError(f"observation_rate must be in (0, 1], got "
                              f"{self.observation_rate}")
        if not 0.0 <= self.label_noise < 0.5:
            raise ConfigError(f"label_noise must be in [0, 0.5), got "
                              f"{self.label_noise}")


def default_fixture_spec() -> SyntheticSpec:
    """The default desk-scale fixture used by tests and the CLI."""
    return SyntheticSpec()


def generate_synthetic(spec: SyntheticSpec,
                       rng: np.random.Generator | None = None) -> Dataset:
    """Low-rank Gaussian features; per-head labels from a fixed random
    quadratic score of the latent factors, thresholded at the quantile that
    yields the requested imbalance ratio."""
    if rng is None:
        rng = make_rng(spec.seed)
    n, r, d = spec.n_samples, spec.latent_rank, spec.n_features
    latent = rng.standard_normal((n, r))
    mixing = rng.standard_normal((r, d))
    features = latent @ mixing
    if spec.feature_noise > 0:
        features = features + spec.feature_noise * rng.standard_normal((n, d))
    codes = np.full((n, spec.n_heads), MISSING, dtype=np.int8)
    hard = np.zeros((n, spec.n_heads), dtype=np.int8)
    for j, ratio in enumerate(spec.imbalance_ratios):
        n_pos = int(round(n / (1.0 + ratio)))
        if n_pos < 2 or n - n_pos < 2:
            raise ConfigError(
                f"head {j}: imbalance ratio {ratio} leaves {min(n_pos, n - n_pos)} "
                "minority sample(s); need at least 2")
        quad = rng.standard_normal((r, r))
        scores = np.einsum("ni,ij,nj->n", latent, quad, latent)
        top = np.argsort(scores, kind="stable")[n - n_pos:]
        hard[top, j] = 1
        if spec.label_noise > 0:
            flips = rng.uniform(size=n) < spec.label_noise
            hard[flips, j] = 1 - hard[flips, j]
    observed = rng.uniform(size=(n, spec.n_heads)) < spec.observation_rate
    empty = ~observed.any(axis=1)
    if empty.any():
        forced = rng.integers(0, spec.n_heads, size=int(empty.sum()))
        observed[np.nonzero(empty)[0], forced] = True
    codes[observed] = hard[observed]
    feature_names = [f"x{k:03d}" for k in range(d)]
    head_names = [f"Y{j + 1}" for j in range(spec.n_heads)]
    return Dataset(features, HeadLabels(codes), feature_names, head_names)


def flatten_to_categorical(ds: Dataset) -> Dataset:
    """Single-head view: one row per observed (sample, head) pair, with the
    head identity appended as one-hot indicator features."""
    rows, heads = np.nonzero(ds.labels.observed())
    m = rows.size
    onehot = np.zeros((m, ds.n_heads))
    onehot[np.arange(m), heads] = 1.0
    features = np.hstack([ds.features[rows], onehot])
    codes = ds.labels.codes[rows, heads].reshape(-1, 1)
    feature_names = list(ds.feature_names) + [f"is_{h}" for h in ds.head_names]
    return Dataset(features, HeadLabels(codes), feature_names, ["flat"])
