"""SMOTE oversampling: synthetic minority samples by interpolating between
Euclidean nearest minority neighbors. Heads are separate binary tasks, so
rebalancing happens per head on that head's observed subset.
"""

import logging

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .heads import MISSING, HeadLabels

log = logging.getLogger(__name__)

DEFAULT_K = 5


def _nearest_minority_neighbors(minority: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest neighbors (self excluded) per minority row."""
    sq = np.sum(minority * minority, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (minority @ minority.T)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote_oversample(features: np.ndarray, minority_mask: np.ndarray, k: int,
                     target_count: int, rng: np.random.Generator) -> np.ndarray:
    """Synthesize target_count rows, each x_i + u * (x_nn - x_i).

    x_i cycles over the minority rows, x_nn is one of its k nearest minority
    neighbors, u ~ Uniform(0, 1) from rng. k is capped at minority_count - 1.
    """
    if k < 1:
        raise ConfigError(f"SMOTE neighborhood size must be >= 1, got {k}")
    if target_count < 0:
        raise ConfigError(f"target_count must be >= 0, got {target_count}")
    minority = np.ascontiguousarray(features[minority_mask], dtype=np.float64)
    m = minority.shape[0]
    if m < 2:
        raise InsufficientDataError(
            f"SMOTE needs at least 2 minority samples, got {m}")
    if target_count == 0:
        return np.empty((0, features.shape[1]))
    k_eff = min(k, m - 1)
    neighbors = _nearest_minority_neighbors(minority, k_eff)
    bases = np.arange(target_count) % m
    picks = rng.integers(0, k_eff, size=target_count)
    u = rng.uniform(0.0, 1.0, size=target_count)
    anchors = minority[bases]
    partners = minority[neighbors[bases, picks]]
    return anchors + u[:, None] * (partners - anchors)


def smote_rebalance(features: np.ndarray, labels: HeadLabels, k: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, HeadLabels]:
    """Oversample each head's minority class to parity with its majority.

    Synthetic rows carry a label only at the head they were generated for;
    all other heads are marked missing. Heads already balanced contribute
    nothing; heads whose minority has fewer than 2 observed samples are
    skipped with a warning.
    """
    extra_rows = []
    extra_codes = []
    counts = labels.class_counts()
    for j in range(labels.n_heads):
        n0, n1 = int(counts[j, 0]), int(counts[j, 1])
        if n0 == n1:
            continue
        minority_class = 0 if n0 < n1 else 1
        need = abs(n0 - n1)
        minority_mask = labels.codes[:, j] == minority_class
        if minority_mask.sum() < 2:
            log.warning("head %d: minority class %d has %d sample(s); "
                        "skipping SMOTE for this head", j, minority_class,
                        int(minority_mask.sum()))
            continue
        synth = smote_oversample(features, minority_mask, k, need, rng)
        codes = np.full((need, labels.n_heads), MISSING, dtype=np.int8)
        codes[:, j] = minority_class
        extra_rows.append(synth)
        extra_codes.append(codes)
    if not extra_rows:
        return features.copy(), HeadLabels(labels.codes.copy())
    aug_features = np.vstack([features] + extra_rows)
    aug_codes = np.vstack([labels.codes] + extra_codes)
    return aug_features, HeadLabels(aug_codes)
