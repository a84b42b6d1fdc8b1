"""Per-head ternary labels and the two-unit head encoding.

Each measurement step owns two output units (negative, positive); head
logits are normalized pairwise by a two-way softmax so every pair forms a
probability distribution. Labels are per (sample, head) ternary codes:
0 negative, 1 positive, -1 not measured.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DataError, ShapeError

MISSING = -1


@dataclass
class HeadLabels:
    """Ternary label codes, shape (n_samples, n_heads), int8 in {-1, 0, 1}."""

    codes: np.ndarray

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int8)
        if codes.ndim != 2:
            raise ShapeError(f"label codes must be 2-D, got shape {codes.shape}")
        bad = ~np.isin(codes, (-1, 0, 1))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataError(f"label code {codes[i, j]} at sample {i}, head {j} "
                            "is not one of -1/0/1")
        if codes.shape[0] and not (codes >= 0).any(axis=1).all():
            row = int(np.argmin((codes >= 0).any(axis=1)))
            raise DataError(f"sample {row} has no observed head")
        self.codes = codes

    @property
    def n_samples(self) -> int:
        return self.codes.shape[0]

    @property
    def n_heads(self) -> int:
        return self.codes.shape[1]

    def observed(self) -> np.ndarray:
        """Boolean mask of non-missing entries."""
        return self.codes >= 0

    def observed_per_head(self) -> np.ndarray:
        """n_j: observed sample count per head."""
        return (self.codes >= 0).sum(axis=0)

    def class_counts(self) -> np.ndarray:
        """(n_heads, 2) counts of negative and positive labels per head."""
        out = np.zeros((self.n_heads, 2), dtype=np.int64)
        out[:, 0] = (self.codes == 0).sum(axis=0)
        out[:, 1] = (self.codes == 1).sum(axis=0)
        return out

    def subset(self, rows) -> "HeadLabels":
        return HeadLabels(self.codes[rows])


def head_units(n_steps: int) -> int:
    """Two output units per measurement step."""
    return 2 * n_steps


def pair_targets(labels: HeadLabels) -> tuple[np.ndarray, np.ndarray]:
    """Complementary (y0, y1) indicator arrays, zero at missing entries."""
    y0 = (labels.codes == 0).astype(np.float64)
    y1 = (labels.codes == 1).astype(np.float64)
    return y0, y1


def pair_softmax(logits: np.ndarray) -> np.ndarray:
    """Normalize each consecutive (negative, positive) logit pair."""
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] % 2:
        raise ShapeError(f"head logits must be (n, 2*n_steps), got {logits.shape}")
    return backend.pair_softmax_fwd(logits)


def pair_softmax_backward(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """Chain upstream prob-space gradients back to logit space."""
    if probs.shape != dprobs.shape:
        raise ShapeError(f"probs {probs.shape} vs dprobs {dprobs.shape}")
    return backend.pair_softmax_bwd(np.ascontiguousarray(probs),
                                    np.ascontiguousarray(dprobs))


def positive_probability(pair_probs: np.ndarray) -> np.ndarray:
    """Positive-unit probability per measurement step, shape (n, n_steps)."""
    return np.ascontiguousarray(pair_probs[:, 1::2])
