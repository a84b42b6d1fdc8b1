"""Loss functions: reconstruction MSE, weighted per-head cross-entropy,
class-weight computation, and the two loss combiners.

Class weights follow w_j^t = N / (2 * n_heads * n_j^t) with N the number of
training rows. They are kept as exact rationals internally so the per-head
mass identity w_j^0 * n_j^0 == w_j^1 * n_j^1 holds exactly, and projected
to float64 for the loss kernels.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import backend
from .errors import ConfigError, ShapeError
from .heads import HeadLabels

EPS_CLIP = 1e-12


def _exp(x: float) -> float:
    # total exp: diverged log-variances must surface as inf losses, not
    # OverflowError, so the trainer's divergence check can report them
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def mse_loss(X: np.ndarray, X_hat: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean per-row squared reconstruction error and gradient w.r.t. X_hat."""
    if X.shape != X_hat.shape:
        raise ShapeError(f"X {X.shape} vs X_hat {X_hat.shape}")
    n = X.shape[0]
    diff = X_hat - X
    loss = float(np.sum(diff * diff) / n)
    grad = (2.0 / n) * diff
    return loss, grad


def binary_ce(y: int, y_hat: float, eps_clip: float = EPS_CLIP) -> float:
    """Cross-entropy of one binary prediction, natural log, clamped input."""
    p = min(max(y_hat, eps_clip), 1.0 - eps_clip)
    return -y * math.log(p) - (1 - y) * math.log(1.0 - p)


@dataclass
class ClassWeights:
    """Per-head, per-class loss multipliers.

    negative/positive are the float64 projections used by the kernels;
    exact_negative/exact_positive are the defining rationals (zero stands
    for an absent class, whose term never fires in the loss).
    """

    negative: np.ndarray
    positive: np.ndarray
    exact_negative: list = field(default_factory=list)
    exact_positive: list = field(default_factory=list)

    @property
    def n_heads(self) -> int:
        return self.negative.shape[0]

    def scaled(self, c: float) -> "ClassWeights":
        return ClassWeights(self.negative * c, self.positive * c,
                            [w * Fraction(c) for w in self.exact_negative],
                            [w * Fraction(c) for w in self.exact_positive])


def class_weights(labels: HeadLabels) -> ClassWeights:
    """Weights equalizing class mass per head: w_j^t = N / (2 n_heads n_j^t)."""
    if labels.n_samples == 0 or labels.n_heads == 0:
        raise ConfigError("cannot compute class weights for an empty label set")
    n = labels.n_samples
    n_heads = labels.n_heads
    counts = labels.class_counts()
    exact_neg, exact_pos = [], []
    for j in range(n_heads):
        n0, n1 = int(counts[j, 0]), int(counts[j, 1])
        exact_neg.append(Fraction(n, 2 * n_heads * n0) if n0 else Fraction(0))
        exact_pos.append(Fraction(n, 2 * n_heads * n1) if n1 else Fraction(0))
    return ClassWeights(np.array([float(w) for w in exact_neg]),
                        np.array([float(w) for w in exact_pos]),
                        exact_neg, exact_pos)


def unit_weights(n_heads: int) -> ClassWeights:
    """All-ones weights (no imbalance handling)."""
    ones = [Fraction(1)] * n_heads
    return ClassWeights(np.ones(n_heads), np.ones(n_heads), ones, list(ones))


def multihead_weighted_ce(labels: HeadLabels, probs: np.ndarray,
                          weights: ClassWeights) -> tuple[float, np.ndarray]:
    """Weighted cross-entropy summed over heads and observed samples, / N.

    probs holds one (negative, positive) probability pair per head. Missing
    entries contribute nothing; the gradient is zero there.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if probs.shape != (labels.n_samples, 2 * labels.n_heads):
        raise ShapeError(f"probs shape {probs.shape} does not match "
                         f"{labels.n_samples} samples x {labels.n_heads} head pairs")
    if weights.n_heads != labels.n_heads:
        raise ConfigError(f"weights cover {weights.n_heads} heads, "
                          f"labels have {labels.n_heads}")
    return backend.masked_pair_ce(probs, labels.codes, weights.negative,
                                  weights.positive, EPS_CLIP)


@dataclass
class VarianceParams:
    """Trainable task variances stored as log-variances s = log(sigma^2)."""

    s: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def s1(self) -> float:
        return float(self.s[0])

    @property
    def s2(self) -> float:
        return float(self.s[1])

    @property
    def sigma1_sq(self) -> float:
        return _exp(self.s1)

    @property
    def sigma2_sq(self) -> float:
        return _exp(self.s2)

    def weight_x(self) -> float:
        """dJ/dJ_x = 1 / (2 sigma1^2)."""
        return 0.5 * _exp(-self.s1)

    def weight_y(self) -> float:
        """dJ/dJ_y = 1 / sigma2^2."""
        return _exp(-self.s2)

    def copy(self) -> "VarianceParams":
        return VarianceParams(self.s.copy())


def combined_loss_variance(J_x: float, J_y: float,
                           v: VarianceParams) -> tuple[float, float, float]:
    """Variance-weighted combination of the two task losses.

    J = J_x / (2 sigma1^2) + J_y / sigma2^2 + log sigma1 + log sigma2 with
    sigma^2 = exp(s); returns (J, dJ/ds1, dJ/ds2). Note log sigma = s / 2.
    The combined value may go negative through the log terms.
    """
    e1 = _exp(-v.s1)
    e2 = _exp(-v.s2)
    J = 0.5 * e1 * J_x + e2 * J_y + 0.5 * v.s1 + 0.5 * v.s2
    grad_s1 = -0.5 * e1 * J_x + 0.5
    grad_s2 = -e2 * J_y + 0.5
    return J, grad_s1, grad_s2


def combined_loss_naive(J_x: float, J_y: float, lam: float) -> float:
    """Fixed-weight sum lam * J_x + (1 - lam) * J_y."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"naive combiner weight must be in [0, 1], got {lam}")
    return lam * J_x + (1.0 - lam) * J_y
