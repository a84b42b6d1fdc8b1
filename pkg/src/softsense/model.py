"""Multi-headed quality-driven autoencoder layers, greedy stacking, the
final per-head classifier, baseline models, prediction, and parameter
accounting.

A quality-driven layer is an encoder plus two decoders: decoder_x
reconstructs the layer input, decoder_y predicts all head labels from the
hidden code. Layers are pretrained greedily, each on the previous layer's
hidden output against the same original labels; a classifier on the final
hidden representation produces the predictions that are actually used.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import StandardizationStats
from .errors import ConfigError, NumericDivergenceError, ShapeError
from .heads import HeadLabels, head_units, pair_softmax, pair_softmax_backward, positive_probability
from .losses import (ClassWeights, VarianceParams, class_weights,
                     combined_loss_naive, combined_loss_variance, mse_loss,
                     multihead_weighted_ce, unit_weights)
from .nn import AdamState, DenseLayer, adam_step, dense_backward, dense_forward, init_dense

log = logging.getLogger(__name__)

COMBINERS = ("variance_weighted", "naive")
IMBALANCE_METHODS = ("weighted_class", "smote", "none")

ENCODER_ACTIVATION = "relu"
DECODER_X_ACTIVATION = "linear"


@dataclass
class QaeLayerSpec:
    """Dimensions of one quality-driven layer."""

    in_dim: int
    hidden_dim: int
    head_units: int

    def __post_init__(self):
        if min(self.in_dim, self.hidden_dim, self.head_units) < 1:
            raise ConfigError(f"layer dims must be >= 1: {self}")
        if self.head_units % 2:
            raise ConfigError(f"head_units must be even (two units per "
                              f"measurement step), got {self.head_units}")


@dataclass
class QaeLayer:
    """Encoder / input-decoder / head-decoder triple with its task variances.

    decoder_y is None for plain (reconstruction-only) layers.
    """

    encoder: DenseLayer
    decoder_x: DenseLayer
    decoder_y: DenseLayer | None
    variance: VarianceParams = field(default_factory=VarianceParams)

    def param_count(self) -> int:
        total = self.encoder.param_count() + self.decoder_x.param_count()
        if self.decoder_y is not None:
            total += self.decoder_y.param_count()
        return total


@dataclass
class StackedModel:
    """Trained greedy stack plus the final classifier.

    classifier is a list of dense layers: zero or more relu hidden layers
    followed by the linear head-logit layer. predict/encode assume inputs
    already standardized with the stored stats; no detection is attempted.
    """

    layers: list
    classifier: list
    standardization: StandardizationStats | None = None
    head_names: list | None = None

    @property
    def input_dim(self) -> int:
        if self.layers:
            return self.layers[0].encoder.in_dim
        return self.classifier[0].in_dim

    @property
    def latent_dim(self) -> int:
        if self.layers:
            return self.layers[-1].encoder.out_dim
        return self.classifier[0].in_dim

    @property
    def n_steps(self) -> int:
        return self.classifier[-1].out_dim // 2


@dataclass
class TrainConfig:
    """Optimizer and schedule settings shared by all training stages."""

    learning_rate: float = 1e-3
    batch_size: int = 512
    early_stop_min_delta: float = 1e-5
    patience: int = 30
    max_epochs: int = 500
    seed: int = 0
    combiner: str = "variance_weighted"
    naive_lambda: float = 0.5
    imbalance: str = "weighted_class"
    smote_k: int = 5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.early_stop_min_delta <= 0:
            raise ConfigError(f"early_stop_min_delta must be positive, got "
                              f"{self.early_stop_min_delta}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.combiner not in COMBINERS:
            raise ConfigError(f"combiner must be one of {COMBINERS}, got "
                              f"{self.combiner!r}")
        if not 0.0 <= self.naive_lambda <= 1.0:
            raise ConfigError(f"naive_lambda must be in [0, 1], got {self.naive_lambda}")
        if self.imbalance not in IMBALANCE_METHODS:
            raise ConfigError(f"imbalance must be one of {IMBALANCE_METHODS}, "
                              f"got {self.imbalance!r}")
        if self.smote_k < 1:
            raise ConfigError(f"smote_k must be >= 1, got {self.smote_k}")


@dataclass
class EpochStats:
    """Full-training-set losses at the end of one epoch."""

    epoch: int
    loss: float
    loss_x: float
    loss_y: float
    sigma1_sq: float
    sigma2_sq: float


@dataclass
class StageHistory:
    stage: str
    epochs: list


def training_weights(labels: HeadLabels, cfg: TrainConfig) -> ClassWeights:
    """Class weights implied by the configured imbalance method."""
    if cfg.imbalance == "weighted_class":
        return class_weights(labels)
    return unit_weights(labels.n_heads)


# ---------------------------------------------------------------------------
# single-layer forward / backward

def qae_forward(layer: QaeLayer, X: np.ndarray):
    """(hidden code, input reconstruction, head probability pairs)."""
    h, _ = dense_forward(layer.encoder, X)
    x_hat, _ = dense_forward(layer.decoder_x, h)
    if layer.decoder_y is None:
        return h, x_hat, None
    logits, _ = dense_forward(layer.decoder_y, h)
    return h, x_hat, pair_softmax(logits)


def _qae_losses(layer: QaeLayer, X, labels, weights, cfg: TrainConfig):
    """Forward pass returning (J, J_x, J_y) on the configured combiner."""
    _, x_hat, y_hat = qae_forward(layer, X)
    J_x, _ = mse_loss(X, x_hat)
    if layer.decoder_y is None:
        return J_x, J_x, math.nan
    J_y, _ = multihead_weighted_ce(labels, y_hat, weights)
    if cfg.combiner == "variance_weighted":
        J, _, _ = combined_loss_variance(J_x, J_y, layer.variance)
    else:
        J = combined_loss_naive(J_x, J_y, cfg.naive_lambda)
    return J, J_x, J_y


def qae_batch_gradients(layer: QaeLayer, X, labels, weights, cfg: TrainConfig):
    """One joint forward/backward pass.

    Returns (J, J_x, J_y, grads) where grads maps parameter names
    ('encoder.w', 'encoder.b', 'decoder_x.w', ..., 'variance.s') to arrays.
    """
    h, ecache = dense_forward(layer.encoder, X)
    x_hat, xcache = dense_forward(layer.decoder_x, h)
    J_x, dx_hat = mse_loss(X, x_hat)

    if layer.decoder_y is not None:
        logits, ycache = dense_forward(layer.decoder_y, h)
        probs = pair_softmax(logits)
        J_y, dprobs = multihead_weighted_ce(labels, probs, weights)
        if cfg.combiner == "variance_weighted":
            J, gs1, gs2 = combined_loss_variance(J_x, J_y, layer.variance)
            ax, ay = layer.variance.weight_x(), layer.variance.weight_y()
        else:
            J = combined_loss_naive(J_x, J_y, cfg.naive_lambda)
            ax, ay = cfg.naive_lambda, 1.0 - cfg.naive_lambda
            gs1 = gs2 = 0.0
    else:
        J, J_y = J_x, math.nan
        ax, ay, gs1, gs2 = 1.0, 0.0, 0.0, 0.0

    grads = {}
    gw_x, gb_x, dh = dense_backward(layer.decoder_x, xcache, ax * dx_hat)
    grads["decoder_x.w"], grads["decoder_x.b"] = gw_x, gb_x
    if layer.decoder_y is not None:
        dlogits = pair_softmax_backward(probs, ay * dprobs)
        gw_y, gb_y, dh_y = dense_backward(layer.decoder_y, ycache, dlogits)
        grads["decoder_y.w"], grads["decoder_y.b"] = gw_y, gb_y
        dh = dh + dh_y
        if cfg.combiner == "variance_weighted":
            grads["variance.s"] = np.array([gs1, gs2])
    gw_e, gb_e, _ = dense_backward(layer.encoder, ecache, dh)
    grads["encoder.w"], grads["encoder.b"] = gw_e, gb_e
    return J, J_x, J_y, grads


def _layer_params(layer: QaeLayer, cfg: TrainConfig) -> dict:
    params = {"encoder.w": layer.encoder.weights, "encoder.b": layer.encoder.bias,
              "decoder_x.w": layer.decoder_x.weights,
              "decoder_x.b": layer.decoder_x.bias}
    if layer.decoder_y is not None:
        params["decoder_y.w"] = layer.decoder_y.weights
        params["decoder_y.b"] = layer.decoder_y.bias
        if cfg.combiner == "variance_weighted":
            params["variance.s"] = layer.variance.s
    return params


# ---------------------------------------------------------------------------
# training loops

def _minibatch_loop(n_samples: int, cfg: TrainConfig, rng, step_fn, eval_fn):
    """Shared epoch loop: shuffled minibatches, full-set epoch losses,
    early stopping on loss improvement, divergence detection."""
    bs = min(cfg.batch_size, max(n_samples, 1))
    history = []
    prev = None
    streak = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n_samples)
        for bidx, start in enumerate(range(0, n_samples, bs)):
            batch = order[start:start + bs]
            J = step_fn(batch)
            if not math.isfinite(J):
                raise NumericDivergenceError("training loss is not finite",
                                             epoch=epoch, batch=bidx)
        stats = eval_fn(epoch)
        history.append(stats)
        if prev is not None:
            streak = streak + 1 if prev - stats.loss < cfg.early_stop_min_delta else 0
        prev = stats.loss
        if streak >= cfg.patience:
            break
    return history


def train_qae_layer(X: np.ndarray, labels: HeadLabels | None,
                    weights: ClassWeights | None, spec: QaeLayerSpec,
                    cfg: TrainConfig, rng,
                    reconstruction_only: bool = False):
    """Train one layer with minibatch Adam on the configured combined loss.

    With reconstruction_only the head decoder is omitted and the loss is
    the plain reconstruction error (labels and weights are ignored).
    Returns (layer, per-epoch EpochStats list).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ConfigError("cannot train on an empty feature matrix")
    if X.shape[1] != spec.in_dim:
        raise ShapeError(f"X has {X.shape[1]} columns, spec expects {spec.in_dim}")
    encoder = init_dense(rng, spec.in_dim, spec.hidden_dim, ENCODER_ACTIVATION)
    decoder_x = init_dense(rng, spec.hidden_dim, spec.in_dim, DECODER_X_ACTIVATION)
    decoder_y = None
    if not reconstruction_only:
        if labels is None or weights is None:
            raise ConfigError("labels and weights are required unless "
                              "reconstruction_only is set")
        if labels.n_samples != X.shape[0]:
            raise ShapeError(f"{labels.n_samples} label rows vs {X.shape[0]} "
                             "feature rows")
        if head_units(labels.n_heads) != spec.head_units:
            raise ConfigError(f"spec.head_units {spec.head_units} != "
                              f"2 * {labels.n_heads} heads")
        decoder_y = init_dense(rng, spec.hidden_dim, spec.head_units, "linear")
    layer = QaeLayer(encoder, decoder_x, decoder_y)

    params = _layer_params(layer, cfg)
    states = {name: AdamState.for_param(p, learning_rate=cfg.learning_rate)
              for name, p in params.items()}

    def step(batch):
        Xb = X[batch]
        lb = labels.subset(batch) if decoder_y is not None else None
        J, _, _, grads = qae_batch_gradients(layer, Xb, lb, weights, cfg)
        for name, grad in grads.items():
            adam_step(states[name], params[name], grad)
        return J

    def evaluate(epoch):
        J, J_x, J_y = _qae_losses(layer, X, labels, weights, cfg)
        if decoder_y is not None and cfg.combiner == "variance_weighted":
            s1sq, s2sq = layer.variance.sigma1_sq, layer.variance.sigma2_sq
        else:
            s1sq = s2sq = math.nan
        return EpochStats(epoch, J, J_x, J_y, s1sq, s2sq)

    history = _minibatch_loop(X.shape[0], cfg, rng, step, evaluate)
    return layer, history


def _train_head_layers(X: np.ndarray, labels: HeadLabels, weights: ClassWeights,
                       hidden_dims: list, cfg: TrainConfig, rng):
    """Train relu hidden layers plus a linear head-logit layer end to end on
    the weighted per-head cross-entropy. Returns (layers, history)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if labels.n_samples != X.shape[0]:
        raise ShapeError(f"{labels.n_samples} label rows vs {X.shape[0]} feature rows")
    dims = [X.shape[1]] + list(hidden_dims)
    layers = [init_dense(rng, dims[i], dims[i + 1], "relu")
              for i in range(len(hidden_dims))]
    layers.append(init_dense(rng, dims[-1], head_units(labels.n_heads), "linear"))

    param_list = []
    state_list = []
    for lyr in layers:
        for arr in (lyr.weights, lyr.bias):
            param_list.append(arr)
            state_list.append(AdamState.for_param(arr, learning_rate=cfg.learning_rate))

    def forward(Z):
        caches = []
        for lyr in layers:
            Z, cache = dense_forward(lyr, Z)
            caches.append(cache)
        return pair_softmax(Z), caches

    def step(batch):
        Xb = X[batch]
        lb = labels.subset(batch)
        probs, caches = forward(Xb)
        J_y, dprobs = multihead_weighted_ce(lb, probs, weights)
        upstream = pair_softmax_backward(probs, dprobs)
        k = len(param_list) - 2
        for lyr, cache in zip(reversed(layers), reversed(caches)):
            gw, gb, upstream = dense_backward(lyr, cache, upstream)
            adam_step(state_list[k], param_list[k], gw)
            adam_step(state_list[k + 1], param_list[k + 1], gb)
            k -= 2
        return J_y

    def evaluate(epoch):
        probs, _ = forward(X)
        J_y, _ = multihead_weighted_ce(labels, probs, weights)
        return EpochStats(epoch, J_y, math.nan, J_y, math.nan, math.nan)

    history = _minibatch_loop(X.shape[0], cfg, rng, step, evaluate)
    return layers, history


def train_classifier(Xn: np.ndarray, labels: HeadLabels, weights: ClassWeights,
                     cfg: TrainConfig, rng):
    """Single linear-logit layer with paired-softmax heads on the final
    latent representation. Returns (DenseLayer, history)."""
    layers, history = _train_head_layers(Xn, labels, weights, [], cfg, rng)
    return layers[0], history


def stack_train(X0: np.ndarray, labels: HeadLabels, specs: list,
                cfg: TrainConfig, rng, classifier_hidden_dims: list = (),
                reconstruction_only: bool = False, weights: ClassWeights | None = None):
    """Greedy layer-wise training followed by the final classifier.

    Each layer trains on the previous layer's hidden output against the
    same original labels; earlier layers are never revisited. Returns
    (StackedModel, list of StageHistory).
    """
    X0 = np.ascontiguousarray(X0, dtype=np.float64)
    if not specs:
        raise ConfigError("at least one layer spec is required")
    expected = X0.shape[1]
    units = head_units(labels.n_heads)
    for k, spec in enumerate(specs):
        if spec.in_dim != expected:
            raise ConfigError(f"layer {k + 1} in_dim {spec.in_dim} does not "
                              f"chain from previous width {expected}")
        if spec.head_units != units:
            raise ConfigError(f"layer {k + 1} head_units {spec.head_units} != "
                              f"2 * {labels.n_heads} heads")
        expected = spec.hidden_dim
    if weights is None:
        weights = training_weights(labels, cfg)

    histories = []
    layers = []
    X = X0
    for k, spec in enumerate(specs):
        layer, history = train_qae_layer(X, labels, weights, spec, cfg, rng,
                                         reconstruction_only=reconstruction_only)
        layers.append(layer)
        histories.append(StageHistory(f"layer{k + 1}", history))
        X, _ = dense_forward(layer.encoder, X)
        log.debug("stage layer%d done: %d epochs", k + 1, len(history))
    cls_layers, cls_history = _train_head_layers(X, labels, weights,
                                                 list(classifier_hidden_dims), cfg, rng)
    histories.append(StageHistory("classifier", cls_history))
    model = StackedModel(layers=layers, classifier=cls_layers)
    return model, histories


# ---------------------------------------------------------------------------
# inference

def encode(model: StackedModel, X: np.ndarray) -> np.ndarray:
    """Final hidden representation (the classifier's input space)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != model.input_dim:
        raise ShapeError(f"input has {X.shape[1]} columns, model expects "
                         f"{model.input_dim}")
    for layer in model.layers:
        X, _ = dense_forward(layer.encoder, X)
    return X


def predict(model: StackedModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-step positive probabilities and hard labels.

    X must already be standardized with the model's stored stats. Hard
    label is positive iff the positive probability is >= 0.5 (ties go to
    positive: missing a failure costs more than a false alarm).
    """
    Z = encode(model, X)
    for lyr in model.classifier[:-1]:
        Z, _ = dense_forward(lyr, Z)
    logits, _ = dense_forward(model.classifier[-1], Z)
    probs = positive_probability(pair_softmax(logits))
    hard = (probs >= 0.5).astype(np.int8)
    return probs, hard


# ---------------------------------------------------------------------------
# parameter accounting

@dataclass
class LayerParamCount:
    name: str
    encoder: int
    decoder_x: int
    decoder_y: int

    @property
    def subtotal(self) -> int:
        return self.encoder + self.decoder_x + self.decoder_y


@dataclass
class ParamCountReport:
    layers: list
    classifier: int
    total: int
    plain_ae_subtotal: int
    head_overhead: int

    @property
    def overhead_ratio(self) -> float:
        return self.head_overhead / self.plain_ae_subtotal


def count_parameters(input_dim: int, hidden_dims: list, head_units_count: int) -> ParamCountReport:
    """Exact per-component parameter counts for a stacked model.

    Per layer: encoder (in+1)*hidden, decoder_x (hidden+1)*in, decoder_y
    (hidden+1)*head_units; classifier (last_hidden+1)*head_units. The plain
    subtotal covers encoders and decoder_x only; the overhead ratio is the
    head machinery's share of it.
    """
    if not hidden_dims:
        raise ConfigError("hidden_dims must not be empty")
    if input_dim < 1 or min(hidden_dims) < 1 or head_units_count < 1:
        raise ConfigError("all dimensions must be >= 1")
    rows = []
    prev = input_dim
    for k, h in enumerate(hidden_dims, start=1):
        rows.append(LayerParamCount(
            name=f"Autoencoder_{k}",
            encoder=(prev + 1) * h,
            decoder_x=(h + 1) * prev,
            decoder_y=(h + 1) * head_units_count,
        ))
        prev = h
    classifier = (prev + 1) * head_units_count
    total = sum(r.subtotal for r in rows) + classifier
    plain = sum(r.encoder + r.decoder_x for r in rows)
    overhead = sum(r.decoder_y for r in rows) + classifier
    return ParamCountReport(rows, classifier, total, plain, overhead)


def model_param_count(model: StackedModel) -> int:
    """Direct enumeration of every weight and bias in an instantiated model."""
    total = 0
    for layer in model.layers:
        parts = [layer.encoder, layer.decoder_x]
        if layer.decoder_y is not None:
            parts.append(layer.decoder_y)
        for lyr in parts:
            total += lyr.weights.size + lyr.bias.size
    for lyr in model.classifier:
        total += lyr.weights.size + lyr.bias.size
    return total


# ---------------------------------------------------------------------------
# model zoo

MODEL_KINDS = ("lr", "nn", "qae+lr", "qae+nn", "sqae+lr", "sqae+nn",
               "sae+lr", "sae+nn")
_KIND_ALIASES = {"logistic": "lr", "mlp": "nn",
                 "plain_stacked_ae+logistic": "sae+lr",
                 "plain_stacked_ae+mlp": "sae+nn"}


@dataclass
class ModelSpec:
    """Architecture knobs shared by the model zoo."""

    hidden_dims: list = field(default_factory=lambda: [32, 16])
    nn_hidden_dims: list = field(default_factory=lambda: [100, 50])

    def __post_init__(self):
        if not self.hidden_dims:
            raise ConfigError("hidden_dims must not be empty")


def canonical_kind(kind: str) -> str:
    k = kind.strip().lower()
    k = _KIND_ALIASES.get(k, k)
    if k not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of "
                          f"{MODEL_KINDS} or aliases {tuple(_KIND_ALIASES)}")
    return k


def train_model(kind: str, X: np.ndarray, labels: HeadLabels, spec: ModelSpec,
                cfg: TrainConfig, rng, weights: ClassWeights | None = None):
    """Train one model of the comparison zoo on (already standardized) X.

    lr / nn: classifier on raw features. qae: one quality-driven layer;
    sqae: the full greedy stack; sae: reconstruction-only pretraining.
    The +lr / +nn suffix picks the classifier on the latent code.
    Returns (StackedModel, list of StageHistory).
    """
    k = canonical_kind(kind)
    if weights is None:
        weights = training_weights(labels, cfg)
    cls_hidden = [] if k.endswith("lr") or k == "lr" else list(spec.nn_hidden_dims)
    if k in ("lr", "nn"):
        layers, history = _train_head_layers(X, labels, weights, cls_hidden, cfg, rng)
        return StackedModel(layers=[], classifier=layers), [StageHistory("classifier", history)]
    hidden = spec.hidden_dims[:1] if k.startswith("qae") else list(spec.hidden_dims)
    units = head_units(labels.n_heads)
    layer_specs = []
    prev = X.shape[1]
    for h in hidden:
        layer_specs.append(QaeLayerSpec(prev, h, units))
        prev = h
    return stack_train(X, labels, layer_specs, cfg, rng,
                       classifier_hidden_dims=cls_hidden,
                       reconstruction_only=k.startswith("sae"),
                       weights=weights)


def train_baseline(kind: str, X: np.ndarray, labels: HeadLabels,
                   weights: ClassWeights | None, cfg: TrainConfig, rng):
    """Baselines: 'logistic', 'mlp', 'plain_stacked_ae+logistic/mlp'."""
    return train_model(kind, X, labels, ModelSpec(), cfg, rng, weights=weights)
