"""Dense-network substrate: matrices, layers, activations, Adam, seeded RNG.

The universal numeric carrier is a C-contiguous 2-D float64 ndarray.
Weight convention: a layer maps X (n, in_dim) to activation(X @ W.T + b)
with W of shape (out_dim, in_dim).
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError, ShapeError

Matrix = np.ndarray

ACTIVATIONS = ("linear", "relu", "sigmoid")
_ACT_CODES = {"linear": backend.ACT_LINEAR,
              "relu": backend.ACT_RELU,
              "sigmoid": backend.ACT_SIGMOID}


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; identical seeds give identical sequences."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(x) -> Matrix:
    """Coerce to a C-contiguous 2-D float64 array."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {a.shape}")
    return a


def activation_apply(kind: str, pre: Matrix) -> Matrix:
    """Elementwise activation; sigmoid uses the stable branch form."""
    pre = as_matrix(pre)
    if kind == "linear":
        return pre.copy()
    if kind == "relu":
        return backend.relu_fwd(pre)
    if kind == "sigmoid":
        return backend.sigmoid_fwd(pre)
    raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activation_backward(kind: str, pre: Matrix, out: Matrix, upstream: Matrix) -> Matrix:
    if kind not in _ACT_CODES:
        raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    return backend.act_bwd(_ACT_CODES[kind], pre, out, upstream)


@dataclass
class DenseLayer:
    """Affine map plus elementwise activation.

    weights: (out_dim, in_dim); bias: (out_dim,).
    """

    weights: Matrix
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weights must be 2-D and bias 1-D")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != out_dim {self.weights.shape[0]}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def param_count(self) -> int:
        return (self.in_dim + 1) * self.out_dim

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


def init_dense(rng: np.random.Generator, in_dim: int, out_dim: int,
               activation: str) -> DenseLayer:
    """Glorot-uniform weights from the seeded rng, zero bias."""
    if in_dim < 1 or out_dim < 1:
        raise ConfigError(f"layer dims must be >= 1, got ({in_dim}, {out_dim})")
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    w = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayer(np.ascontiguousarray(w), np.zeros(out_dim), activation)


@dataclass
class ForwardCache:
    """Retained intermediates for the backward pass."""

    x: Matrix
    pre: Matrix
    out: Matrix


def dense_forward(layer: DenseLayer, X: Matrix) -> tuple[Matrix, ForwardCache]:
    X = as_matrix(X)
    if X.shape[1] != layer.in_dim:
        raise ShapeError(
            f"input has {X.shape[1]} columns but layer expects {layer.in_dim} "
            f"(X {X.shape} vs W {layer.weights.shape})")
    pre = X @ layer.weights.T + layer.bias
    pre = np.ascontiguousarray(pre)
    out = activation_apply(layer.activation, pre)
    return out, ForwardCache(x=X, pre=pre, out=out)


def dense_backward(layer: DenseLayer, cache: ForwardCache,
                   upstream: Matrix) -> tuple[Matrix, np.ndarray, Matrix]:
    """Analytic gradients: (d_weights, d_bias, d_input)."""
    upstream = as_matrix(upstream)
    if upstream.shape != cache.out.shape:
        raise ShapeError(
            f"upstream shape {upstream.shape} != forward output {cache.out.shape}")
    if cache.x.shape[1] != layer.in_dim or cache.pre.shape[1] != layer.out_dim:
        raise ShapeError("forward cache does not belong to this layer")
    dpre = activation_backward(layer.activation, cache.pre, cache.out, upstream)
    grad_w = dpre.T @ cache.x
    grad_b = dpre.sum(axis=0)
    grad_x = dpre @ layer.weights
    return grad_w, grad_b, grad_x


@dataclass
class AdamState:
    """Per-array Adam accumulators; step counter starts at 0."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, learning_rate: float = 1e-3,
                  beta1: float = 0.9, beta2: float = 0.999,
                  epsilon: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(param, dtype=np.float64),
                   v=np.zeros_like(param, dtype=np.float64),
                   learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                   epsilon=epsilon)


def adam_step(state: AdamState, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Bias-corrected Adam update, in place on param and state."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ShapeError(
            f"param {param.shape}, grad {grad.shape} and state {state.m.shape} "
            "must be congruent")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    backend.adam_update(param.reshape(-1), np.ascontiguousarray(grad).reshape(-1),
                        state.m.reshape(-1), state.v.reshape(-1),
                        state.learning_rate, state.beta1, state.beta2,
                        state.epsilon, bc1, bc2)
    return param
