"""Pure-NumPy kernel lane.

Mirrors the compiled extension operation by operation. Elementwise kernels
use the same expression trees so results agree with the compiled lane
bitwise where only IEEE basic ops are involved (relu, Adam) and to ~1 ulp
where exp/log enter (sigmoid, softmax, cross-entropy).
"""

import numpy as np

NAME = "numpy"

ACT_LINEAR, ACT_RELU, ACT_SIGMOID = 0, 1, 2


def relu_fwd(z):
    return np.maximum(z, 0.0)


def sigmoid_fwd(z):
    # Branch form: never exponentiates a positive argument.
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def act_bwd(kind, z, a, dy):
    if kind == ACT_LINEAR:
        return dy.copy()
    if kind == ACT_RELU:
        return np.where(z > 0.0, dy, 0.0)
    if kind == ACT_SIGMOID:
        return dy * a * (1.0 - a)
    raise ValueError(f"unknown activation code {kind}")


def pair_softmax_fwd(z):
    n, c = z.shape
    z3 = z.reshape(n, c // 2, 2)
    m = z3.max(axis=2, keepdims=True)
    e = np.exp(z3 - m)
    p = e / e.sum(axis=2, keepdims=True)
    return np.ascontiguousarray(p.reshape(n, c))


def pair_softmax_bwd(p, dp):
    n, c = p.shape
    p3 = p.reshape(n, c // 2, 2)
    dp3 = dp.reshape(n, c // 2, 2)
    dot = (p3 * dp3).sum(axis=2, keepdims=True)
    dz = p3 * (dp3 - dot)
    return np.ascontiguousarray(dz.reshape(n, c))


def masked_pair_ce(p, codes, w0, w1, eps):
    """Per-head weighted cross-entropy over observed labels.

    p: (n, 2H) pair probabilities; codes: (n, H) int8 in {-1, 0, 1} with -1
    missing. Returns (loss, dloss/dp); both normalized by n. Gradient is
    zero at masked entries and at the non-target unit of each pair.
    """
    n = p.shape[0]
    rows, heads = np.nonzero(codes >= 0)
    t = codes[rows, heads].astype(np.int64)
    cols = 2 * heads + t
    pt = np.clip(p[rows, cols], eps, 1.0 - eps)
    w = np.where(t == 1, w1[heads], w0[heads])
    loss = float(np.sum(-np.log(pt) * w) / n)
    dp = np.zeros_like(p)
    dp[rows, cols] = -w / (pt * n)
    return loss, dp


def adam_update(param, grad, m, v, lr, b1, b2, eps, bc1, bc2):
    """Fused bias-corrected Adam step, in place on param, m, v (1-D views)."""
    omb1 = 1.0 - b1
    omb2 = 1.0 - b2
    m[:] = b1 * m + omb1 * grad
    v[:] = b2 * v + omb2 * (grad * grad)
    param[:] = param - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
