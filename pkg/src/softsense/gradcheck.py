"""Central finite-difference gradient oracle.

Independent of the analytic backward passes; used to verify them.
"""

import numpy as np

from .errors import NumericError


def finite_difference_grad(loss_fn, params: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central difference (f(p + eps*e_i) - f(p - eps*e_i)) / (2 eps) per coordinate.

    loss_fn takes an array shaped like params and returns a scalar; it must
    be deterministic.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    flat = params.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(loss_fn(params))
        flat[i] = orig - eps
        down = float(loss_fn(params))
        flat[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(
                f"non-finite loss at coordinate {i}: f+={up}, f-={down}")
        gflat[i] = (up - down) / (2.0 * eps)
    return grad


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """max |a-b| / max(|a|, |b|, floor), elementwise over both arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
