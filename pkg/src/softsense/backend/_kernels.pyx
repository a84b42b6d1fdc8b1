# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel lane: fused elementwise loops for the training hot path."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

NAME = "compiled"

ACT_LINEAR = 0
ACT_RELU = 1
ACT_SIGMOID = 2


def relu_fwd(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], c = z.shape[1], i, j
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(c):
            out[i, j] = z[i, j] if z[i, j] > 0.0 else 0.0
    return out_arr


def sigmoid_fwd(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], c = z.shape[1], i, j
    cdef double e
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(c):
            if z[i, j] >= 0.0:
                out[i, j] = 1.0 / (1.0 + exp(-z[i, j]))
            else:
                e = exp(z[i, j])
                out[i, j] = e / (1.0 + e)
    return out_arr


def act_bwd(int kind, double[:, ::1] z, double[:, ::1] a, double[:, ::1] dy):
    cdef Py_ssize_t n = dy.shape[0], c = dy.shape[1], i, j
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if kind == ACT_LINEAR:
        for i in range(n):
            for j in range(c):
                out[i, j] = dy[i, j]
    elif kind == ACT_RELU:
        for i in range(n):
            for j in range(c):
                out[i, j] = dy[i, j] if z[i, j] > 0.0 else 0.0
    elif kind == ACT_SIGMOID:
        for i in range(n):
            for j in range(c):
                out[i, j] = dy[i, j] * a[i, j] * (1.0 - a[i, j])
    else:
        raise ValueError(f"unknown activation code {kind}")
    return out_arr


def pair_softmax_fwd(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], c = z.shape[1], i, j
    cdef double m, e0, e1, s
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(0, c, 2):
            m = z[i, j] if z[i, j] > z[i, j + 1] else z[i, j + 1]
            e0 = exp(z[i, j] - m)
            e1 = exp(z[i, j + 1] - m)
            s = e0 + e1
            out[i, j] = e0 / s
            out[i, j + 1] = e1 / s
    return out_arr


def pair_softmax_bwd(double[:, ::1] p, double[:, ::1] dp):
    cdef Py_ssize_t n = p.shape[0], c = p.shape[1], i, j
    cdef double dot
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        for j in range(0, c, 2):
            dot = p[i, j] * dp[i, j] + p[i, j + 1] * dp[i, j + 1]
            out[i, j] = p[i, j] * (dp[i, j] - dot)
            out[i, j + 1] = p[i, j + 1] * (dp[i, j + 1] - dot)
    return out_arr


def masked_pair_ce(double[:, ::1] p, signed char[:, ::1] codes,
                   double[::1] w0, double[::1] w1, double eps):
    """Per-head weighted cross-entropy over observed labels; see numpy lane."""
    cdef Py_ssize_t n = p.shape[0], h = codes.shape[1], i, j, col
    cdef double inv_n = 1.0 / n
    cdef double loss = 0.0, pt, w
    cdef signed char t
    dp_arr = np.zeros((n, p.shape[1]), dtype=np.float64)
    cdef double[:, ::1] dp = dp_arr
    for i in range(n):
        for j in range(h):
            t = codes[i, j]
            if t < 0:
                continue
            col = 2 * j + t
            pt = p[i, col]
            if pt < eps:
                pt = eps
            elif pt > 1.0 - eps:
                pt = 1.0 - eps
            w = w1[j] if t == 1 else w0[j]
            loss += -log(pt) * w
            dp[i, col] = -w / (pt * n)
    return loss * inv_n, dp_arr


def adam_update(double[::1] param, double[::1] grad, double[::1] m,
                double[::1] v, double lr, double b1, double b2, double eps,
                double bc1, double bc2):
    """Fused bias-corrected Adam step, in place on param, m, v."""
    cdef Py_ssize_t k, size = param.shape[0]
    cdef double omb1 = 1.0 - b1, omb2 = 1.0 - b2
    for k in range(size):
        m[k] = b1 * m[k] + omb1 * grad[k]
        v[k] = b2 * v[k] + omb2 * (grad[k] * grad[k])
        param[k] = param[k] - lr * (m[k] / bc1) / (sqrt(v[k] / bc2) + eps)
