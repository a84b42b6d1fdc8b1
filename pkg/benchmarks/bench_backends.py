#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the NumPy fallback.

Times the individual elementwise kernels and a full quality-driven layer
training epoch under each lane. Dense matrix products go through BLAS in
both lanes, so the deltas isolate the fused elementwise work.

Usage: python benchmarks/bench_backends.py [--rows 4096] [--repeat 7]
"""

import argparse
import time

import numpy as np

from softsense import backend
from softsense.heads import HeadLabels
from softsense.losses import class_weights
from softsense.model import QaeLayerSpec, TrainConfig, train_qae_layer
from softsense.nn import make_rng


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(rows, repeat):
    rng = make_rng(0)
    cols, heads = 64, 8
    z = np.ascontiguousarray(rng.uniform(-20, 20, size=(rows, cols)))
    dy = np.ascontiguousarray(rng.standard_normal((rows, cols)))
    zp = np.ascontiguousarray(rng.uniform(-5, 5, size=(rows, 2 * heads)))
    codes = rng.integers(-1, 2, size=(rows, heads)).astype(np.int8)
    w = np.ascontiguousarray(rng.uniform(0.2, 4.0, size=heads))
    p = np.zeros(100_000)
    g = rng.standard_normal(100_000)
    m = np.zeros_like(p)
    v = np.zeros_like(p)

    rows_out = []
    for name in backend.available_backends():
        lane = backend.get_backend(name)
        a = lane.sigmoid_fwd(z)
        pp = lane.pair_softmax_fwd(zp)
        cases = {
            "relu_fwd": lambda: lane.relu_fwd(z),
            "sigmoid_fwd": lambda: lane.sigmoid_fwd(z),
            "act_bwd(sigmoid)": lambda: lane.act_bwd(backend.ACT_SIGMOID, z, a, dy),
            "pair_softmax_fwd": lambda: lane.pair_softmax_fwd(zp),
            "masked_pair_ce": lambda: lane.masked_pair_ce(pp, codes, w, w, 1e-12),
            "adam_update(100k)": lambda: lane.adam_update(
                p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001),
        }
        for case, fn in cases.items():
            rows_out.append((case, name, best_of(fn, repeat)))
    return rows_out


def bench_training(rows, repeat):
    rng = make_rng(1)
    d, hidden, heads = 64, 32, 4
    X = rng.standard_normal((rows, d))
    codes = rng.integers(0, 2, size=(rows, heads)).astype(np.int8)
    labels = HeadLabels(codes)
    weights = class_weights(labels)
    cfg = TrainConfig(max_epochs=3, patience=3, batch_size=512)
    spec = QaeLayerSpec(d, hidden, 2 * heads)

    rows_out = []
    for name in backend.available_backends():
        lane = backend.get_backend(name)
        saved = {k: getattr(backend, k) for k in
                 ("relu_fwd", "sigmoid_fwd", "act_bwd", "pair_softmax_fwd",
                  "pair_softmax_bwd", "masked_pair_ce", "adam_update")}
        try:
            for k in saved:
                setattr(backend, k, getattr(lane, k))
            t = best_of(lambda: train_qae_layer(X, labels, weights, spec, cfg,
                                                make_rng(0)), repeat)
        finally:
            for k, fn in saved.items():
                setattr(backend, k, fn)
        rows_out.append((f"train 3 epochs ({rows}x{d})", name, t))
    return rows_out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4096)
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()

    if "compiled" not in backend.available_backends():
        print("compiled lane not built; showing numpy lane only")

    results = bench_kernels(args.rows, args.repeat)
    results += bench_training(args.rows, max(3, args.repeat // 2))

    by_case = {}
    for case, lane, t in results:
        by_case.setdefault(case, {})[lane] = t
    print(f"{'kernel':<28}{'numpy':>12}{'compiled':>12}{'speedup':>9}")
    for case, lanes in by_case.items():
        tn = lanes.get("numpy")
        tc = lanes.get("compiled")
        speed = f"{tn / tc:8.2f}x" if tn and tc else "        -"
        fmt = lambda t: f"{t * 1e3:10.3f}ms" if t else "         -"
        print(f"{case:<28}{fmt(tn)}{fmt(tc)}{speed}")


if __name__ == "__main__":
    main()
