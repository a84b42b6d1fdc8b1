"""Versioned model persistence.

A checkpoint is a self-describing JSON document: config echo, layer dims
and activation tags, all weights and biases as decimal floats in shortest
round-trip form (Python repr), variance parameters, standardization stats,
and the training seed. Round-trip is bit-exact at float64.
"""

import json

import numpy as np

from .data import StandardizationStats
from .errors import DataError
from .losses import VarianceParams
from .model import QaeLayer, StackedModel
from .nn import DenseLayer

FORMAT = "softsense-checkpoint"
VERSION = 1


def _dense_doc(layer: DenseLayer) -> dict:
    return {"activation": layer.activation,
            "in_dim": layer.in_dim,
            "out_dim": layer.out_dim,
            "weights": layer.weights.tolist(),
            "bias": layer.bias.tolist()}


def _dense_from(doc: dict) -> DenseLayer:
    w = np.ascontiguousarray(doc["weights"], dtype=np.float64)
    b = np.ascontiguousarray(doc["bias"], dtype=np.float64)
    return DenseLayer(w.reshape(doc["out_dim"], doc["in_dim"]), b, doc["activation"])


def model_document(model: StackedModel, seed=None, config=None,
                   train_class_counts=None) -> dict:
    layers = []
    for layer in model.layers:
        layers.append({
            "encoder": _dense_doc(layer.encoder),
            "decoder_x": _dense_doc(layer.decoder_x),
            "decoder_y": None if layer.decoder_y is None else _dense_doc(layer.decoder_y),
            "log_variances": layer.variance.s.tolist(),
        })
    std = None
    if model.standardization is not None:
        std = {"mean": model.standardization.mean.tolist(),
               "std": model.standardization.std.tolist()}
    counts = None
    if train_class_counts is not None:
        counts = np.asarray(train_class_counts).tolist()
    return {
        "format": FORMAT,
        "version": VERSION,
        "seed": seed,
        "config": config,
        "train_class_counts": counts,
        "head_names": model.head_names,
        "standardization": std,
        "layers": layers,
        "classifier": [_dense_doc(l) for l in model.classifier],
    }


def save_checkpoint(model: StackedModel, path: str, seed=None, config=None,
                    train_class_counts=None) -> None:
    doc = model_document(model, seed=seed, config=config,
                         train_class_counts=train_class_counts)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str) -> tuple[StackedModel, dict]:
    """Returns (model, metadata) where metadata has seed and config echo."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise DataError(f"{path}: not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version "
                        f"{doc.get('version')!r} (expected {VERSION})")
    layers = []
    for ldoc in doc["layers"]:
        dec_y = ldoc["decoder_y"]
        layers.append(QaeLayer(
            encoder=_dense_from(ldoc["encoder"]),
            decoder_x=_dense_from(ldoc["decoder_x"]),
            decoder_y=None if dec_y is None else _dense_from(dec_y),
            variance=VarianceParams(np.array(ldoc["log_variances"], dtype=np.float64)),
        ))
    std = None
    if doc["standardization"] is not None:
        std = StandardizationStats(
            mean=np.array(doc["standardization"]["mean"], dtype=np.float64),
            std=np.array(doc["standardization"]["std"], dtype=np.float64))
    model = StackedModel(layers=layers,
                         classifier=[_dense_from(d) for d in doc["classifier"]],
                         standardization=std,
                         head_names=doc["head_names"])
    counts = doc.get("train_class_counts")
    if counts is not None:
        counts = np.asarray(counts, dtype=np.int64)
    return model, {"seed": doc.get("seed"), "config": doc.get("config"),
                   "train_class_counts": counts}
