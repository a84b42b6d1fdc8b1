"""Run configuration: a strict JSON document with sections for data, split,
model, training, loss combination, imbalance handling, metrics, and the
experiment grid. Unknown keys are hard errors; an echoed copy is written
next to every run's outputs so runs can be reproduced byte for byte.
"""

import copy
import json

from .data import CsvSchema, SyntheticSpec
from .errors import ConfigError
from .model import ModelSpec, TrainConfig, canonical_kind

DEFAULTS = {
    "seed": 0,
    "out_dir": "runs/run",
    "data": {
        "kind": "synthetic",
        "synthetic": {
            "n_samples": 5000,
            "n_features": 64,
            "n_heads": 4,
            "latent_rank": 8,
            "imbalance_ratios": [2.0, 9.0, 50.0, 225.0],
            "observation_rate": 0.6,
            "label_noise": 0.02,
            "feature_noise": 0.01,
            "seed": 42,
        },
        "csv": {
            "path": None,
            "feature_columns": [],
            "label_columns": [],
        },
    },
    "split": {"fractions": [0.7, 0.15, 0.15], "stratify_head": None},
    "model": {"kind": "sqae+lr", "hidden_dims": [32, 16],
              "nn_hidden_dims": [100, 50]},
    "train": {"learning_rate": 1e-3, "batch_size": 512, "max_epochs": 500,
              "early_stop_min_delta": 1e-5, "patience": 30},
    "loss": {"combiner": "variance_weighted", "naive_lambda": 0.5},
    "imbalance": {"method": "weighted_class", "smote_k": 5},
    "metrics": {"beta_policy": "per_head_imbalance_ratio", "fixed_beta": 1.0},
    "experiment": {
        "models": ["lr", "nn", "qae+lr", "qae+nn", "sqae+lr", "sqae+nn"],
        "imbalance_methods": ["weighted_class", "smote"],
        "combiners": ["variance_weighted"],
        "seeds": [0, 1, 2],
    },
    "headmode": {"hidden_dim": 32, "max_epochs": 60, "reference_epoch": 50},
}


def _merge(defaults, user, path=""):
    if isinstance(defaults, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"{path or 'config'}: expected an object, "
                              f"got {type(user).__name__}")
        merged = {}
        for key, value in user.items():
            if key not in defaults:
                raise ConfigError(f"unknown config key {path + key!r}")
            merged[key] = _merge(defaults[key], value, f"{path}{key}.")
        for key, value in defaults.items():
            if key not in merged:
                merged[key] = copy.deepcopy(value)
        return merged
    return copy.deepcopy(user)


class RunConfig:
    """Validated, fully materialized run configuration."""

    def __init__(self, raw: dict | None = None):
        self.doc = _merge(DEFAULTS, raw or {})
        self._validate()

    def _validate(self):
        if self.doc["data"]["kind"] not in ("synthetic", "csv"):
            raise ConfigError(f"data.kind must be 'synthetic' or 'csv', got "
                              f"{self.doc['data']['kind']!r}")
        if self.doc["data"]["kind"] == "csv":
            csv_cfg = self.doc["data"]["csv"]
            if not csv_cfg["path"]:
                raise ConfigError("data.csv.path is required when data.kind='csv'")
            if not csv_cfg["feature_columns"] or not csv_cfg["label_columns"]:
                raise ConfigError("data.csv needs feature_columns and label_columns")
        fr = self.doc["split"]["fractions"]
        if len(fr) != 3:
            raise ConfigError(f"split.fractions needs 3 entries, got {len(fr)}")
        canonical_kind(self.doc["model"]["kind"])
        for kind in self.doc["experiment"]["models"]:
            canonical_kind(kind)
        self.synthetic_spec()
        self.train_config()
        self.model_spec()
        policy = self.doc["metrics"]["beta_policy"]
        if policy not in ("per_head_imbalance_ratio", "fixed"):
            raise ConfigError(f"metrics.beta_policy must be "
                              f"'per_head_imbalance_ratio' or 'fixed', got {policy!r}")
        hm = self.doc["headmode"]
        if hm["max_epochs"] < 1 or hm["reference_epoch"] < 1 or hm["hidden_dim"] < 1:
            raise ConfigError("headmode values must be >= 1")

    # typed views -----------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def out_dir(self) -> str:
        return self.doc["out_dir"]

    def synthetic_spec(self) -> SyntheticSpec:
        s = self.doc["data"]["synthetic"]
        return SyntheticSpec(
            n_samples=s["n_samples"], n_features=s["n_features"],
            n_heads=s["n_heads"], latent_rank=s["latent_rank"],
            imbalance_ratios=tuple(s["imbalance_ratios"]),
            observation_rate=s["observation_rate"],
            label_noise=s["label_noise"], feature_noise=s["feature_noise"],
            seed=s["seed"])

    def csv_schema(self) -> CsvSchema:
        c = self.doc["data"]["csv"]
        return CsvSchema(feature_columns=list(c["feature_columns"]),
                         label_columns=list(c["label_columns"]))

    def train_config(self, seed: int | None = None) -> TrainConfig:
        t = self.doc["train"]
        return TrainConfig(
            learning_rate=t["learning_rate"], batch_size=t["batch_size"],
            early_stop_min_delta=t["early_stop_min_delta"],
            patience=t["patience"], max_epochs=t["max_epochs"],
            seed=self.seed if seed is None else seed,
            combiner=self.doc["loss"]["combiner"],
            naive_lambda=self.doc["loss"]["naive_lambda"],
            imbalance=self.doc["imbalance"]["method"],
            smote_k=self.doc["imbalance"]["smote_k"])

    def model_spec(self) -> ModelSpec:
        m = self.doc["model"]
        return ModelSpec(hidden_dims=list(m["hidden_dims"]),
                         nn_hidden_dims=list(m["nn_hidden_dims"]))

    def split_fractions(self) -> tuple:
        return tuple(float(f) for f in self.doc["split"]["fractions"])

    def with_overrides(self, **sections) -> "RunConfig":
        """New config with some top-level values replaced (seed, out_dir, ...)."""
        doc = copy.deepcopy(self.doc)
        for key, value in sections.items():
            if key not in doc:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(doc[key], dict):
                doc[key].update(value)
            else:
                doc[key] = value
        return RunConfig(doc)

    def echo(self) -> str:
        return json.dumps(self.doc, indent=2) + "\n"


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot open config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must contain a JSON object")
    return RunConfig(raw)
