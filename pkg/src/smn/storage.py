"""Config files and model checkpoints.

Configs are JSON objects carrying a ``schema`` tag and ``version``; missing
fields take their defaults, so an empty train config reproduces the
reference recipe. Checkpoints are ``.npz`` archives holding a JSON header
and one little-endian float64 array per named parameter.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import Model, ModelConfig, build_model, config_from_dict
from .train import TrainConfig

MODEL_SCHEMA = "smn.model-config"
TRAIN_SCHEMA = "smn.train-config"
CHECKPOINT_FORMAT = "smn.checkpoint"
VERSION = 1


class SchemaError(ValueError):
    pass


def _strip_header(d: dict, schema: str) -> dict:
    d = dict(d)
    tag = d.pop("schema", schema)
    version = d.pop("version", VERSION)
    if tag != schema:
        raise SchemaError(f"expected schema {schema!r}, found {tag!r}")
    if version != VERSION:
        raise SchemaError(f"unsupported {schema} version {version}")
    return d


def model_config_to_json(cfg: ModelConfig) -> str:
    d = {"schema": MODEL_SCHEMA, "version": VERSION, **cfg.to_dict()}
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def model_config_from_json(text: str) -> ModelConfig:
    return config_from_dict(_strip_header(json.loads(text), MODEL_SCHEMA))


def train_config_to_json(cfg: TrainConfig) -> str:
    d = {"schema": TRAIN_SCHEMA, "version": VERSION, **cfg.to_dict()}
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def train_config_from_json(text: str) -> TrainConfig:
    return TrainConfig.from_dict(_strip_header(json.loads(text), TRAIN_SCHEMA))


def load_model_config(path) -> ModelConfig:
    return model_config_from_json(Path(path).read_text())


def load_train_config(path) -> TrainConfig:
    return train_config_from_json(Path(path).read_text())


def save_config(cfg: ModelConfig | TrainConfig, path) -> None:
    text = train_config_to_json(cfg) if isinstance(cfg, TrainConfig) else model_config_to_json(cfg)
    Path(path).write_text(text)


def save_checkpoint(model: Model, path) -> None:
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "config": model.config.to_dict(),
        "trainable": model.trainable,
        "names": list(model.state),
    }
    arrays = {f"param/{k}": np.ascontiguousarray(v, dtype="<f8") for k, v in model.state.items()}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def load_checkpoint(path) -> Model:
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise SchemaError(f"{path} is not an SMN checkpoint")
        if header.get("version") != VERSION:
            raise SchemaError(f"unsupported checkpoint version {header.get('version')}")
        state = {k: z[f"param/{k}"].astype(np.float64) for k in header["names"]}
    model = build_model(config_from_dict(header["config"]))
    missing = set(model.state) ^ set(state)
    if missing:
        raise SchemaError(f"checkpoint parameters do not match config: {sorted(missing)}")
    for k, v in state.items():
        if v.shape != model.state[k].shape:
            raise SchemaError(f"parameter {k!r} has shape {v.shape}, expected {model.state[k].shape}")
    model.state.update(state)
    return model
