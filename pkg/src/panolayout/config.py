"""Run configuration: one JSON document drives training and evaluation.

Every section is validated against its dataclass before any work starts;
unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

from .errors import ValidationError
from .losses import LossToggles, LossWeights
from .model import ModelConfig
from .transformer import SeqConfig

TRAIN_KEYS = (
    "lr", "beta1", "beta2", "adam_eps", "batch_size", "steps", "cue_noise",
    "flip_augment", "eval_every", "head_floor", "depth_bias_init", "height_bias_init",
)
LOSS_KEY_MAP = {
    "depth_weight": ("weights", "depth"),
    "height_weight": ("weights", "height"),
    "planar_weight": ("weights", "planar"),
    "use_height": ("toggles", "use_height"),
    "use_normals": ("toggles", "use_normals"),
    "use_gradients": ("toggles", "use_gradients"),
}


@dataclass
class RunConfig:
    model: ModelConfig
    dataset_dir: str = ""
    out_dir: str = ""


def _check_keys(doc, allowed, section):
    if not isinstance(doc, dict):
        raise ValidationError(f"config section {section!r} must be a JSON object")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown keys in config section {section!r}: {sorted(unknown)}")


def _dataclass_kwargs(doc, cls, section):
    names = [f.name for f in fields(cls)]
    _check_keys(doc, names, section)
    return doc


def run_config_from_dict(doc):
    _check_keys(doc, ("seed", "dataset_dir", "out_dir", "model", "loss", "train"), "<root>")
    try:
        seq = SeqConfig(**_dataclass_kwargs(doc.get("model", {}), SeqConfig, "model"))

        loss_doc = doc.get("loss", {})
        _check_keys(loss_doc, LOSS_KEY_MAP, "loss")
        weights_kw, toggles_kw = {}, {}
        for key, value in loss_doc.items():
            group, name = LOSS_KEY_MAP[key]
            (weights_kw if group == "weights" else toggles_kw)[name] = value
        weights = LossWeights(**weights_kw)
        toggles = LossToggles(**toggles_kw)

        train_doc = dict(doc.get("train", {}))
        _check_keys(train_doc, TRAIN_KEYS, "train")
        model = ModelConfig(
            seq=seq, weights=weights, toggles=toggles,
            seed=int(doc.get("seed", 0)), **train_doc,
        )
    except TypeError as e:
        raise ValidationError(f"bad config value: {e}") from e
    return RunConfig(
        model=model,
        dataset_dir=str(doc.get("dataset_dir", "")),
        out_dir=str(doc.get("out_dir", "")),
    )


def load_run_config(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid JSON in config {path}: {e}") from e
    try:
        return run_config_from_dict(doc)
    except TypeError as e:
        raise ValidationError(f"bad config {path}: {e}") from e
