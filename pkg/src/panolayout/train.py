"""Minibatch Adam training over synthetic rooms with JSONL step logging.

Determinism contract: cues are generated once per room from (dataset seed,
room index); batch composition and augmentation coin flips derive from
(config seed, step), so resuming from a checkpoint at step s reproduces the
uninterrupted run bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import geometry, losses, metrics
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import NumericError, ValidationError
from .layout import DEFAULT_CAMERA_HEIGHT
from .model import Model, config_from_dict, config_hash, make_cues
from .optim import Adam


def room_cue_seed(dataset_seed, room_index):
    return [int(dataset_seed), int(room_index), 7919]


@dataclass
class TrainSample:
    cues: np.ndarray
    targets: dict


def build_samples(layouts, cfg, dataset_seed=None, with_flips=False):
    """Fixed per-room cues and targets; optionally the mirrored variants too."""
    seed0 = cfg.seed if dataset_seed is None else dataset_seed
    n = cfg.seq.tokens
    samples = []
    flipped = []
    for i, layout in enumerate(layouts):
        cues = make_cues(layout, n, cfg.cue_noise, seed=room_cue_seed(seed0, i))
        samples.append(TrainSample(cues, losses.layout_targets(layout, n)))
        if with_flips:
            rev = cues[::-1].copy()
            depths_rev = samples[-1].targets["depths"][::-1].copy()
            normals = geometry.compute_normals(depths_rev)
            flipped.append(
                TrainSample(
                    rev,
                    {
                        "depths": depths_rev,
                        "height": layout.room_height,
                        "nx": normals[:, 0],
                        "nz": normals[:, 1],
                        "grad": geometry.normal_angle_gradients(normals),
                    },
                )
            )
    return samples, flipped


def _step_rng(seed, step):
    return np.random.default_rng([int(seed), int(step), 104729])


def train_model(layouts, cfg, out_dir, val_layouts=None, resume_from=None,
                log_name="train_log.jsonl", checkpoint_name="checkpoint.bin"):
    """Train on the given rooms; returns (model, dict of output paths)."""
    if not layouts:
        raise ValidationError("training requires a nonempty dataset")
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, log_name)
    ckpt_path = os.path.join(out_dir, checkpoint_name)

    samples, flipped = build_samples(layouts, cfg, with_flips=cfg.flip_augment)
    model = Model(cfg)
    params = model.params()
    optimizer = Adam(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps)

    start_step = 0
    mode = "w"
    if resume_from is not None:
        tensors, header = load_checkpoint(resume_from)
        if header["config_hash"] != config_hash(cfg):
            raise ValidationError(
                f"checkpoint config hash {header['config_hash']} does not match run config"
            )
        model.load_state_tensors(tensors)
        optimizer.load_state_tensors(tensors, header["meta"]["step"])
        start_step = int(header["meta"]["step"])
        mode = "a"

    batch = cfg.batch_size
    with open(log_path, mode, encoding="utf-8") as log:
        for step in range(start_step + 1, cfg.steps + 1):
            rng = _step_rng(cfg.seed, step)
            idx = rng.choice(len(samples), size=batch, replace=len(samples) < batch)
            use_flip = rng.random(batch) < 0.5 if cfg.flip_augment else np.zeros(batch, bool)

            ad.zero_grads(params)
            sums = np.zeros(5)
            try:
                for take_flip, i in zip(use_flip, idx):
                    sample = flipped[i] if take_flip else samples[i]
                    depths, height = model.forward(sample.cues)
                    total, report = losses.total_loss(
                        depths, height, sample.targets, cfg.weights, cfg.toggles
                    )
                    ad.backward(ad.mul(total, 1.0 / batch))
                    sums += [report.depth, report.height, report.normal,
                             report.normal_gradient, report.total]
            except NumericError as e:
                raise NumericError(f"non-finite value at training step {step}: {e}") from e

            optimizer.step()
            means = sums / batch
            record = {"step": step, "L_d": means[0], "L_h": means[1],
                      "L_n": means[2], "L_g": means[3], "L_total": means[4]}
            log.write(json.dumps(record, sort_keys=True) + "\n")

            if cfg.eval_every > 0 and val_layouts and step % cfg.eval_every == 0:
                record = evaluate_layouts(model, val_layouts, cfg)
                record["step"] = step
                log.write(json.dumps(record, sort_keys=True) + "\n")

    state = dict(model.state_tensors())
    state.update(optimizer.state_tensors())
    save_checkpoint(
        ckpt_path,
        state,
        config_hash(cfg),
        meta={"step": cfg.steps, "config": _cfg_dict(cfg)},
    )
    return model, {"checkpoint": ckpt_path, "log": log_path}


def _cfg_dict(cfg):
    from dataclasses import asdict

    return asdict(cfg)


def evaluate_layouts(model, layouts, cfg, noise=0.0, seed_base=0):
    """Mean validation metrics on clean cues (no model noise memorization)."""
    vals = {"val_iou2d": [], "val_rmse": [], "val_delta1": []}
    for i, layout in enumerate(layouts):
        cues = make_cues(layout, cfg.seq.tokens, noise, seed=room_cue_seed(seed_base, i))
        pred = model.predict(cues, camera_height=layout.camera_height)
        gt_depths = geometry.sample_floor_boundary(layout, cfg.seq.tokens)
        rmse, delta1 = metrics.depth_metrics(
            pred.depths, gt_depths, pred.camera_height, layout.camera_height
        )
        vals["val_iou2d"].append(
            metrics.iou2d(geometry.depths_to_xz(pred.depths), layout.floor_polygon)
        )
        vals["val_rmse"].append(rmse)
        vals["val_delta1"].append(delta1)
    return {k: float(np.mean(v)) for k, v in vals.items()}


def load_model_from_checkpoint(path, expected_cfg=None):
    """Rebuild a Model from a checkpoint; verifies the stored config hash."""
    tensors, header = load_checkpoint(path)
    cfg = config_from_dict(header["meta"]["config"])
    if header["config_hash"] != config_hash(cfg):
        raise ValidationError("checkpoint header is internally inconsistent")
    if expected_cfg is not None and config_hash(expected_cfg) != header["config_hash"]:
        raise ValidationError("checkpoint config hash does not match the requested config")
    model = Model(cfg)
    model.load_state_tensors(tensors)
    return model, header


def infer(checkpoint_path, layout=None, cues=None, postproc="none", expected_cfg=None):
    """Pure forward pass from a checkpoint; optional Manhattan rebuild.

    Exactly one of layout/cues must be given; with a layout, clean cues are
    derived from it.
    """
    from . import postproc as pp

    if (layout is None) == (cues is None):
        raise ValidationError("provide exactly one of layout or cues")
    if postproc not in ("none", "manhattan"):
        raise ValidationError(f"unknown postproc {postproc!r}")
    model, header = load_model_from_checkpoint(checkpoint_path, expected_cfg)
    if cues is None:
        cues = make_cues(layout, model.cfg.seq.tokens, 0.0)
    camera_h = layout.camera_height if layout is not None else DEFAULT_CAMERA_HEIGHT
    pred = model.predict(
        cues,
        camera_height=camera_h,
        provenance={"config_hash": header["config_hash"], "step": header["meta"]["step"]},
    )
    if postproc == "manhattan":
        return pred, pp.manhattanize(pred)
    return pred, None
