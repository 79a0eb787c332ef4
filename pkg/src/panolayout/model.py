"""Full estimation model: per-column cue encoder, attention trunk, and the
two output branches (horizon-depth sequence, scalar room height).

Real image features are out of scope at desk scale; the encoder instead
consumes a synthetic cue sequence per longitude column: noisy horizon depth,
noisy floor/ceiling boundary latitudes, and positional sinusoids. Both output
branches end in softplus plus a small floor so predictions stay physically
positive; their biases start at the softplus-inverse of a typical room scale
so optimization starts near plausible geometry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from . import geometry, transformer
from .errors import ValidationError
from .layout import DEFAULT_CAMERA_HEIGHT, LayoutPrediction
from .losses import LossToggles, LossWeights
from .transformer import SeqConfig

CUE_CHANNELS = 5  # depth, floor latitude, ceiling latitude, sin(theta), cos(theta)


@dataclass(frozen=True)
class ModelConfig:
    seq: SeqConfig = field(default_factory=SeqConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    toggles: LossToggles = field(default_factory=LossToggles)
    head_floor: float = 1e-3
    depth_bias_init: float = 2.5
    height_bias_init: float = 2.7
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 6
    steps: int = 2000
    cue_noise: float = 0.05
    flip_augment: bool = False
    eval_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.steps < 0:
            raise ValidationError("batch_size must be >=1 and steps >=0")
        if self.cue_noise < 0:
            raise ValidationError("cue noise must be nonnegative")
        if self.lr < 0:
            raise ValidationError("learning rate must be nonnegative")


def config_hash(cfg):
    blob = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def config_from_dict(doc):
    """Rebuild a ModelConfig from its asdict() form (checkpoint header)."""
    doc = dict(doc)
    seq = SeqConfig(**doc.pop("seq"))
    weights = LossWeights(**doc.pop("weights"))
    toggles = LossToggles(**doc.pop("toggles"))
    return ModelConfig(seq=seq, weights=weights, toggles=toggles, **doc)


def make_cues(layout, n, sigma=0.0, seed=0):
    """Synthetic per-column input channels for one room, (N, 5) float array.

    Deterministic per seed; sigma=0 yields exact geometric cues, consistent
    with the latitude/depth closed forms.
    """
    if sigma < 0:
        raise ValidationError("cue noise must be nonnegative")
    depths = geometry.sample_floor_boundary(layout, n)
    phi_floor = np.arctan2(layout.camera_height, depths)
    phi_ceil = np.arctan2(layout.ceiling_offset, depths)
    theta = geometry.longitudes(n)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        depths = np.maximum(depths + sigma * rng.standard_normal(n), 0.05)
        lat_lim = np.pi / 2 - 1e-3
        phi_floor = np.clip(phi_floor + sigma * rng.standard_normal(n), 1e-3, lat_lim)
        phi_ceil = np.clip(phi_ceil + sigma * rng.standard_normal(n), 1e-3, lat_lim)
    return np.stack([depths, phi_floor, phi_ceil, np.sin(theta), np.cos(theta)], axis=1)


def _softplus_inverse(y):
    return float(y + np.log1p(-np.exp(-y)))


class Model:
    """Owns all Params; forward maps an (N, 5) cue array to (depths, height)."""

    def __init__(self, cfg, rng=None):
        self.cfg = cfg
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        d = cfg.seq.dim
        self.encoder_w = ad.Param(
            rng.standard_normal((CUE_CHANNELS, d)) / np.sqrt(CUE_CHANNELS), "encoder_w"
        )
        self.encoder_b = ad.Param(np.zeros(d), "encoder_b")
        self.blocks, self.ape = transformer.build_trunk_params(cfg.seq, rng)
        # pre-norm trunks leave the residual stream unnormalized; close with a
        # final layer norm so the heads see O(1) features
        self.final_gain = ad.Param(np.ones(d), "final_gain") if cfg.seq.norm_scheme == "pre" else None
        self.final_bias = ad.Param(np.zeros(d), "final_bias") if cfg.seq.norm_scheme == "pre" else None
        self.depth_w = ad.Param(rng.standard_normal((d, 1)) / np.sqrt(d), "depth_w")
        self.depth_b = ad.Param(np.full(1, _softplus_inverse(cfg.depth_bias_init)), "depth_b")
        self.height_w = ad.Param(rng.standard_normal((d, 1)) / np.sqrt(d), "height_w")
        self.height_b = ad.Param(np.full(1, _softplus_inverse(cfg.height_bias_init)), "height_b")

    def params(self):
        out = [self.encoder_w, self.encoder_b]
        out.extend(transformer.trunk_param_list(self.blocks, self.ape))
        if self.final_gain is not None:
            out.extend([self.final_gain, self.final_bias])
        out.extend([self.depth_w, self.depth_b, self.height_w, self.height_b])
        return out

    def forward(self, cues, dropout_rng=None):
        """Returns (depth tensor of shape (N,), height tensor of shape ())."""
        cues = np.asarray(cues, dtype=np.float64)
        n = self.cfg.seq.tokens
        if cues.shape != (n, CUE_CHANNELS):
            raise ValidationError(f"cues must have shape {(n, CUE_CHANNELS)}, got {cues.shape}")
        x = ad.add(ad.matmul(ad.Tensor(cues), self.encoder_w), self.encoder_b)
        tokens = transformer.trunk_forward(x, self.blocks, self.cfg.seq, self.ape, dropout_rng)
        if self.final_gain is not None:
            tokens = ad.layer_norm(tokens, self.final_gain, self.final_bias)

        depth_pre = ad.add(ad.reshape(ad.matmul(tokens, self.depth_w), (n,)), self.depth_b)
        depths = ad.add(ad.softplus(depth_pre), self.cfg.head_floor)

        pooled = ad.reshape(ad.meant(tokens, axis=0), (1, self.cfg.seq.dim))
        height_pre = ad.add(ad.reshape(ad.matmul(pooled, self.height_w), ()), self.height_b)
        height = ad.add(ad.softplus(ad.reshape(height_pre, ())), self.cfg.head_floor)
        return depths, ad.reshape(height, ())

    def predict(self, cues, camera_height=DEFAULT_CAMERA_HEIGHT, provenance=None):
        depths, height = self.forward(cues)
        return LayoutPrediction(
            depths.data.copy(),
            float(height.data),
            camera_height=camera_height,
            provenance=provenance or {"config_hash": config_hash(self.cfg)},
        )

    def state_tensors(self):
        """Ordered name -> array mapping of every trainable tensor."""
        return {p.name: p.data for p in self.params()}

    def load_state_tensors(self, tensors):
        for p in self.params():
            if p.name not in tensors:
                raise ValidationError(f"checkpoint is missing tensor {p.name}")
            arr = np.asarray(tensors[p.name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValidationError(
                    f"checkpoint tensor {p.name} has shape {arr.shape}, expected {p.data.shape}"
                )
            p.data = arr.copy()
