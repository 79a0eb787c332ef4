"""Desk-scale panoramic room layout estimation.

A room is a floor polygon (camera at the origin) plus a room height. The
model predicts a horizon-depth sequence at equal longitude intervals and the
height from two output branches; geometry-aware losses supervise depths,
height, wall normals, and corner turning; a windowed/global attention trunk
with relative position biases processes the token ring.
"""

from .errors import NumericError, ValidationError
from .layout import GenSpec, LayoutPrediction, RoomLayout, generate_synthetic, read_layout, write_layout
from .losses import LossReport, LossToggles, LossWeights, total_loss
from .metrics import MetricReport, evaluate_prediction
from .model import Model, ModelConfig, make_cues
from .train import infer, train_model
from .transformer import SeqConfig

__all__ = [
    "GenSpec",
    "LayoutPrediction",
    "LossReport",
    "LossToggles",
    "LossWeights",
    "MetricReport",
    "Model",
    "ModelConfig",
    "NumericError",
    "RoomLayout",
    "SeqConfig",
    "ValidationError",
    "evaluate_prediction",
    "generate_synthetic",
    "infer",
    "make_cues",
    "read_layout",
    "total_loss",
    "train_model",
    "write_layout",
]

__version__ = "0.1.0"
