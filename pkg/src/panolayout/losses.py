"""Geometry-aware training losses, differentiable end to end.

The depth and height terms are plain L1. The planar terms rebuild wall
normals and their angle gradients from the *predicted* depths inside the
autodiff graph, so supervision reaches the depths through the wall geometry;
ground-truth normals/gradients are precomputed constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import geometry
from .errors import ValidationError


@dataclass(frozen=True)
class LossWeights:
    depth: float = 0.9
    height: float = 0.1
    planar: float = 0.1

    def __post_init__(self):
        if min(self.depth, self.height, self.planar) < 0:
            raise ValidationError("loss weights must be nonnegative")


@dataclass(frozen=True)
class LossToggles:
    """Ablation switches; a disabled term contributes exactly zero."""

    use_height: bool = True
    use_normals: bool = True
    use_gradients: bool = True


@dataclass
class LossReport:
    depth: float
    height: float
    normal: float
    normal_gradient: float
    total: float

    def to_json_dict(self):
        return {
            "L_d": self.depth,
            "L_h": self.height,
            "L_n": self.normal,
            "L_g": self.normal_gradient,
            "L_total": self.total,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def normals_from_depths(depths, sin_t=None, cos_t=None):
    """Differentiable wall normals; returns (nx, nz) tensors of length N.

    Matches geometry.compute_normals: edge i spans boundary points i -> i+1
    (circular), rotated by the fixed quarter turn (x, z) -> (z, -x).
    """
    n = depths.shape[0]
    if sin_t is None or cos_t is None:
        theta = geometry.longitudes(n)
        sin_t, cos_t = np.sin(theta), np.cos(theta)
    px = ad.mul(depths, ad.Tensor(sin_t))
    pz = ad.mul(depths, ad.Tensor(cos_t))
    ex = ad.sub(ad.roll(px, -1), px)
    ez = ad.sub(ad.roll(pz, -1), pz)
    length = ad.sqrt(ad.add(ad.mul(ex, ex), ad.mul(ez, ez)))
    return ad.div(ez, length), ad.neg(ad.div(ex, length))


def gradients_from_normals(nx, nz):
    """Differentiable angle between normals two steps apart (circular)."""
    dots = ad.add(
        ad.mul(ad.roll(nx, 1), ad.roll(nx, -1)),
        ad.mul(ad.roll(nz, 1), ad.roll(nz, -1)),
    )
    return ad.acos(dots)


def depth_loss(pred_depths, gt_depths):
    """Mean absolute horizon-depth error."""
    if pred_depths.shape != np.shape(gt_depths):
        raise ValidationError(
            f"depth sequences differ in length: {pred_depths.shape} vs {np.shape(gt_depths)}"
        )
    return ad.meant(ad.absolute(ad.sub(pred_depths, ad.Tensor(gt_depths))))


def height_loss(pred_height, gt_height):
    """Absolute room-height error."""
    return ad.absolute(ad.sub(pred_height, float(gt_height)))


def normal_loss(pred_nx, pred_nz, gt_nx, gt_nz):
    """Mean negative cosine similarity of wall normals; -1 at perfect alignment."""
    dots = ad.add(ad.mul(pred_nx, ad.Tensor(gt_nx)), ad.mul(pred_nz, ad.Tensor(gt_nz)))
    return ad.neg(ad.meant(dots))


def gradient_loss(pred_grad, gt_grad):
    """Mean absolute normal-angle gradient error."""
    if pred_grad.shape != np.shape(gt_grad):
        raise ValidationError("gradient sequences differ in length")
    return ad.meant(ad.absolute(ad.sub(pred_grad, ad.Tensor(gt_grad))))


def layout_targets(layout, n):
    """Precomputed ground truth for one room: depths, height, normals, gradients."""
    depths = geometry.sample_floor_boundary(layout, n)
    normals = geometry.compute_normals(depths)
    return {
        "depths": depths,
        "height": layout.room_height,
        "nx": normals[:, 0],
        "nz": normals[:, 1],
        "grad": geometry.normal_angle_gradients(normals),
    }


def total_loss(pred_depths, pred_height, targets, weights=None, toggles=None):
    """Weighted total over the enabled terms.

    Returns (scalar Tensor for backward, LossReport of floats). The report's
    total always equals depth_w*L_d + height_w*L_h + planar_w*(L_n + L_g)
    with disabled terms entering as zero.
    """
    weights = weights or LossWeights()
    toggles = toggles or LossToggles()

    l_d = depth_loss(pred_depths, targets["depths"])
    terms = ad.mul(l_d, weights.depth)
    l_h_val = 0.0
    if toggles.use_height:
        l_h = height_loss(pred_height, targets["height"])
        terms = ad.add(terms, ad.mul(l_h, weights.height))
        l_h_val = l_h.item()
    l_n_val = 0.0
    l_g_val = 0.0
    if toggles.use_normals or toggles.use_gradients:
        nx, nz = normals_from_depths(pred_depths)
        if toggles.use_normals:
            l_n = normal_loss(nx, nz, targets["nx"], targets["nz"])
            terms = ad.add(terms, ad.mul(l_n, weights.planar))
            l_n_val = l_n.item()
        if toggles.use_gradients:
            l_g = gradient_loss(gradients_from_normals(nx, nz), targets["grad"])
            terms = ad.add(terms, ad.mul(l_g, weights.planar))
            l_g_val = l_g.item()

    report = LossReport(
        depth=l_d.item(),
        height=l_h_val,
        normal=l_n_val,
        normal_gradient=l_g_val,
        total=terms.item(),
    )
    return terms, report
