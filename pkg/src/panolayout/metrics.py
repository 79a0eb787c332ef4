"""Layout evaluation metrics: floor IoU, prism IoU, depth accuracy, corner
error, and pixel error.

IoU is grid-rasterized on a shared grid over the joint bounding box, which
handles nonconvex rectilinear shapes uniformly and keeps the operation
symmetric in its arguments. Prism IoU assumes both rooms stand on the same
floor plane (shared camera), so volumes reduce to area * height identities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geometry, postproc, raster
from .errors import ValidationError
from .layout import DEFAULT_CAMERA_HEIGHT

IOU_GRID = 1024


@dataclass
class MetricReport:
    iou2d: float
    iou3d: float
    rmse: float
    delta1: float
    ce: float
    pe: float

    def to_json_dict(self):
        return {
            "iou2d": self.iou2d,
            "iou3d": self.iou3d,
            "rmse": self.rmse,
            "delta1": self.delta1,
            "ce": self.ce,
            "pe": self.pe,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def iou2d(poly_a, poly_b, grid=IOU_GRID):
    """Intersection over union of two floor polygons on a shared raster grid."""
    mask_a, mask_b = raster.joint_grid_masks(poly_a, poly_b, grid)
    inter = np.count_nonzero(mask_a & mask_b)
    union = np.count_nonzero(mask_a | mask_b)
    if union == 0:
        raise ValidationError("both polygons rasterized to zero area")
    return inter / union


def _prism_args(obj):
    """Accepts a RoomLayout or a (polygon, height) pair."""
    if hasattr(obj, "floor_polygon"):
        return obj.floor_polygon, float(obj.room_height)
    poly, h = obj
    return np.asarray(poly, dtype=np.float64), float(h)


def iou3d(layout_a, layout_b, grid=IOU_GRID):
    """Prism IoU of two rooms extruded from a shared floor plane."""
    poly_a, h_a = _prism_args(layout_a)
    poly_b, h_b = _prism_args(layout_b)
    if h_a <= 0 or h_b <= 0:
        raise ValidationError("room heights must be positive")
    mask_a, mask_b = raster.joint_grid_masks(poly_a, poly_b, grid)
    area_a = np.count_nonzero(mask_a)
    area_b = np.count_nonzero(mask_b)
    inter_area = np.count_nonzero(mask_a & mask_b)
    inter = inter_area * min(h_a, h_b)
    union = area_a * h_a + area_b * h_b - inter
    if union == 0:
        raise ValidationError("both prisms have zero volume")
    return inter / union


def depth_metrics(pred_depths, gt_depths, pred_camera_h=DEFAULT_CAMERA_HEIGHT,
                  gt_camera_h=DEFAULT_CAMERA_HEIGHT, reference_camera_h=DEFAULT_CAMERA_HEIGHT):
    """(rmse, delta1) after rescaling both sequences to the reference camera height.

    delta1 counts samples whose larger depth ratio stays under 1.25.
    """
    p = np.asarray(pred_depths, dtype=np.float64)
    g = np.asarray(gt_depths, dtype=np.float64)
    if p.shape != g.shape:
        raise ValidationError(f"depth sequences differ in shape: {p.shape} vs {g.shape}")
    if np.any(p <= 0) or np.any(g <= 0):
        raise ValidationError("depths must be positive")
    p = p * (reference_camera_h / pred_camera_h)
    g = g * (reference_camera_h / gt_camera_h)
    rmse = float(np.sqrt(np.mean((p - g) ** 2)))
    ratio = np.maximum(p / g, g / p)
    delta1 = float(np.mean(ratio < 1.25))
    return rmse, delta1


def corners_to_pixels(corners, room_height, camera_height, width, height):
    """Floor and ceiling pixel points for (longitude, depth) wall junctions."""
    corners = np.asarray(corners, dtype=np.float64)
    if corners.ndim != 2 or corners.shape[1] != 2:
        raise ValidationError("corners must be (K, 2) rows of (longitude, depth)")
    theta, depth = corners[:, 0], corners[:, 1]
    u = (theta / (2.0 * np.pi) + 0.5) * width
    v_floor = (0.5 + np.arctan2(camera_height, depth) / np.pi) * height
    v_ceil = (0.5 - np.arctan2(room_height - camera_height, depth) / np.pi) * height
    return np.concatenate(
        [np.stack([u, v_floor], axis=1), np.stack([u, v_ceil], axis=1)], axis=0
    )


def corner_error_pixels(pred_pts, gt_pts, width=raster.DEFAULT_W, height=raster.DEFAULT_H):
    """Mean matched pixel distance over the larger corner count, normalized by
    the image diagonal; every unmatched corner costs one diagonal."""
    gt_pts = np.asarray(gt_pts, dtype=np.float64).reshape(-1, 2)
    pred_pts = np.asarray(pred_pts, dtype=np.float64).reshape(-1, 2)
    if len(gt_pts) == 0:
        raise ValidationError("ground-truth corner set is empty")
    diag = float(np.hypot(width, height))
    if len(pred_pts) == 0:
        return 1.0
    cost = np.linalg.norm(pred_pts[:, None, :] - gt_pts[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    matched = cost[rows, cols].sum()
    unmatched = max(len(gt_pts), len(pred_pts)) - len(rows)
    total = matched + unmatched * diag
    return float(total / max(len(gt_pts), len(pred_pts)) / diag)


def corners_from_layout(layout):
    """(longitude, depth) of the layout's polygon vertices, sorted by longitude."""
    p = layout.floor_polygon
    theta = np.arctan2(p[:, 0], p[:, 1])
    depth = np.hypot(p[:, 0], p[:, 1])
    order = np.argsort(theta)
    return np.stack([theta[order], depth[order]], axis=1)


def corner_error(pred, gt_layout, width=raster.DEFAULT_W, height=raster.DEFAULT_H, **corner_kwargs):
    """Corner error between a prediction's detected corners and a layout's vertices."""
    pred_corners = postproc.extract_corners(pred, **corner_kwargs)
    gt_corners = corners_from_layout(gt_layout)
    gt_pts = corners_to_pixels(
        gt_corners, gt_layout.room_height, gt_layout.camera_height, width, height
    )
    if len(pred_corners) == 0:
        return 1.0
    pred_pts = corners_to_pixels(pred_corners, pred.height, pred.camera_height, width, height)
    return corner_error_pixels(pred_pts, gt_pts, width, height)


def pixel_error(mask_a, mask_b):
    """Fraction of pixels whose class labels differ."""
    a = np.asarray(mask_a)
    b = np.asarray(mask_b)
    if a.shape != b.shape:
        raise ValidationError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(a != b))


def evaluate_prediction(pred, gt_layout, grid=IOU_GRID, width=raster.DEFAULT_W,
                        height=raster.DEFAULT_H):
    """Full MetricReport for one prediction against its ground-truth layout."""
    pred_poly = geometry.depths_to_xz(pred.depths)
    gt_depths = geometry.sample_floor_boundary(gt_layout, len(pred.depths))
    rmse, delta1 = depth_metrics(
        pred.depths, gt_depths, pred.camera_height, gt_layout.camera_height
    )
    return MetricReport(
        iou2d=iou2d(pred_poly, gt_layout.floor_polygon, grid),
        iou3d=iou3d((pred_poly, pred.height), gt_layout, grid),
        rmse=rmse,
        delta1=delta1,
        ce=corner_error(pred, gt_layout, width, height),
        pe=pixel_error(raster.rasterize(pred, width, height), raster.rasterize(gt_layout, width, height)),
    )
