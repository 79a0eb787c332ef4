"""Corner extraction from the normal-angle gradient signal, plus a generic
Manhattan-constraint rebuild of the floor polygon.

Corners are peaks of the angle between wall normals two samples apart. The
Manhattan rebuild estimates one dominant orientation for the whole room,
snaps every wall chord to the nearer of the two orthogonal directions, and
re-intersects consecutive wall lines; walls that end up collinear after
snapping (noise-split chords of one physical wall) are merged first.
"""

from __future__ import annotations

import numpy as np

from . import geometry
from .errors import ValidationError
from .layout import LayoutPrediction, RoomLayout

CORNER_THRESHOLD = 0.3  # radians on the normal-angle gradient
NMS_WINDOW = 5          # +- samples a peak must dominate


def _as_depths(pred_or_depths):
    if isinstance(pred_or_depths, LayoutPrediction):
        return pred_or_depths.depths
    return np.asarray(pred_or_depths, dtype=np.float64)


def _smooth_circular(signal, window):
    if window <= 1:
        return signal
    if window % 2 == 0:
        raise ValidationError(f"smoothing window must be odd, got {window}")
    kernel = np.ones(window) / window
    padded = np.concatenate([signal[-(window // 2):], signal, signal[: window // 2]])
    return np.convolve(padded, kernel, mode="valid")


def corner_indices(depths, threshold=CORNER_THRESHOLD, nms_window=NMS_WINDOW, smooth_window=1):
    """Indices whose gradient peak exceeds threshold and dominates its window.

    Ties inside a window resolve to the last tied index, so a corner landing
    exactly on a sample ray is reported once, at the sample on the corner.
    """
    if threshold <= 0:
        raise ValidationError(f"corner threshold must be positive, got {threshold}")
    normals = geometry.compute_normals(depths)
    grad = _smooth_circular(geometry.normal_angle_gradients(normals), smooth_window)
    n = len(grad)
    keep = grad > threshold
    for off in range(1, nms_window + 1):
        fwd = np.roll(grad, -off)   # grad[i + off]
        bwd = np.roll(grad, off)    # grad[i - off]
        keep &= (grad > fwd) & (grad >= bwd)
    return np.flatnonzero(keep)


def extract_corners(pred_or_depths, threshold=CORNER_THRESHOLD, nms_window=NMS_WINDOW, smooth_window=1):
    """Corner list as an array of (longitude, depth) rows sorted by longitude."""
    depths = _as_depths(pred_or_depths)
    idx = corner_indices(depths, threshold, nms_window, smooth_window)
    thetas = geometry.longitudes(len(depths))[idx]
    return np.stack([thetas, depths[idx]], axis=1) if len(idx) else np.zeros((0, 2))


def corner_polygon(pred_or_depths, **kwargs):
    """Floor polygon through the detected corner points."""
    depths = _as_depths(pred_or_depths)
    idx = corner_indices(depths, **kwargs)
    if len(idx) < 3:
        raise ValidationError(f"need >=3 corners to build a polygon, found {len(idx)}")
    pts = geometry.depths_to_xz(depths)
    return pts[idx]


def dominant_orientation(segment_vectors, lengths):
    """Length-weighted circular mean of segment angles, folded mod pi/2."""
    ang = np.arctan2(segment_vectors[:, 1], segment_vectors[:, 0])
    z = np.sum(lengths * np.exp(1j * 4.0 * ang))
    if abs(z) < 1e-12:
        raise ValidationError("wall directions cancel out; no dominant orientation")
    return float(np.angle(z) / 4.0)


def manhattanize(pred, camera_height=None, threshold=CORNER_THRESHOLD,
                 nms_window=NMS_WINDOW, smooth_window=5):
    """Rectilinear RoomLayout rebuilt from a prediction under one dominant orientation."""
    depths = _as_depths(pred)
    height = pred.height if isinstance(pred, LayoutPrediction) else None
    if height is None:
        raise ValidationError("manhattanize needs a LayoutPrediction with a room height")
    if camera_height is None:
        camera_height = pred.camera_height

    n = len(depths)
    idx = corner_indices(depths, threshold, nms_window, smooth_window)
    if len(idx) < 4:
        raise ValidationError(f"manhattan rebuild needs >=4 corners, found {len(idx)}")

    pts = geometry.depths_to_xz(depths)
    walls = []  # (member point index array, chord vector)
    for m in range(len(idx)):
        lo, hi = idx[m], idx[(m + 1) % len(idx)]
        members = np.arange(lo, hi + 1) % n if hi > lo else np.arange(lo, hi + n + 1) % n
        chord = pts[hi] - pts[lo]
        walls.append([members, chord])

    base = dominant_orientation(
        np.array([w[1] for w in walls]), np.array([np.linalg.norm(w[1]) for w in walls])
    )
    axes = (np.array([np.cos(base), np.sin(base)]), np.array([-np.sin(base), np.cos(base)]))

    def axis_of(chord):
        return 0 if abs(chord @ axes[0]) >= abs(chord @ axes[1]) else 1

    labeled = [[axis_of(chord), members] for members, chord in walls]

    # merge circular runs of equal axis label (noise-split chords of one wall)
    merged = []
    for axis, members in labeled:
        if merged and merged[-1][0] == axis:
            merged[-1][1] = np.concatenate([merged[-1][1], members])
        else:
            merged.append([axis, members])
    while len(merged) > 1 and merged[0][0] == merged[-1][0]:
        axis, members = merged.pop()
        merged[0][1] = np.concatenate([members, merged[0][1]])

    if len(merged) < 4 or len(merged) % 2 != 0:
        raise ValidationError(f"degenerate manhattan rebuild: {len(merged)} walls after merging")

    # wall line = snapped direction through the centroid of the wall's samples
    lines = [(axes[axis], pts[members].mean(axis=0)) for axis, members in merged]

    vertices = []
    for m in range(len(lines)):
        (u1, p1), (u2, p2) = lines[m], lines[(m + 1) % len(lines)]
        mat = np.stack([u1, -u2], axis=1)
        t = np.linalg.solve(mat, p2 - p1)
        vertices.append(p1 + t[0] * u1)

    return RoomLayout(np.array(vertices), room_height=height, camera_height=camera_height)
