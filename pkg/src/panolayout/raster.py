"""Equirectangular class masks and grid rasterization of floor polygons.

Mask generation is a pure function of the per-column horizon depth and the
two heights, so a layout and a prediction carrying the same depths produce
bit-identical masks. Layouts are reduced to per-column depths by exact ray
casting at the column-center longitudes; predictions by circular linear
interpolation of their depth sequence.
"""

from __future__ import annotations

import numpy as np

from . import geometry
from .errors import ValidationError
from .layout import LayoutPrediction, RoomLayout

CEILING, WALL, FLOOR = 0, 1, 2
DEFAULT_W, DEFAULT_H = 1024, 512


def column_longitudes(width):
    """Longitude at each pixel-column center."""
    return 2.0 * np.pi * ((np.arange(width) + 0.5) / width - 0.5)


def row_latitudes(height):
    """Latitude at each pixel-row center; row 0 is the zenith edge."""
    return np.pi * (0.5 - (np.arange(height) + 0.5) / height)


def interp_depths_circular(depths, thetas):
    """Linear interpolation of an equal-longitude depth sequence at arbitrary longitudes."""
    depths = np.asarray(depths, dtype=np.float64)
    n = len(depths)
    sample_t = geometry.longitudes(n)
    # unwrap query longitudes onto the sample range, then lerp with wraparound
    span = 2.0 * np.pi
    pos = (np.asarray(thetas) - sample_t[0]) / span * n
    pos = np.mod(pos, n)
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    hi = (lo + 1) % n
    return depths[lo] * (1.0 - frac) + depths[hi] * frac


def column_depths(source, width):
    """Per-column horizon depth for a RoomLayout or LayoutPrediction."""
    thetas = column_longitudes(width)
    if isinstance(source, RoomLayout):
        return geometry.ray_polygon_depths(source.floor_polygon, thetas)
    if isinstance(source, LayoutPrediction):
        return interp_depths_circular(source.depths, thetas)
    raise ValidationError(f"cannot rasterize object of type {type(source).__name__}")


def _heights_of(source):
    if isinstance(source, RoomLayout):
        return source.camera_height, source.room_height
    return source.camera_height, source.height


def boundary_latitudes(source, width):
    """(floor, ceiling) boundary latitude per column; floor is below the horizon."""
    depths = column_depths(source, width)
    camera_h, room_h = _heights_of(source)
    ceil_offset = room_h - camera_h
    if ceil_offset <= 0:
        raise ValidationError("room height must exceed camera height")
    phi_floor = -np.arctan2(camera_h, depths)
    phi_ceil = np.arctan2(ceil_offset, depths)
    return phi_floor, phi_ceil


def rasterize(source, width=DEFAULT_W, height=DEFAULT_H):
    """Per-pixel {ceiling, wall, floor} mask, shape (height, width), uint8.

    Columns are monotone by construction: ceiling rows above wall rows above
    floor rows.
    """
    if width <= 0 or height <= 0:
        raise ValidationError("mask dimensions must be positive")
    phi_floor, phi_ceil = boundary_latitudes(source, width)
    lat = row_latitudes(height)[:, None]
    mask = np.full((height, width), WALL, dtype=np.uint8)
    mask[lat > phi_ceil[None, :]] = CEILING
    mask[lat < phi_floor[None, :]] = FLOOR
    return mask


# floor-plan grid rasterization (for IoU) -----------------------------------

def polygon_grid_mask(polygon, x_range, z_range, grid):
    """Boolean occupancy of a polygon on a grid of cell centers (even-odd rule)."""
    p = np.asarray(polygon, dtype=np.float64)
    if polygon_degenerate(p):
        raise ValidationError("cannot rasterize a degenerate (zero-area) polygon")
    x0, x1 = x_range
    z0, z1 = z_range
    xs = x0 + (np.arange(grid) + 0.5) * (x1 - x0) / grid
    zs = z0 + (np.arange(grid) + 0.5) * (z1 - z0) / grid
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    inside = np.zeros((grid, grid), dtype=bool)
    q = np.roll(p, -1, axis=0)
    for (ax, az), (bx, bz) in zip(p, q):
        crosses = (az > gz) != (bz > gz)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (gz - az) * (bx - ax) / (bz - az)
        inside ^= crosses & (gx < xint)
    return inside


def polygon_degenerate(polygon):
    p = np.asarray(polygon, dtype=np.float64)
    if len(p) < 3:
        return True
    q = np.roll(p, -1, axis=0)
    area = 0.5 * abs(float(np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])))
    return area < 1e-12


def joint_grid_masks(poly_a, poly_b, grid=1024):
    """Rasterize two polygons onto one shared grid over their joint bounding box."""
    pa = np.asarray(poly_a, dtype=np.float64)
    pb = np.asarray(poly_b, dtype=np.float64)
    allp = np.vstack([pa, pb])
    x0, x1 = allp[:, 0].min(), allp[:, 0].max()
    z0, z1 = allp[:, 1].min(), allp[:, 1].max()
    pad = 1e-6 + 0.005 * max(x1 - x0, z1 - z0)
    x_range = (x0 - pad, x1 + pad)
    z_range = (z0 - pad, z1 + pad)
    return (
        polygon_grid_mask(pa, x_range, z_range, grid),
        polygon_grid_mask(pb, x_range, z_range, grid),
    )
