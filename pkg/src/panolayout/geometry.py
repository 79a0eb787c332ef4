"""Panoramic and planar geometry for the horizon-depth layout representation.

Conventions, fixed project-wide:
  * camera at the origin; x and z span the horizontal plane
  * y is vertical and increases DOWNWARD, so the floor plane sits at
    y = +camera_height and the ceiling at y = camera_height - room_height
  * longitude theta picks the horizontal direction (sin(theta), cos(theta))
  * sample i (1-based) of an N-sequence has theta_i = 2*pi*(i/N - 1/2)
  * boundary traversal follows increasing theta; rotating a unit edge
    direction (x, z) by a quarter turn to (z, -x) then points the wall
    normal at the camera
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def longitude_of_index(i, n):
    """Longitude of 1-based sample i out of n; i = n maps to +pi exactly."""
    if not 1 <= i <= n:
        raise ValidationError(f"sample index {i} outside 1..{n}")
    return 2.0 * np.pi * (i / n - 0.5)


def longitudes(n):
    """All n sample longitudes as an array (1-based formula, ascending)."""
    return 2.0 * np.pi * ((np.arange(1, n + 1)) / n - 0.5)


def horizon_depth(point):
    """Distance from the vertical camera axis: sqrt(x^2 + z^2); y ignored."""
    x, _, z = point
    return float(np.hypot(x, z))


def depth_to_point(depth, theta, floor_y):
    """3D floor-boundary point (d*sin(theta), floor_y, d*cos(theta))."""
    if depth <= 0:
        raise ValidationError(f"horizon depth must be positive, got {depth}")
    return (depth * np.sin(theta), floor_y, depth * np.cos(theta))


def depths_to_xz(depths, n=None):
    """Vectorized boundary points in the horizontal plane, shape (N, 2)."""
    depths = np.asarray(depths, dtype=np.float64)
    theta = longitudes(n or depths.shape[0])
    return np.stack([depths * np.sin(theta), depths * np.cos(theta)], axis=1)


def latitude_to_depth(phi, height):
    """Horizon depth of a boundary seen at |latitude| phi, vertical offset `height`."""
    phi = abs(float(phi))
    if not 0.0 < phi < np.pi / 2:
        raise ValidationError(f"latitude {phi} outside (0, pi/2); depth undefined")
    return height / np.tan(phi)


def depth_to_latitude(depth, height):
    """Inverse of latitude_to_depth: phi = atan(height / depth)."""
    if depth <= 0:
        raise ValidationError(f"horizon depth must be positive, got {depth}")
    return float(np.arctan2(height, depth))


def ray_polygon_depths(polygon, thetas):
    """First-hit distance from the origin along (sin t, cos t) for each longitude.

    Vectorized over all rays x all edges; the nearest positive parametric hit
    wins. Each edge owns its starting vertex (s in [0, 1)) so a ray through a
    shared vertex scores exactly one hit.
    """
    poly = np.asarray(polygon, dtype=np.float64)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a  # (E, 2)
    u = np.stack([np.sin(thetas), np.cos(thetas)], axis=1)  # (R, 2)

    # Solve origin + t*u = a + s*e per (ray, edge): cross-product form.
    denom = u[:, None, 0] * (-e[None, :, 1]) - u[:, None, 1] * (-e[None, :, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (a[None, :, 0] * (-e[None, :, 1]) - a[None, :, 1] * (-e[None, :, 0])) / denom
        s = (u[:, None, 0] * a[None, :, 1] - u[:, None, 1] * a[None, :, 0]) / denom
    valid = (np.abs(denom) > 1e-14) & (t > 1e-12) & (s >= 0.0) & (s < 1.0)
    t = np.where(valid, t, np.inf)
    hits = t.min(axis=1)
    if np.any(~np.isfinite(hits)):
        raise ValidationError("a sampling ray misses the polygon; camera outside or malformed boundary")
    return hits


def sample_floor_boundary(layout, n):
    """Horizon-depth sequence of a layout's floor polygon at n equal-longitude rays."""
    from .layout import RoomLayout  # cycle guard

    if isinstance(layout, RoomLayout):
        polygon = layout.floor_polygon
        if not layout.origin_inside():
            raise ValidationError("camera origin lies outside the floor polygon")
    else:
        polygon = np.asarray(layout, dtype=np.float64)
    return ray_polygon_depths(polygon, longitudes(n))


def compute_normals(depths, floor_y=None):
    """Unit wall normals in the xz-plane from a circular horizon-depth sequence.

    Edge i runs from boundary point i to point i+1 (wrapping); its direction,
    turned by the fixed quarter-turn (x, z) -> (z, -x), faces the camera.
    floor_y is irrelevant to the horizontal normal and accepted only for
    signature symmetry with the 3D point construction.
    """
    depths = np.asarray(depths, dtype=np.float64)
    if np.any(depths <= 0):
        raise ValidationError("all horizon depths must be positive")
    pts = depths_to_xz(depths)
    edges = np.roll(pts, -1, axis=0) - pts
    norms = np.linalg.norm(edges, axis=1)
    if np.any(norms < 1e-12):
        raise ValidationError("coincident consecutive boundary points give a zero-length wall edge")
    e = edges / norms[:, None]
    return np.stack([e[:, 1], -e[:, 0]], axis=1)


def normal_angle_gradients(normals):
    """Angle between normals two steps apart (circular), in [0, pi].

    The dot product is clamped to [-1, 1] before arccos so floating-point
    overshoot cannot produce NaN.
    """
    n = np.asarray(normals, dtype=np.float64)
    prev_n = np.roll(n, 1, axis=0)
    next_n = np.roll(n, -1, axis=0)
    dots = np.clip(np.sum(prev_n * next_n, axis=1), -1.0, 1.0)
    return np.arccos(dots)
