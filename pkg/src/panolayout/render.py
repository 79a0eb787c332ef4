"""Deterministic SVG rendering: boundary curves on the equirectangular frame,
a top-down floor plan, and an optional corner-signal strip."""

from __future__ import annotations

import numpy as np

from . import geometry, raster
from .layout import LayoutPrediction, RoomLayout

BOUNDARY_COLOR = "#00a000"
PLAN_COLOR = "#d00000"
PLAN_SIZE = 360
STRIP_HEIGHT = 120


def _fmt(x):
    return f"{x:.4f}"


def _polyline(points, color, width=2.0):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return f'<polyline fill="none" stroke="{color}" stroke-width="{_fmt(width)}" points="{pts}"/>'


def _plan_points(polygon):
    p = np.asarray(polygon, dtype=np.float64)
    span = max(np.ptp(p[:, 0]), np.ptp(p[:, 1]), np.abs(p).max() * 2.0 / 1.6) * 1.15
    scale = PLAN_SIZE / span
    cx = (p[:, 0].min() + p[:, 0].max()) / 2.0
    cz = (p[:, 1].min() + p[:, 1].max()) / 2.0
    # x right, z up on screen
    return [(PLAN_SIZE / 2 + (x - cx) * scale, PLAN_SIZE / 2 - (z - cz) * scale) for x, z in p], (
        PLAN_SIZE / 2 - cx * scale,
        PLAN_SIZE / 2 + cz * scale,
    )


def _floor_polygon_of(source):
    if isinstance(source, RoomLayout):
        return source.floor_polygon
    return geometry.depths_to_xz(source.depths)


def render_boundaries(source, width=raster.DEFAULT_W, height=raster.DEFAULT_H, show_gradients=False):
    """SVG text with both boundary polylines (one point per pixel column),
    the floor plan, and optionally the normal-angle gradient curve."""
    phi_floor, phi_ceil = raster.boundary_latitudes(source, width)
    cols = np.arange(width) + 0.5
    to_row = lambda phi: (0.5 - phi / np.pi) * height

    plan_offset = height + 10
    total_h = plan_offset + PLAN_SIZE + 10
    strip_offset = None
    if show_gradients:
        strip_offset = total_h
        total_h += STRIP_HEIGHT + 10

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" '
        f'viewBox="0 0 {width} {total_h}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#f2f2f2" stroke="#888"/>',
        f'<line x1="0" y1="{_fmt(height / 2)}" x2="{width}" y2="{_fmt(height / 2)}" '
        f'stroke="#bbbbbb" stroke-width="1"/>',
        _polyline(zip(cols, to_row(phi_ceil)), BOUNDARY_COLOR),
        _polyline(zip(cols, to_row(phi_floor)), BOUNDARY_COLOR),
    ]

    plan_pts, cam = _plan_points(_floor_polygon_of(source))
    pts = " ".join(f"{_fmt(x)},{_fmt(y + plan_offset)}" for x, y in plan_pts)
    parts.append(f'<polygon fill="none" stroke="{PLAN_COLOR}" stroke-width="2.0" points="{pts}"/>')
    parts.append(
        f'<circle cx="{_fmt(cam[0])}" cy="{_fmt(cam[1] + plan_offset)}" r="4" fill="{PLAN_COLOR}"/>'
    )

    if show_gradients:
        depths = (
            source.depths
            if isinstance(source, LayoutPrediction)
            else geometry.sample_floor_boundary(source, min(256, width))
        )
        grads = geometry.normal_angle_gradients(geometry.compute_normals(depths))
        xs = (np.arange(len(grads)) + 0.5) * width / len(grads)
        ys = strip_offset + STRIP_HEIGHT * (1.0 - grads / np.pi)
        parts.append(
            f'<rect x="0" y="{strip_offset}" width="{width}" height="{STRIP_HEIGHT}" '
            f'fill="#ffffff" stroke="#888"/>'
        )
        parts.append(_polyline(zip(xs, ys), "#0000c0", 1.5))

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
