"""Room layout data model, JSON serialization, and synthetic ground truth.

A layout is a simple floor polygon in the horizontal (x, z) plane with the
camera at the origin strictly inside, plus a room height and a camera height
(camera-to-floor distance). Generated polygons are star-shaped around the
origin (origin inside the polygon kernel) so the sampled boundary sees every
wall; loaded layouts only have to be simple with the origin inside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

DEFAULT_CAMERA_HEIGHT = 1.6


def _cross2(ux, uz, vx, vz):
    return ux * vz - uz * vx


def polygon_area(polygon):
    """Unsigned shoelace area."""
    p = np.asarray(polygon, dtype=np.float64)
    q = np.roll(p, -1, axis=0)
    return 0.5 * abs(float(np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])))


def _segments_properly_intersect(p1, p2, p3, p4):
    d1 = _cross2(p4[0] - p3[0], p4[1] - p3[1], p1[0] - p3[0], p1[1] - p3[1])
    d2 = _cross2(p4[0] - p3[0], p4[1] - p3[1], p2[0] - p3[0], p2[1] - p3[1])
    d3 = _cross2(p2[0] - p1[0], p2[1] - p1[1], p3[0] - p1[0], p3[1] - p1[1])
    d4 = _cross2(p2[0] - p1[0], p2[1] - p1[1], p4[0] - p1[0], p4[1] - p1[1])
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_is_simple(polygon):
    """True when no two non-adjacent edges intersect (small-V quadratic test)."""
    p = np.asarray(polygon, dtype=np.float64)
    v = len(p)
    if v < 3:
        return False
    for i in range(v):
        a1, a2 = p[i], p[(i + 1) % v]
        if np.allclose(a1, a2):
            return False
        for j in range(i + 1, v):
            if j == i or (j + 1) % v == i or (i + 1) % v == j:
                continue
            if _segments_properly_intersect(a1, a2, p[j], p[(j + 1) % v]):
                return False
    return True


def point_in_polygon(point, polygon):
    """Even-odd rule; boundary points are not guaranteed either way."""
    px, pz = point
    p = np.asarray(polygon, dtype=np.float64)
    q = np.roll(p, -1, axis=0)
    inside = False
    for (x1, z1), (x2, z2) in zip(p, q):
        if (z1 > pz) != (z2 > pz):
            xint = x1 + (pz - z1) * (x2 - x1) / (z2 - z1)
            if px < xint:
                inside = not inside
    return inside


def origin_in_kernel(polygon):
    """True when the origin sees the whole boundary (star-shaped layout)."""
    p = np.asarray(polygon, dtype=np.float64)
    q = np.roll(p, -1, axis=0)
    e = q - p
    side = _cross2(e[:, 0], e[:, 1], -p[:, 0], -p[:, 1])
    shoelace = float(np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]))
    ori = 1.0 if shoelace > 0 else -1.0
    return bool(np.all(ori * side > 0))


@dataclass
class RoomLayout:
    """Floor polygon (meters, camera at origin) + room height + camera height."""

    floor_polygon: np.ndarray
    room_height: float
    camera_height: float = DEFAULT_CAMERA_HEIGHT

    def __post_init__(self):
        self.floor_polygon = np.asarray(self.floor_polygon, dtype=np.float64)
        self.room_height = float(self.room_height)
        self.camera_height = float(self.camera_height)
        self.validate()

    def validate(self):
        p = self.floor_polygon
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
            raise ValidationError(f"floor polygon must be (V>=3, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("floor polygon has non-finite vertices")
        if not np.isfinite(self.room_height) or self.room_height <= 0:
            raise ValidationError(f"room height must be positive, got {self.room_height}")
        if not np.isfinite(self.camera_height) or self.camera_height <= 0:
            raise ValidationError(f"camera height must be positive, got {self.camera_height}")
        if self.camera_height >= self.room_height:
            raise ValidationError(
                f"camera height {self.camera_height} must be below room height {self.room_height}"
            )
        if not polygon_is_simple(p):
            raise ValidationError("floor polygon is not simple (self-intersecting or degenerate)")
        if not point_in_polygon((0.0, 0.0), p):
            raise ValidationError("camera origin is not strictly inside the floor polygon")

    def origin_inside(self):
        return point_in_polygon((0.0, 0.0), self.floor_polygon)

    @property
    def ceiling_offset(self):
        """Vertical distance from camera up to the ceiling plane."""
        return self.room_height - self.camera_height

    def rotated(self, angle):
        """Layout spun about the vertical axis: every point's longitude grows by angle."""
        c, s = np.cos(angle), np.sin(angle)
        x, z = self.floor_polygon[:, 0], self.floor_polygon[:, 1]
        poly = np.stack([x * c + z * s, z * c - x * s], axis=1)
        return RoomLayout(poly, self.room_height, self.camera_height)

    def to_json_dict(self):
        return {
            "camera_height_m": self.camera_height,
            "room_height_m": self.room_height,
            "floor_polygon_xz": [[float(x), float(z)] for x, z in self.floor_polygon],
        }

    @classmethod
    def from_json_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ValidationError("layout document must be a JSON object")
        required = {"camera_height_m", "room_height_m", "floor_polygon_xz"}
        keys = set(doc)
        if keys != required:
            missing = required - keys
            extra = keys - required
            raise ValidationError(f"layout schema mismatch: missing={sorted(missing)} unknown={sorted(extra)}")
        poly = doc["floor_polygon_xz"]
        if not isinstance(poly, list) or any(not isinstance(v, list) or len(v) != 2 for v in poly):
            raise ValidationError("floor_polygon_xz must be a list of [x, z] pairs")
        return cls(np.array(poly, dtype=np.float64), doc["room_height_m"], doc["camera_height_m"])


@dataclass
class LayoutPrediction:
    """Predicted horizon-depth sequence plus room height."""

    depths: np.ndarray
    height: float
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=np.float64)
        self.height = float(self.height)
        if self.depths.ndim != 1 or len(self.depths) < 4:
            raise ValidationError(f"depth sequence must be 1-d with >=4 entries, got {self.depths.shape}")
        if np.any(~np.isfinite(self.depths)) or np.any(self.depths <= 0):
            raise ValidationError("predicted depths must be finite and positive")
        if not np.isfinite(self.height) or self.height <= 0:
            raise ValidationError(f"predicted height must be positive, got {self.height}")


def write_layout(layout, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(layout.to_json_dict(), f, indent=1)
        f.write("\n")


def read_layout(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"invalid JSON in {path}: {e}") from e
    return RoomLayout.from_json_dict(doc)


# synthetic ground truth ----------------------------------------------------

KNOWN_SHAPES = ("cuboid", "l", "t", "rectilinear-8", "rectilinear-10", "rectilinear-12")


@dataclass
class GenSpec:
    """Knobs for the synthetic room generator; all lengths in meters."""

    shapes: tuple = ("cuboid", "l")
    extent_range: tuple = (2.0, 6.0)
    height_range: tuple = (2.4, 3.2)
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    margin: float = 0.5       # min clearance from origin to any wall line
    min_segment: float = 0.3  # min wall segment length

    def __post_init__(self):
        for s in self.shapes:
            if s not in KNOWN_SHAPES:
                raise ValidationError(f"unknown shape {s!r}; known: {KNOWN_SHAPES}")
        lo, hi = self.extent_range
        if not 0 < lo <= hi:
            raise ValidationError(f"bad extent range {self.extent_range}")
        need = 2 * self.margin + 2 * self.min_segment
        if lo < need:
            raise ValidationError(
                f"extent {lo} too small for margin {self.margin} and min segment {self.min_segment}"
            )
        hlo, hhi = self.height_range
        if not self.camera_height < hlo <= hhi:
            raise ValidationError("height range must sit above the camera height")


def _half_extents(rng, spec):
    """Sample one full extent and split it around the origin with margins."""
    lo, hi = spec.extent_range
    total = rng.uniform(lo, hi)
    reserve = spec.margin + spec.min_segment
    near = rng.uniform(reserve, total - reserve)
    return near, total - near


def _notch(rng, spec, toward_x, toward_z):
    """Notch corner position for the rectangle corner at (toward_x, toward_z).

    The returned point keeps the origin inside the polygon kernel: both
    coordinates stay at least `margin` away from the origin on the corner's
    side, and at least `min_segment` away from the outer walls.
    """
    nx = rng.uniform(spec.margin, abs(toward_x) - spec.min_segment) * np.sign(toward_x)
    nz = rng.uniform(spec.margin, abs(toward_z) - spec.min_segment) * np.sign(toward_z)
    return nx, nz


def _build_polygon(rng, spec, shape):
    west, east = _half_extents(rng, spec)
    south, north = _half_extents(rng, spec)
    a, b, c, d = -west, east, -south, north  # wall lines x=a, x=b, z=c, z=d

    if shape == "cuboid":
        return [(a, c), (a, d), (b, d), (b, c)]

    if shape == "l":
        nx, nz = _notch(rng, spec, b, d)
        return [(a, c), (a, d), (nx, d), (nx, nz), (b, nz), (b, c)]

    if shape == "t":
        lx, lz = _notch(rng, spec, a, d)
        rx, rz = _notch(rng, spec, b, d)
        return [(a, c), (a, lz), (lx, lz), (lx, d), (rx, d), (rx, rz), (b, rz), (b, c)]

    # rectilinear-k: notch (k - 4) / 2 corners, chosen deterministically
    n_notches = (int(shape.split("-")[1]) - 4) // 2
    corners = [(b, d), (a, d), (a, c), (b, c)]
    picked = list(rng.permutation(4)[:n_notches])
    cuts = {}
    for ci in picked:
        cx, cz = corners[ci]
        cuts[ci] = _notch(rng, spec, cx, cz)

    verts = []
    # walk the rectangle corner cycle in increasing-longitude order,
    # replacing each notched corner with its three-vertex cut
    order = [((a, c), 2), ((a, d), 1), ((b, d), 0), ((b, c), 3)]
    for (cx, cz), ci in order:
        if ci in cuts:
            nx, nz = cuts[ci]
            # the cut replaces corner (cx, cz): wall reaching it along z stops
            # at nz, crosses to nx, then resumes along x from nz
            verts.extend(_corner_cut(cx, cz, nx, nz))
        else:
            verts.append((cx, cz))
    return verts


def _corner_cut(cx, cz, nx, nz):
    """Three vertices replacing rectangle corner (cx, cz) with notch corner (nx, nz),
    emitted in increasing-longitude order around the origin."""
    cands = [(cx, nz), (nx, nz), (nx, cz)]
    return sorted(cands, key=lambda v: np.arctan2(v[0], v[1]))


def generate_synthetic(seed, spec=None):
    """Deterministic star-shaped rectilinear room for a seed."""
    spec = spec or GenSpec()
    rng = np.random.default_rng(seed)
    shape = spec.shapes[int(rng.integers(len(spec.shapes)))]
    poly = np.array(_build_polygon(rng, spec, shape), dtype=np.float64)
    height = float(rng.uniform(*spec.height_range))
    layout = RoomLayout(poly, height, spec.camera_height)
    if not origin_in_kernel(poly):
        raise ValidationError(f"generator produced a non-star-shaped polygon for seed {seed}")
    return layout
