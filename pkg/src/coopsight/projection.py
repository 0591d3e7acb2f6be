"""3D-to-2D grounding: project boxes into camera image planes.

The 2D box convention is the axis-aligned hull of the projected 3D box
corners (the loose box that detection IoU assumes), clipped to the image
rectangle. Pixel coordinates stay real-valued internally and are rounded
only at serialization time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .scene_model import CameraModel, ObjectBox3D, footprint_corners
from .util import CoopsightError

NEAR_PLANE_M = 0.1

# corner indices: 0-3 bottom face (ccw), 4-7 top face (ccw)
_BOX_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


class ProjectionError(CoopsightError):
    pass


@dataclass(frozen=True)
class Bbox2D:
    """Axis-aligned pixel box, origin at the image top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ProjectionError(f"non-finite bbox {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ProjectionError(f"bbox must be well-ordered, got {vals}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_int_list(self) -> list[int]:
        """Serialization form: 4 rounded integers."""
        return [
            int(round(self.x_min)),
            int(round(self.y_min)),
            int(round(self.x_max)),
            int(round(self.y_max)),
        ]

    @classmethod
    def from_values(cls, values) -> Optional["Bbox2D"]:
        """Build from an arbitrary 4-sequence; None when malformed."""
        try:
            vals = [float(v) for v in values]
        except (TypeError, ValueError):
            return None
        if len(vals) != 4:
            return None
        try:
            return cls(*vals)
        except ProjectionError:
            return None


def box_corners_3d(obj: ObjectBox3D) -> np.ndarray:
    """The 8 box corners in the ego frame, bottom face first, (8, 3)."""
    fp = footprint_corners(obj)
    z_lo = obj.center[2] - obj.dims[2] / 2.0
    z_hi = obj.center[2] + obj.dims[2] / 2.0
    bottom = np.column_stack([fp, np.full(4, z_lo)])
    top = np.column_stack([fp, np.full(4, z_hi)])
    return np.vstack([bottom, top])


def project_points(points_cam: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Perspective-project camera-frame points (N, 3) to pixels (N, 2)."""
    z = points_cam[:, 2]
    u = cam.fx * points_cam[:, 0] / z + cam.cx
    v = cam.fy * points_cam[:, 1] / z + cam.cy
    return np.column_stack([u, v])


def project_box(
    obj: ObjectBox3D,
    cam: CameraModel,
    near: float = NEAR_PLANE_M,
    clip: bool = True,
) -> Optional[Bbox2D]:
    """Axis-aligned hull of the projected box, or None when not visible.

    Corners in front of the near plane are projected directly; box edges
    that cross the plane are clipped at it first, which keeps the hull
    finite when part of the box sits behind the camera. With clip=True
    the hull is intersected with the image rectangle and a degenerate
    result collapses to None.
    """
    pts = box_corners_3d(obj)
    cam_pts = pts @ cam.rotation.T + cam.translation
    z = cam_pts[:, 2]
    if np.all(z <= near):
        return None
    keep = [cam_pts[i] for i in range(8) if z[i] >= near]
    for i, j in _BOX_EDGES:
        zi, zj = z[i], z[j]
        if (zi < near) != (zj < near):
            t = (near - zi) / (zj - zi)
            keep.append(cam_pts[i] + t * (cam_pts[j] - cam_pts[i]))
    if not keep:
        return None
    px = project_points(np.asarray(keep), cam)
    x_min, y_min = px.min(axis=0)
    x_max, y_max = px.max(axis=0)
    if clip:
        w, h = cam.image_size
        x_min, x_max = max(x_min, 0.0), min(x_max, float(w))
        y_min, y_max = max(y_min, 0.0), min(y_max, float(h))
        if x_min >= x_max or y_min >= y_max:
            return None
    return Bbox2D(float(x_min), float(y_min), float(x_max), float(y_max))


def iou(a: Bbox2D, b: Bbox2D) -> float:
    """Intersection over union of two pixel boxes, 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)
