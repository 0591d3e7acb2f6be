"""Core scene types shared by every other module.

Ego-local frame convention: x forward, y left, z up, with the ego origin at
(0, 0, 0). All lengths are meters, all angles radians. Compass words (for
question/answer phrasing) assume the ego faces north unless a heading
offset is supplied.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .jsonl import read_jsonl, write_jsonl
from .util import TWO_PI, CoopsightError, wrap_angle

CLASS_LABELS = ("car", "van", "truck", "bus", "pedestrian", "bicycle", "motorcycle")
SPLIT_TAGS = ("train", "val", "test")


class SceneModelError(CoopsightError):
    """Invalid geometric or semantic input."""


@dataclass(frozen=True)
class ObjectBox3D:
    """Oriented 3D bounding box in the ego-local frame.

    center is the box midpoint (z at half height for on-ground objects),
    dims is (length, width, height) with length along the heading axis,
    yaw rotates about +z and is normalized to [-pi, pi).
    """

    id: str
    class_label: str
    center: tuple[float, float, float]
    dims: tuple[float, float, float]
    yaw: float

    def __post_init__(self) -> None:
        if self.class_label not in CLASS_LABELS:
            raise SceneModelError(f"unknown class_label {self.class_label!r}")
        if len(self.center) != 3 or len(self.dims) != 3:
            raise SceneModelError("center and dims must be 3-tuples")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "dims", tuple(float(v) for v in self.dims))
        if not all(math.isfinite(v) for v in self.center + self.dims):
            raise SceneModelError(f"non-finite box geometry for {self.id!r}")
        if min(self.dims) <= 0.0:
            raise SceneModelError(f"dims must be > 0, got {self.dims}")
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))


class CardinalSector(enum.Enum):
    """Eight 45-degree sectors centered on the compass directions."""

    N = 0
    NE = 1
    E = 2
    SE = 3
    S = 4
    SW = 5
    W = 6
    NW = 7

    @property
    def word(self) -> str:
        return _SECTOR_WORDS[self.value]

    @classmethod
    def from_bearing(cls, bearing: float) -> "CardinalSector":
        """Sector of a compass bearing (radians, 0 = north, clockwise).

        Boundary bearings fall into the clockwise-next sector, e.g. a
        bearing of exactly 22.5 degrees is NE, not N.
        """
        idx = int(math.floor(((bearing + math.pi / 8.0) % TWO_PI) / (math.pi / 4.0)))
        return cls(idx % 8)


_SECTOR_WORDS = (
    "north",
    "northeast",
    "east",
    "southeast",
    "south",
    "southwest",
    "west",
    "northwest",
)


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera with a rigid ego-to-camera transform.

    Camera frame uses the usual computer-vision axes: +z optical axis,
    +x right, +y down. x_cam = rotation @ x_ego + translation.
    """

    sensor_id: str
    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        k = np.asarray(self.intrinsics, dtype=np.float64)
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if k.shape != (3, 3) or r.shape != (3, 3):
            raise SceneModelError("intrinsics and rotation must be 3x3")
        w, h = self.image_size
        if not (k[0, 0] > 0 and k[1, 1] > 0):
            raise SceneModelError("focal lengths must be positive")
        if not (0 < k[0, 2] < w and 0 < k[1, 2] < h):
            raise SceneModelError("principal point must lie inside the image")
        if k[0, 1] != 0.0 or np.any(k[2] != (0.0, 0.0, 1.0)):
            raise SceneModelError("intrinsics must be zero-skew with unit last row")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise SceneModelError(
                f"extrinsic rotation for {self.sensor_id!r} is not a proper rotation"
            )
        for arr in (k, r, t):
            arr.setflags(write=False)
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "image_size", (int(w), int(h)))

    @property
    def fx(self) -> float:
        return float(self.intrinsics[0, 0])

    @property
    def fy(self) -> float:
        return float(self.intrinsics[1, 1])

    @property
    def cx(self) -> float:
        return float(self.intrinsics[0, 2])

    @property
    def cy(self) -> float:
        return float(self.intrinsics[1, 2])


@dataclass(frozen=True, eq=False)
class Scene:
    """One static frame: ego pose (implicit origin), objects, cameras."""

    scene_id: str
    objects: tuple[ObjectBox3D, ...]
    cameras: tuple[CameraModel, ...]
    split_tag: str = "train"

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "cameras", tuple(self.cameras))
        if not self.cameras:
            raise SceneModelError(f"scene {self.scene_id!r} has no cameras")
        if self.split_tag not in SPLIT_TAGS:
            raise SceneModelError(f"invalid split_tag {self.split_tag!r}")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneModelError(f"duplicate object ids in scene {self.scene_id!r}")

    def object_by_id(self, object_id: str) -> ObjectBox3D:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def camera_ids(self) -> set[str]:
        return {c.sensor_id for c in self.cameras}

    def with_split(self, split_tag: str) -> "Scene":
        return replace(self, split_tag=split_tag)


def range_to(obj: ObjectBox3D) -> float:
    """Ground-plane range from the ego origin to the box center."""
    return math.hypot(obj.center[0], obj.center[1])


def bearing_of_point(x: float, y: float, heading: float = 0.0) -> float:
    """Compass bearing of an ego-frame point, in [-pi, pi).

    `heading` is the compass bearing of the ego's forward (+x) axis;
    0 means the ego faces north, pi/2 east. With y pointing left, the
    clockwise angle off the forward axis is atan2(-y, x).
    """
    if x == 0.0 and y == 0.0:
        raise SceneModelError("undefined bearing at the ego origin")
    return wrap_angle(heading + math.atan2(-y, x))


def sector_of_point(x: float, y: float, heading: float = 0.0) -> CardinalSector:
    return CardinalSector.from_bearing(bearing_of_point(x, y, heading))


def sector_of(obj: ObjectBox3D, heading: float = 0.0) -> CardinalSector:
    """Compass sector of the object center, for direction phrasing."""
    return sector_of_point(obj.center[0], obj.center[1], heading)


def footprint_corners(obj: ObjectBox3D) -> np.ndarray:
    """Ground-plane corners of the yaw-rotated length x width rectangle.

    Returns a (4, 2) array in counter-clockwise order.
    """
    hl, hw = obj.dims[0] / 2.0, obj.dims[1] / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]], dtype=np.float64)
    c, s = math.cos(obj.yaw), math.sin(obj.yaw)
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    return local @ rot.T + np.array(obj.center[:2], dtype=np.float64)


# --- serialization ----------------------------------------------------------
#
# Scenes travel as JSON Lines, one scene per line. Field names match the
# type definitions; lengths in meters, angles in radians.


def object_to_dict(obj: ObjectBox3D) -> dict:
    return {
        "id": obj.id,
        "class_label": obj.class_label,
        "center": list(obj.center),
        "dims": list(obj.dims),
        "yaw": obj.yaw,
    }


def object_from_dict(d: dict) -> ObjectBox3D:
    return ObjectBox3D(
        id=d["id"],
        class_label=d["class_label"],
        center=tuple(d["center"]),
        dims=tuple(d["dims"]),
        yaw=d["yaw"],
    )


def camera_to_dict(cam: CameraModel) -> dict:
    return {
        "sensor_id": cam.sensor_id,
        "intrinsics": [[float(v) for v in row] for row in cam.intrinsics],
        "extrinsics": {
            "rotation": [[float(v) for v in row] for row in cam.rotation],
            "translation": [float(v) for v in cam.translation],
        },
        "image_size": [cam.image_size[0], cam.image_size[1]],
    }


def camera_from_dict(d: dict) -> CameraModel:
    ext = d["extrinsics"]
    return CameraModel(
        sensor_id=d["sensor_id"],
        intrinsics=np.array(d["intrinsics"], dtype=np.float64),
        rotation=np.array(ext["rotation"], dtype=np.float64),
        translation=np.array(ext["translation"], dtype=np.float64),
        image_size=(d["image_size"][0], d["image_size"][1]),
    )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "scene_id": scene.scene_id,
        "objects": [object_to_dict(o) for o in scene.objects],
        "cameras": [camera_to_dict(c) for c in scene.cameras],
        "split_tag": scene.split_tag,
    }


def scene_from_dict(d: dict) -> Scene:
    return Scene(
        scene_id=d["scene_id"],
        objects=tuple(object_from_dict(o) for o in d["objects"]),
        cameras=tuple(camera_from_dict(c) for c in d["cameras"]),
        split_tag=d.get("split_tag", "train"),
    )


def write_scenes(path: str | Path, scenes: Iterable[Scene]) -> int:
    return write_jsonl(path, (scene_to_dict(s) for s in scenes))


def read_scenes(path: str | Path) -> list[Scene]:
    return [scene_from_dict(d) for d in read_jsonl(path)]


def scenes_by_id(scenes: Sequence[Scene]) -> dict[str, Scene]:
    return {s.scene_id: s for s in scenes}
