"""Procedural four-way-intersection scenes with controllable occlusion.

Scenes are static frames: the ego sits at the origin on the south approach,
the intersection center lies straight ahead, and infrastructure cameras
watch from the corners. Objects are rejection-sampled so footprints never
overlap; an occluder bias places a configurable fraction of objects
directly inside an existing object's BEV shadow, which is what makes the
occlusion rate controllable.

Generation is a pure function of GenConfig: a fixed seed reproduces
byte-identical serialized output, and each scene derives its own RNG
stream so scenes are independent of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .occlusion import angular_profile
from .scene_model import (
    CLASS_LABELS,
    CameraModel,
    ObjectBox3D,
    Scene,
    footprint_corners,
    range_to,
)
from .util import CoopsightError, largest_remainder, stable_u64, wrap_angle


class SceneGenError(CoopsightError):
    pass


# nominal (length, width, height); per-object jitter is applied on top.
# pedestrians and bicycles stay small so they end up natural occludees.
CLASS_DIMS = {
    "car": (4.5, 1.9, 1.6),
    "van": (5.6, 2.1, 2.3),
    "truck": (8.5, 2.6, 3.3),
    "bus": (11.0, 2.9, 3.1),
    "pedestrian": (0.6, 0.6, 1.75),
    "bicycle": (1.8, 0.6, 1.5),
    "motorcycle": (2.2, 0.8, 1.4),
}

DEFAULT_CLASS_MIX = {
    "car": 0.45,
    "van": 0.12,
    "truck": 0.08,
    "bus": 0.05,
    "pedestrian": 0.15,
    "bicycle": 0.10,
    "motorcycle": 0.05,
}

# intersection layout (ego frame, meters)
_CENTER = (20.0, 0.0)
_HALF_ROAD = 7.0
_CORNER_OFFSET = 10.5
_MIN_RANGE = 7.0
_MAX_RANGE = 58.0
_CLEARANCE = 0.25

_INFRA_SENSOR_IDS = (
    "s110_camera_basler_south1_8mm",
    "s110_camera_basler_south2_8mm",
    "s110_camera_basler_north_8mm",
    "s110_camera_basler_east_8mm",
)
_EGO_SENSOR_ID = "vehicle_camera_basler_16mm"

_IMAGE_SIZE = (1920, 1200)
_FOCAL_PX = 1400.0


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the synthetic scene generator."""

    seed: int = 0
    n_scenes: int = 10
    objects_per_scene: tuple[int, int] = (5, 12)
    occluder_bias: float = 0.35
    class_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CLASS_MIX))
    camera_count: int = 2

    def __post_init__(self) -> None:
        lo, hi = self.objects_per_scene
        if lo > hi or lo < 0:
            raise SceneGenError(f"empty objects_per_scene range {self.objects_per_scene}")
        if not 0.0 <= self.occluder_bias <= 1.0:
            raise SceneGenError(f"occluder_bias must be in [0, 1], got {self.occluder_bias}")
        if not 1 <= self.camera_count <= 4:
            raise SceneGenError(f"camera_count must be 1-4, got {self.camera_count}")
        if self.n_scenes < 0:
            raise SceneGenError("n_scenes must be >= 0")
        unknown = set(self.class_mix) - set(CLASS_LABELS)
        if unknown:
            raise SceneGenError(f"unknown classes in class_mix: {sorted(unknown)}")
        total = sum(self.class_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise SceneGenError(f"class_mix must sum to 1, got {total}")


def _scene_rng(config: GenConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([config.seed & 0xFFFFFFFFFFFFFFFF, index])


def look_at_camera(
    sensor_id: str,
    position: Sequence[float],
    target: Sequence[float],
    image_size: tuple[int, int] = _IMAGE_SIZE,
    focal_px: float = _FOCAL_PX,
) -> CameraModel:
    """Camera at `position` with its optical axis through `target`."""
    eye = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(fwd)
    if norm < 1e-9:
        raise SceneGenError("camera position coincides with its target")
    z_axis = fwd / norm
    up = np.array([0.0, 0.0, 1.0])
    x_axis = np.cross(z_axis, up)
    x_norm = np.linalg.norm(x_axis)
    if x_norm < 1e-9:
        raise SceneGenError("camera looking straight up/down is unsupported")
    x_axis /= x_norm
    y_axis = np.cross(z_axis, x_axis)
    rotation = np.vstack([x_axis, y_axis, z_axis])
    translation = -rotation @ eye
    w, h = image_size
    intrinsics = np.array(
        [[focal_px, 0.0, w / 2.0], [0.0, focal_px, h / 2.0], [0.0, 0.0, 1.0]]
    )
    return CameraModel(
        sensor_id=sensor_id,
        intrinsics=intrinsics,
        rotation=rotation,
        translation=translation,
        image_size=image_size,
    )


def _make_cameras(config: GenConfig, rng: np.random.Generator) -> tuple[CameraModel, ...]:
    cx, cy = _CENTER
    corners = (
        (cx - _CORNER_OFFSET, cy - _CORNER_OFFSET),
        (cx - _CORNER_OFFSET, cy + _CORNER_OFFSET),
        (cx + _CORNER_OFFSET, cy + _CORNER_OFFSET),
        (cx + _CORNER_OFFSET, cy - _CORNER_OFFSET),
    )
    cams = [
        look_at_camera(_EGO_SENSOR_ID, (0.5, 0.0, 1.6), (cx, cy, 0.5)),
    ]
    for i in range(config.camera_count):
        px, py = corners[i]
        elevation = float(rng.uniform(5.0, 8.0))
        cams.append(
            look_at_camera(_INFRA_SENSOR_IDS[i], (px, py, elevation), (cx, cy, 0.0))
        )
    return tuple(cams)


def _separated(corners_a: np.ndarray, corners_b: np.ndarray, margin: float) -> bool:
    """Separating-axis test for two convex quads, with a clearance margin."""
    for quad in (corners_a, corners_b):
        for k in range(4):
            edge = quad[(k + 1) % 4] - quad[k]
            axis = np.array([-edge[1], edge[0]])
            axis /= np.linalg.norm(axis)
            proj_a = corners_a @ axis
            proj_b = corners_b @ axis
            if proj_a.max() + margin <= proj_b.min() or proj_b.max() + margin <= proj_a.min():
                return True
    return False


def footprints_overlap(a: ObjectBox3D, b: ObjectBox3D, margin: float = 0.0) -> bool:
    return not _separated(footprint_corners(a), footprint_corners(b), margin)


# sampling regions: (x_lo, x_hi, y_lo, y_hi, yaw_options)
_REGIONS = (
    (_MIN_RANGE, _CENTER[0] - _HALF_ROAD, -5.5, 5.5, (0.0, math.pi)),       # south arm
    (_CENTER[0] + _HALF_ROAD, _MAX_RANGE, -5.5, 5.5, (0.0, math.pi)),       # north arm
    (_CENTER[0] - 5.5, _CENTER[0] + 5.5, -48.0, -_HALF_ROAD, (math.pi / 2, -math.pi / 2)),  # east arm
    (_CENTER[0] - 5.5, _CENTER[0] + 5.5, _HALF_ROAD, 48.0, (math.pi / 2, -math.pi / 2)),    # west arm
    (_CENTER[0] - 6.5, _CENTER[0] + 6.5, -6.5, 6.5, None),                  # junction box
)


def _sample_pose(rng: np.random.Generator) -> tuple[float, float, float]:
    x_lo, x_hi, y_lo, y_hi, yaws = _REGIONS[int(rng.integers(len(_REGIONS)))]
    x = float(rng.uniform(x_lo, x_hi))
    y = float(rng.uniform(y_lo, y_hi))
    if yaws is None:
        yaw = float(rng.uniform(-math.pi, math.pi))
    else:
        yaw = float(yaws[int(rng.integers(len(yaws)))]) + float(rng.uniform(-0.15, 0.15))
    return x, y, yaw


def _sample_shadow_pose(
    rng: np.random.Generator, occluder: ObjectBox3D
) -> tuple[float, float, float]:
    """Pose inside the occluder's BEV shadow wedge: same bearing band,
    strictly greater range."""
    profile = angular_profile(occluder)
    parts = profile.parts
    start = parts[0][0] if len(parts) == 1 else parts[1][0]
    measure = profile.measure
    # stay in the central band of the wedge so the new center is solidly inside
    theta = start + measure * float(rng.uniform(0.2, 0.8))
    occ_extent = math.hypot(occluder.dims[0], occluder.dims[1]) / 2.0
    r = range_to(occluder) + occ_extent + float(rng.uniform(2.5, 14.0))
    r = min(r, _MAX_RANGE)
    yaw = float(rng.uniform(-math.pi, math.pi))
    return r * math.cos(theta), r * math.sin(theta), yaw


def _sample_class(rng: np.random.Generator, mix: dict[str, float]) -> str:
    labels = [c for c in CLASS_LABELS if mix.get(c, 0.0) > 0.0]
    probs = np.array([mix[c] for c in labels])
    probs = probs / probs.sum()
    return labels[int(rng.choice(len(labels), p=probs))]


def _gen_scene(config: GenConfig, index: int) -> Scene:
    rng = _scene_rng(config, index)
    cameras = _make_cameras(config, rng)
    lo, hi = config.objects_per_scene
    n_objects = int(rng.integers(lo, hi + 1))
    objects: list[ObjectBox3D] = []
    for obj_idx in range(n_objects):
        label = _sample_class(rng, config.class_mix)
        base = CLASS_DIMS[label]
        dims = tuple(float(b * (1.0 + rng.uniform(-0.08, 0.08))) for b in base)
        in_shadow = bool(objects) and float(rng.uniform()) < config.occluder_bias
        occluder = objects[int(rng.integers(len(objects)))] if in_shadow else None
        placed = False
        for _ in range(1000):
            if occluder is not None:
                x, y, yaw = _sample_shadow_pose(rng, occluder)
            else:
                x, y, yaw = _sample_pose(rng)
            if math.hypot(x, y) < _MIN_RANGE or math.hypot(x, y) > _MAX_RANGE:
                continue
            candidate = ObjectBox3D(
                id=f"obj_{obj_idx:03d}",
                class_label=label,
                center=(x, y, dims[2] / 2.0),
                dims=dims,
                yaw=wrap_angle(yaw),
            )
            if all(
                not footprints_overlap(candidate, other, margin=_CLEARANCE)
                for other in objects
            ):
                objects.append(candidate)
                placed = True
                break
        if not placed:
            raise SceneGenError(
                f"scene too dense: object {obj_idx} rejected 1000 times "
                f"(scene index {index})"
            )
    return Scene(
        scene_id=f"scene_{index:05d}",
        objects=tuple(objects),
        cameras=cameras,
        split_tag="train",
    )


def generate(config: GenConfig) -> list[Scene]:
    """Generate config.n_scenes scenes, deterministic in config."""
    return [_gen_scene(config, i) for i in range(config.n_scenes)]


def stratified_split(
    scenes: Sequence[Scene], fractions: tuple[float, float, float]
) -> list[Scene]:
    """Tag whole scenes train/val/test per the requested fractions.

    Counts come from largest-remainder apportionment, so round sizes hit
    the fractions exactly; assignment order is a stable hash of scene_id,
    which keeps the split independent of input order. Split granularity
    is the scene: every record derived from a scene inherits its tag.
    """
    if len(scenes) < 3:
        raise SceneGenError(f"need at least 3 scenes to split, got {len(scenes)}")
    if len(fractions) != 3:
        raise SceneGenError("fractions must be (train, val, test)")
    if abs(sum(fractions) - 1.0) > 1e-6:
        raise SceneGenError(f"fractions must sum to 1, got {sum(fractions)}")
    counts = largest_remainder(len(scenes), fractions)
    shuffled = sorted(scenes, key=lambda s: stable_u64(s.scene_id))
    tagged: dict[str, str] = {}
    cursor = 0
    for tag, count in zip(("train", "val", "test"), counts):
        for scene in shuffled[cursor : cursor + count]:
            tagged[scene.scene_id] = tag
        cursor += count
    return [s.with_split(tagged[s.scene_id]) for s in scenes]


def split_manifest(scenes: Sequence[Scene]) -> dict[str, str]:
    """Sidecar mapping scene_id -> split tag."""
    return {s.scene_id: s.split_tag for s in scenes}
