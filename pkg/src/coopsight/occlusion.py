"""BEV angular occlusion labeling with an independent ray-casting check.

An object's occlusion status is decided purely in the ground plane: its
footprint subtends an angular interval at the ego origin, and coverage is
the fraction of that interval intersected by the union of the intervals of
strictly closer objects. Height profiles are deliberately ignored, so a
tall vehicle behind a low one still counts as hidden.

Two independent implementations are provided:

  label_scene      exact interval arithmetic (endpoint sweep), production path
  ray_cast_oracle  sampled ray casting against footprint segments, verifier

Both apply the same depth rule: only objects with strictly smaller center
range can occlude; exact range ties never occlude each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scene_model import ObjectBox3D, Scene, footprint_corners, range_to
from .util import CoopsightError, wrap_angle

DEFAULT_TAU = 0.7


class OcclusionError(CoopsightError):
    pass


class EgoInsideObjectError(OcclusionError):
    """The ego origin lies inside a footprint; bearings are undefined."""


@dataclass(frozen=True)
class AngularInterval:
    """An arc on the unit circle, stored as non-wrapping sub-intervals.

    Each part satisfies lo <= hi with both endpoints in [-pi, pi]; an arc
    that crosses the seam is split in two. Total measure is < pi for any
    finite off-origin footprint.
    """

    parts: tuple[tuple[float, float], ...]

    @classmethod
    def from_arc(cls, start: float, measure: float) -> "AngularInterval":
        """Normalize the arc [start, start + measure] into sub-intervals."""
        if not 0.0 < measure < math.pi:
            raise OcclusionError(f"arc measure must be in (0, pi), got {measure}")
        lo = wrap_angle(start)
        hi = lo + measure
        if hi <= math.pi:
            return cls(parts=((lo, hi),))
        return cls(parts=((-math.pi, hi - 2.0 * math.pi), (lo, math.pi)))

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.parts)

    def contains(self, angle: float, tol: float = 1e-12) -> bool:
        a = wrap_angle(angle)
        return any(lo - tol <= a <= hi + tol for lo, hi in self.parts) or any(
            # a point at -pi also matches a part ending at +pi
            a + 2.0 * math.pi <= hi + tol and a + 2.0 * math.pi >= lo - tol
            for lo, hi in self.parts
        )


@dataclass(frozen=True)
class OcclusionLabel:
    """Per-object verdict: hidden or not, how covered, and depth order."""

    object_id: str
    occluded: bool
    coverage: float
    depth_rank: int


def _origin_inside_footprint(obj: ObjectBox3D) -> bool:
    dx, dy = -obj.center[0], -obj.center[1]
    c, s = math.cos(obj.yaw), math.sin(obj.yaw)
    along = dx * c + dy * s
    across = -dx * s + dy * c
    return abs(along) <= obj.dims[0] / 2.0 and abs(across) <= obj.dims[1] / 2.0


def angular_profile(obj: ObjectBox3D) -> AngularInterval:
    """Minimal arc covering the bearings of all four footprint corners.

    For a convex footprint with the origin strictly outside, the extreme
    bearings are attained at corners, so the corner arc covers the whole
    footprint. Wraparound across the +-pi seam is handled by measuring
    corner angles relative to the first corner.
    """
    if _origin_inside_footprint(obj):
        raise EgoInsideObjectError(f"ego inside object {obj.id!r}")
    corners = footprint_corners(obj)
    angles = np.arctan2(corners[:, 1], corners[:, 0])
    ref = float(angles[0])
    rel = [wrap_angle(float(a) - ref) for a in angles]
    lo_rel, hi_rel = min(rel), max(rel)
    measure = hi_rel - lo_rel
    if measure >= math.pi:
        # only possible with the origin inside or on the hull; the inside
        # test above uses the closed footprint, so treat as the same error
        raise EgoInsideObjectError(f"ego inside object {obj.id!r}")
    return AngularInterval.from_arc(ref + lo_rel, measure)


def _merged_parts(intervals: Sequence[AngularInterval]) -> list[tuple[float, float]]:
    """Union of sub-intervals via endpoint sweep; output sorted, disjoint."""
    parts = sorted(p for iv in intervals for p in iv.parts)
    merged: list[tuple[float, float]] = []
    for lo, hi in parts:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def _intersection_measure(
    target: AngularInterval, union_parts: Sequence[tuple[float, float]]
) -> float:
    total = 0.0
    for lo, hi in target.parts:
        for ulo, uhi in union_parts:
            total += max(0.0, min(hi, uhi) - max(lo, ulo))
    return total


def covered_fraction(
    target: AngularInterval, occluders: Sequence[AngularInterval]
) -> float:
    """Fraction of `target` covered by the union of `occluders`, in [0, 1]."""
    m = target.measure
    if m <= 0.0 or not occluders:
        return 0.0
    frac = _intersection_measure(target, _merged_parts(occluders)) / m
    return min(1.0, max(0.0, frac))


def _depth_order(scene: Scene) -> list[tuple[float, ObjectBox3D]]:
    """Objects sorted near to far; exact range ties break by id."""
    return sorted(
        ((range_to(o), o) for o in scene.objects), key=lambda ro: (ro[0], ro[1].id)
    )


def label_scene(scene: Scene, tau: float = DEFAULT_TAU) -> list[OcclusionLabel]:
    """Label every object via exact angular-interval coverage.

    Objects are processed near to far; an object is occluded when the
    union of strictly closer objects' intervals covers at least `tau`
    of its own interval. The nearest object always has coverage 0.
    """
    if not 0.0 < tau <= 1.0:
        raise OcclusionError(f"tau must be in (0, 1], got {tau}")
    ordered = _depth_order(scene)
    profiles = {obj.id: angular_profile(obj) for _, obj in ordered}
    labels: list[OcclusionLabel] = []
    for rank, (rng, obj) in enumerate(ordered):
        closer = [profiles[o.id] for r, o in ordered if r < rng]
        coverage = covered_fraction(profiles[obj.id], closer)
        labels.append(
            OcclusionLabel(
                object_id=obj.id,
                occluded=coverage >= tau,
                coverage=coverage,
                depth_rank=rank,
            )
        )
    return labels


def _ray_segment_hits(angles: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Nearest positive hit distance per ray against a footprint boundary.

    angles: (R,) ray bearings from the origin. corners: (4, 2) polygon.
    Returns (R,) distances, +inf where a ray misses the polygon.
    """
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (R, 2)
    p = corners
    q = np.roll(corners, -1, axis=0)
    e = q - p  # (4, 2)
    # solve t*d = p + s*e for each (ray, segment) pair via 2D cross products
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    cross_pe = p[None, :, 0] * e[None, :, 1] - p[None, :, 1] * e[None, :, 0]
    cross_pd = p[None, :, 0] * d[:, None, 1] - p[None, :, 1] * d[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_pe / denom
        s = cross_pd / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (s >= -1e-9) & (s <= 1.0 + 1e-9)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def ray_cast_oracle(
    scene: Scene, n_rays: int = 512, tau: float = DEFAULT_TAU
) -> list[OcclusionLabel]:
    """Sampled ray-casting verifier for label_scene.

    Casts `n_rays` rays per object, spread uniformly across the object's
    angular profile; a ray is blocked when some strictly closer object's
    footprint is hit at a smaller distance than the target footprint.
    Coverage is the blocked fraction, thresholded with the same tau rule.
    """
    if n_rays < 64:
        raise OcclusionError(f"n_rays must be >= 64, got {n_rays}")
    if not 0.0 < tau <= 1.0:
        raise OcclusionError(f"tau must be in (0, 1], got {tau}")
    ordered = _depth_order(scene)
    corner_map = {obj.id: footprint_corners(obj) for _, obj in ordered}
    labels: list[OcclusionLabel] = []
    for rank, (rng, obj) in enumerate(ordered):
        profile = angular_profile(obj)
        # unwrapped arc start: the sub-interval layout encodes the seam split
        if len(profile.parts) == 1:
            start = profile.parts[0][0]
        else:
            start = profile.parts[1][0]
        measure = profile.measure
        angles = start + (np.arange(n_rays) + 0.5) * (measure / n_rays)
        t_target = _ray_segment_hits(angles, corner_map[obj.id])
        # rays inside the profile must hit the target; guard numeric grazing
        t_target = np.where(np.isfinite(t_target), t_target, rng)
        blocked = np.zeros(n_rays, dtype=bool)
        for other_rng, other in ordered:
            if other_rng >= rng:
                break
            t_occ = _ray_segment_hits(angles, corner_map[other.id])
            blocked |= t_occ < t_target - 1e-9
        coverage = float(np.count_nonzero(blocked)) / n_rays
        labels.append(
            OcclusionLabel(
                object_id=obj.id,
                occluded=coverage >= tau,
                coverage=coverage,
                depth_rank=rank,
            )
        )
    return labels


def label_to_dict(scene_id: str, label: OcclusionLabel) -> dict:
    return {
        "scene_id": scene_id,
        "object_id": label.object_id,
        "occluded": label.occluded,
        "coverage": label.coverage,
        "depth_rank": label.depth_rank,
    }


def label_from_dict(d: dict) -> OcclusionLabel:
    return OcclusionLabel(
        object_id=d["object_id"],
        occluded=bool(d["occluded"]),
        coverage=float(d["coverage"]),
        depth_rank=int(d["depth_rank"]),
    )
