"""Question-Rationale-Answer records: model, parser, generator, validator.

A record couples a natural-language question, a chain-of-thought rationale,
a prose answer, and a structured GroundedAnswer JSON object. The canonical
JSON key order is fixed (decision, hazard_level, count, grounded_objects;
object keys type, bbox, distance_m, sensor_id) so serialization round-trips
byte-for-byte.

Record text comes from deterministic templates with four phrasing variants
standing in for persona diversity; all grounded values are computed from
scene ground truth, which is why a freshly generated dataset always passes
the validator with zero rejections.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .occlusion import OcclusionLabel, angular_profile, covered_fraction
from .projection import Bbox2D, project_box
from .scene_model import (
    ObjectBox3D,
    Scene,
    range_to,
    sector_of,
)
from .util import CoopsightError, largest_remainder, stable_u64

DECISIONS = ("proceed", "monitor", "yield", "stop")
HAZARD_LEVELS = ("none", "low", "medium", "high")
TASKS = ("spatial", "counting", "maneuver")

_ANSWER_KEYS = ("decision", "hazard_level", "count", "grounded_objects")
_OBJECT_KEYS = ("type", "bbox", "distance_m", "sensor_id")

PERSONAS = ("dispatcher", "cautious", "terse", "formal")


class QraError(CoopsightError):
    pass


class ParseError(QraError):
    """Structured-answer parse failure; `reason` is a stable error code."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class GroundedObject:
    """One grounded hazard: class, 2D box, metric distance, sensor."""

    type: str
    bbox: tuple[float, float, float, float]
    distance_m: float
    sensor_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "bbox", tuple(self.bbox))
        if len(self.bbox) != 4:
            raise QraError(f"bbox must have 4 entries, got {self.bbox}")

    def bbox_2d(self) -> Optional[Bbox2D]:
        """The bbox as a validated Bbox2D; None when degenerate."""
        return Bbox2D.from_values(self.bbox)

    def to_dict(self) -> dict:
        bbox = [int(v) if float(v).is_integer() else float(v) for v in self.bbox]
        return {
            "type": self.type,
            "bbox": bbox,
            "distance_m": self.distance_m,
            "sensor_id": self.sensor_id,
        }


@dataclass(frozen=True)
class GroundedAnswer:
    """The structured half of an answer.

    count is stored as given rather than derived, because count vs. list
    consistency is exactly what the validation pipeline checks.
    """

    decision: str
    hazard_level: str
    count: int
    grounded_objects: tuple[GroundedObject, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "grounded_objects", tuple(self.grounded_objects))

    @property
    def is_consistent(self) -> bool:
        return self.count == len(self.grounded_objects)

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "hazard_level": self.hazard_level,
            "count": self.count,
            "grounded_objects": [o.to_dict() for o in self.grounded_objects],
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class QraRecord:
    scene_id: str
    task: str
    question: str
    rationale: str
    answer_text: str
    grounded: GroundedAnswer
    split_tag: str = "train"
    record_id: str = ""
    persona: str = PERSONAS[0]

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "scene_id": self.scene_id,
            "task": self.task,
            "persona": self.persona,
            "question": self.question,
            "rationale": self.rationale,
            "answer_text": self.answer_text,
            "grounded": self.grounded.to_dict(),
            "split_tag": self.split_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QraRecord":
        grounded, _ = _answer_from_mapping(d["grounded"], mode="strict")
        return cls(
            scene_id=d["scene_id"],
            task=d["task"],
            question=d["question"],
            rationale=d.get("rationale", ""),
            answer_text=d["answer_text"],
            grounded=grounded,
            split_tag=d.get("split_tag", "train"),
            record_id=d.get("record_id", ""),
            persona=d.get("persona", PERSONAS[0]),
        )


# --- parsing ----------------------------------------------------------------


def _coerce_number(value, key: str, repairs: list[str], lenient: bool):
    if isinstance(value, bool):
        raise ParseError("inconsistent", f"{key} must be a number")
    if isinstance(value, (int, float)):
        return value
    if lenient and isinstance(value, str):
        try:
            num = float(value)
        except ValueError:
            raise ParseError("inconsistent", f"{key} is not numeric: {value!r}") from None
        repairs.append(f"coerced:{key}")
        return num
    raise ParseError("inconsistent", f"{key} must be a number")


def _object_from_mapping(d: dict, repairs: list[str], lenient: bool) -> GroundedObject:
    if not isinstance(d, dict):
        raise ParseError("inconsistent", "grounded object must be a JSON object")
    unknown = set(d) - set(_OBJECT_KEYS)
    if unknown:
        if not lenient:
            raise ParseError("inconsistent", f"unknown object keys {sorted(unknown)}")
        repairs.extend(f"dropped:{k}" for k in sorted(unknown))
    missing = [k for k in _OBJECT_KEYS if k not in d]
    if missing:
        raise ParseError("inconsistent", f"object missing keys {missing}")
    if not isinstance(d["type"], str) or not isinstance(d["sensor_id"], str):
        raise ParseError("inconsistent", "type and sensor_id must be strings")
    bbox_raw = d["bbox"]
    if not isinstance(bbox_raw, (list, tuple)) or len(bbox_raw) != 4:
        raise ParseError("inconsistent", f"bbox must be a 4-array, got {bbox_raw!r}")
    bbox = tuple(
        float(_coerce_number(v, "bbox", repairs, lenient)) for v in bbox_raw
    )
    distance = float(_coerce_number(d["distance_m"], "distance_m", repairs, lenient))
    if not math.isfinite(distance):
        raise ParseError("inconsistent", "distance_m must be finite")
    if not lenient:
        if distance < 0:
            raise ParseError("inconsistent", "distance_m must be >= 0")
        if not (bbox[0] < bbox[2] and bbox[1] < bbox[3]):
            raise ParseError("inconsistent", f"bbox not well-ordered: {bbox}")
    return GroundedObject(
        type=d["type"], bbox=bbox, distance_m=distance, sensor_id=d["sensor_id"]
    )


def _answer_from_mapping(d: dict, mode: str) -> tuple[GroundedAnswer, list[str]]:
    lenient = mode == "lenient"
    repairs: list[str] = []
    unknown = set(d) - set(_ANSWER_KEYS)
    if unknown:
        if not lenient:
            raise ParseError("inconsistent", f"unknown keys {sorted(unknown)}")
        repairs.extend(f"dropped:{k}" for k in sorted(unknown))
    if "hazard_level" not in d and lenient:
        d = dict(d)
        d["hazard_level"] = "none"
        repairs.append("defaulted:hazard_level")
    missing = [k for k in _ANSWER_KEYS if k not in d]
    if missing:
        raise ParseError("inconsistent", f"missing keys {missing}")
    decision = d["decision"]
    if decision not in DECISIONS:
        raise ParseError("invalid-decision", f"unknown decision {decision!r}")
    hazard = d["hazard_level"]
    if hazard not in HAZARD_LEVELS:
        if lenient:
            repairs.append(f"defaulted:hazard_level")
            hazard = "none"
        else:
            raise ParseError("inconsistent", f"unknown hazard_level {hazard!r}")
    count_raw = _coerce_number(d["count"], "count", repairs, lenient)
    count = int(count_raw)
    if count != count_raw or count < 0:
        raise ParseError("inconsistent", f"count must be a non-negative integer")
    objects_raw = d["grounded_objects"]
    if not isinstance(objects_raw, list):
        raise ParseError("inconsistent", "grounded_objects must be an array")
    objects = tuple(_object_from_mapping(o, repairs, lenient) for o in objects_raw)
    if count != len(objects):
        if not lenient:
            raise ParseError(
                "inconsistent", f"count {count} != {len(objects)} grounded objects"
            )
        repairs.append("count-mismatch")
    return GroundedAnswer(decision, hazard, count, objects), repairs


def _last_json_object(text: str):
    """Last top-level JSON object in free text, or None.

    Scans left to right with raw_decode, skipping over the span of each
    successful parse so that nested objects are not mistaken for separate
    candidates.
    """
    decoder = json.JSONDecoder()
    best = None
    pos = 0
    while True:
        start = text.find("{", pos)
        if start < 0:
            break
        try:
            obj, end = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            pos = start + 1
            continue
        if isinstance(obj, dict):
            best = obj
            pos = start + max(end - start, 1)
        else:
            pos = start + 1
    return best


def parse_answer(text: str, mode: str = "strict") -> tuple[GroundedAnswer, list[str]]:
    """Parse a structured answer from text.

    strict: the whole input must be exactly one JSON object with exactly
    the schema keys. lenient (for raw model output): the last well-formed
    JSON object in the text is used, numeric strings are coerced, and a
    missing hazard_level defaults to "none"; every such fix is reported in
    the repairs list.

    Raises ParseError with reason "unparseable", "inconsistent", or
    "invalid-decision".
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode {mode!r}")
    if mode == "strict":
        stripped = text.strip()
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError("unparseable", exc.msg) from exc
        if not isinstance(data, dict):
            raise ParseError("unparseable", "top-level JSON value is not an object")
    else:
        data = _last_json_object(text)
        if data is None:
            raise ParseError("unparseable", "no JSON object found")
    return _answer_from_mapping(data, mode)


# --- ground-truth answer construction ----------------------------------------


@dataclass(frozen=True)
class DecisionPolicy:
    """Deterministic decision/hazard tiers over occluded-object distances.

    Nearest occluded object within stop_range forces "stop"/"high", within
    yield_range "yield"/"medium"; any occluded object at all means
    "monitor"/"low"; otherwise "proceed"/"none".
    """

    stop_range: float = 15.0
    yield_range: float = 30.0

    def decide(self, occluded_ranges: Sequence[float]) -> tuple[str, str]:
        if not occluded_ranges:
            return "proceed", "none"
        nearest = min(occluded_ranges)
        if nearest <= self.stop_range:
            return "stop", "high"
        if nearest <= self.yield_range:
            return "yield", "medium"
        return "monitor", "low"


@dataclass(frozen=True)
class TolerancePolicy:
    """Dynamic distance tolerance: max(abs_floor, rel_frac * true range)."""

    abs_floor: float = 2.0
    rel_frac: float = 0.05

    def tolerance(self, true_range: float) -> float:
        return max(self.abs_floor, self.rel_frac * true_range)


def _grounding_camera(scene: Scene, obj: ObjectBox3D) -> tuple[str, list[float]]:
    """Pick the camera that sees the object best and its serialized bbox.

    Infrastructure cameras are preferred (scene camera order puts the ego
    camera first, so iterate in reverse preference); when nothing sees the
    object a minimal placeholder box in the first camera is emitted -- the
    mIoU metric skips pairs whose ground truth is invisible anyway.
    """
    best: tuple[float, str, list[float]] | None = None
    for cam in scene.cameras[1:] + scene.cameras[:1]:
        bbox = project_box(obj, cam)
        if bbox is None:
            continue
        if best is None or bbox.area > best[0]:
            best = (bbox.area, cam.sensor_id, [float(v) for v in bbox.as_int_list()])
    if best is not None:
        return best[1], best[2]
    return scene.cameras[0].sensor_id, [0.0, 0.0, 1.0, 1.0]


def _grounded_for(scene: Scene, objs: Sequence[ObjectBox3D], policy: DecisionPolicy) -> GroundedAnswer:
    ordered = sorted(objs, key=lambda o: (range_to(o), o.id))
    grounded = []
    for obj in ordered:
        sensor_id, bbox = _grounding_camera(scene, obj)
        grounded.append(
            GroundedObject(
                type=obj.class_label,
                bbox=tuple(bbox),
                distance_m=round(range_to(obj), 2),
                sensor_id=sensor_id,
            )
        )
    decision, hazard = policy.decide([range_to(o) for o in ordered])
    return GroundedAnswer(
        decision=decision,
        hazard_level=hazard,
        count=len(grounded),
        grounded_objects=tuple(grounded),
    )


def primary_occluder(scene: Scene, target: ObjectBox3D) -> Optional[ObjectBox3D]:
    """The strictly closer object covering most of the target's interval."""
    target_range = range_to(target)
    target_profile = angular_profile(target)
    best = None
    best_cover = 0.0
    for other in scene.objects:
        if other.id == target.id or range_to(other) >= target_range:
            continue
        cover = covered_fraction(target_profile, [angular_profile(other)])
        if cover > best_cover or (cover == best_cover and best is not None and other.id < best.id):
            if cover > 0.0:
                best, best_cover = other, cover
    return best


_PLURALS = {
    "car": "cars",
    "van": "vans",
    "truck": "trucks",
    "bus": "buses",
    "pedestrian": "pedestrians",
    "bicycle": "bicycles",
    "motorcycle": "motorcycles",
}

_SPATIAL_QUESTIONS = (
    "Checking for hidden vehicles in the {dir} direction. Are there any?",
    "Could anything be concealed from the ego camera toward the {dir}? Please verify.",
    "Hidden hazards to the {dir}?",
    "Report any occluded objects in the {dir} direction of the intersection.",
)

_COUNT_QUESTIONS_ALL = (
    "How many objects are currently hidden from the ego vehicle?",
    "Please count every object the ego camera cannot see right now.",
    "Hidden object count?",
    "State the number of occluded objects at this intersection.",
)

_COUNT_QUESTIONS_CLASS = (
    "How many {plural} are currently hidden from the ego vehicle?",
    "Please count the {plural} the ego camera cannot see right now.",
    "Hidden {plural} count?",
    "State the number of occluded {plural} at this intersection.",
)

_MANEUVER_QUESTIONS = (
    "What should the ego vehicle do at this intersection?",
    "Given the current occlusions, which maneuver is safest for the ego vehicle?",
    "Next action?",
    "Recommend a driving maneuver for the ego vehicle in this scene.",
)

_DECISION_PHRASES = {
    "proceed": "proceed through the intersection",
    "monitor": "proceed while monitoring the hidden hazard",
    "yield": "yield until the hidden hazard clears",
    "stop": "stop immediately",
}


def _occluded_objects(scene: Scene, labels: Sequence[OcclusionLabel]) -> list[ObjectBox3D]:
    occluded_ids = {l.object_id for l in labels if l.occluded}
    return [o for o in scene.objects if o.id in occluded_ids]


def _hidden_clause(scene: Scene, obj: ObjectBox3D, heading: float) -> str:
    occ = primary_occluder(scene, obj)
    occ_name = occ.class_label if occ is not None else "closer obstacle"
    word = sector_of(obj, heading).word
    return (
        f"a {obj.class_label} is hidden by a {occ_name} in the {word} direction "
        f"at {range_to(obj):.0f} meters"
    )


def _rationale_for(scene: Scene, objs: Sequence[ObjectBox3D]) -> str:
    if not objs:
        return (
            "Every detected object keeps a clear angular profile from the ego "
            "origin, so nothing is obscured by a closer obstacle."
        )
    clauses = []
    for obj in objs:
        occ = primary_occluder(scene, obj)
        occ_name = occ.class_label if occ is not None else "closer obstacle"
        x, y, _ = obj.center
        clauses.append(
            f"A {occ_name} is visible, but a {obj.class_label} at x: {x:.2f}, "
            f"y: {y:.2f} is obscured by the {occ_name}, detected at "
            f"{range_to(obj):.2f} meters."
        )
    nearest = objs[0].class_label
    clauses.append(f"This {nearest} could be a potential hazard if not monitored.")
    return " ".join(clauses)


def _spatial_record(
    scene: Scene,
    occluded: list[ObjectBox3D],
    rng: np.random.Generator,
    policy: DecisionPolicy,
    heading: float,
    variant: int,
) -> tuple[str, str, str, GroundedAnswer]:
    sectors_with_hidden = sorted({sector_of(o, heading).value for o in occluded})
    if sectors_with_hidden and rng.uniform() < 0.8:
        sector_val = int(sectors_with_hidden[int(rng.integers(len(sectors_with_hidden)))])
    else:
        sector_val = int(rng.integers(8))
    from .scene_model import CardinalSector

    sector = CardinalSector(sector_val)
    hidden_here = sorted(
        (o for o in occluded if sector_of(o, heading) is sector),
        key=lambda o: (range_to(o), o.id),
    )
    question = _SPATIAL_QUESTIONS[variant].format(dir=sector.word)
    grounded = _grounded_for(scene, hidden_here, policy)
    if hidden_here:
        lead = _hidden_clause(scene, hidden_here[0], heading)
        extra = (
            "" if len(hidden_here) == 1 else f" {len(hidden_here) - 1} more are hidden there."
        )
        answer = f"Yes, {lead}.{extra}"
    else:
        answer = f"No, there are no hidden objects in the {sector.word} direction."
    rationale = _rationale_for(scene, hidden_here)
    return question, rationale, answer, grounded


def _counting_record(
    scene: Scene,
    occluded: list[ObjectBox3D],
    rng: np.random.Generator,
    policy: DecisionPolicy,
    variant: int,
) -> tuple[str, str, str, GroundedAnswer]:
    class_filter = None
    present = sorted({o.class_label for o in occluded})
    if present and rng.uniform() < 0.5:
        class_filter = present[int(rng.integers(len(present)))]
    if class_filter is None:
        question = _COUNT_QUESTIONS_ALL[variant]
        subjects = sorted(occluded, key=lambda o: (range_to(o), o.id))
        what = "objects"
    else:
        question = _COUNT_QUESTIONS_CLASS[variant].format(plural=_PLURALS[class_filter])
        subjects = sorted(
            (o for o in occluded if o.class_label == class_filter),
            key=lambda o: (range_to(o), o.id),
        )
        what = _PLURALS[class_filter]
    grounded = _grounded_for(scene, subjects, policy)
    n = len(subjects)
    if n == 0:
        answer = f"There are no hidden {what}."
    elif n == 1:
        answer = (
            f"There is 1 hidden {what[:-2] if what.endswith('es') else what.rstrip('s')}, "
            f"the nearest at {range_to(subjects[0]):.0f} meters."
        )
    else:
        answer = (
            f"There are {n} hidden {what}, the nearest at "
            f"{range_to(subjects[0]):.0f} meters."
        )
    rationale = _rationale_for(scene, subjects)
    return question, rationale, answer, grounded


def _maneuver_record(
    scene: Scene,
    occluded: list[ObjectBox3D],
    policy: DecisionPolicy,
    variant: int,
) -> tuple[str, str, str, GroundedAnswer]:
    subjects = sorted(occluded, key=lambda o: (range_to(o), o.id))
    question = _MANEUVER_QUESTIONS[variant]
    grounded = _grounded_for(scene, subjects, policy)
    phrase = _DECISION_PHRASES[grounded.decision]
    if subjects:
        answer = (
            f"The ego vehicle should {phrase}; the nearest hidden "
            f"{subjects[0].class_label} is at {range_to(subjects[0]):.0f} meters."
        )
    else:
        answer = f"The ego vehicle should {phrase}; no objects are hidden."
    rationale = _rationale_for(scene, subjects)
    return question, rationale, answer, grounded


def generate_records(
    scene: Scene,
    labels: Sequence[OcclusionLabel],
    mix: tuple[float, float, float] = (0.30, 0.30, 0.40),
    seed: int = 0,
    n_records: int = 10,
    policy: DecisionPolicy = DecisionPolicy(),
    heading: float = 0.0,
    include_rationale: bool = True,
) -> list[QraRecord]:
    """Deterministic template QRA records for one scene.

    Task counts follow largest-remainder apportionment of `mix`; a scene
    with no objects degenerates to counting records with count 0. All
    grounded values derive from scene ground truth and the occlusion
    labels, never from the phrasing.
    """
    label_ids = {l.object_id for l in labels}
    missing = [o.id for o in scene.objects if o.id not in label_ids]
    if missing:
        raise QraError(f"labels missing for objects {missing} in {scene.scene_id}")
    if abs(sum(mix) - 1.0) > 1e-6:
        raise QraError(f"task mix must sum to 1, got {mix}")
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, stable_u64(scene.scene_id)])
    counts = largest_remainder(n_records, mix)
    tasks = [t for t, c in zip(TASKS, counts) for _ in range(c)]
    if not scene.objects:
        tasks = ["counting"] * n_records
    occluded = _occluded_objects(scene, labels)
    records = []
    for idx, task in enumerate(tasks):
        variant = int(rng.integers(len(PERSONAS)))
        if task == "spatial":
            q, r, a, grounded = _spatial_record(scene, occluded, rng, policy, heading, variant)
        elif task == "counting":
            q, r, a, grounded = _counting_record(scene, occluded, rng, policy, variant)
        else:
            q, r, a, grounded = _maneuver_record(scene, occluded, policy, variant)
        records.append(
            QraRecord(
                scene_id=scene.scene_id,
                task=task,
                question=q,
                rationale=r if include_rationale else "",
                answer_text=a,
                grounded=grounded,
                split_tag=scene.split_tag,
                record_id=f"{scene.scene_id}-r{idx:03d}",
                persona=PERSONAS[variant],
            )
        )
    return records


def build_dataset(
    scenes: Sequence[Scene],
    labels_by_scene: dict[str, Sequence[OcclusionLabel]],
    mix: tuple[float, float, float] = (0.30, 0.30, 0.40),
    seed: int = 0,
    n_records: int = 0,
    records_per_scene: int = 10,
    policy: DecisionPolicy = DecisionPolicy(),
    include_rationale: bool = True,
) -> list[QraRecord]:
    """Records for a whole scene list.

    When n_records > 0 it is spread across scenes by largest remainder;
    otherwise every scene contributes records_per_scene records.
    """
    if n_records > 0 and scenes:
        per_scene = largest_remainder(n_records, [1.0 / len(scenes)] * len(scenes))
    else:
        per_scene = [records_per_scene] * len(scenes)
    out: list[QraRecord] = []
    for scene, n in zip(scenes, per_scene):
        out.extend(
            generate_records(
                scene,
                labels_by_scene[scene.scene_id],
                mix=mix,
                seed=seed,
                n_records=n,
                policy=policy,
                include_rationale=include_rationale,
            )
        )
    return out


# --- validation ---------------------------------------------------------------

REJECTION_REASONS = (
    "count-mismatch",
    "hallucinated-object",
    "unknown-sensor",
    "answer-distance-mismatch",
)

_DECIMAL_RE = re.compile(r"\d+\.\d+")


@dataclass
class ValidationResult:
    accepted: list[QraRecord]
    rejected: list[tuple[QraRecord, str]]

    @property
    def reason_counts(self) -> dict[str, int]:
        counts = {r: 0 for r in REJECTION_REASONS}
        for _, reason in self.rejected:
            counts[reason] += 1
        return {k: v for k, v in counts.items() if v}

    def report_dict(self) -> dict:
        return {
            "total": len(self.accepted) + len(self.rejected),
            "accepted": len(self.accepted),
            "rejected": len(self.rejected),
            "rejection_histogram": self.reason_counts,
        }


def _check_record(
    record: QraRecord, scene: Scene, tolerance: TolerancePolicy
) -> Optional[str]:
    """First failing check in a fixed order, or None when the record passes."""
    answer = record.grounded
    if answer.count != len(answer.grounded_objects):
        return "count-mismatch"
    ranges_by_class: dict[str, list[float]] = {}
    for obj in scene.objects:
        ranges_by_class.setdefault(obj.class_label, []).append(range_to(obj))
    for g in answer.grounded_objects:
        candidates = ranges_by_class.get(g.type, ())
        if not any(
            abs(g.distance_m - r) <= tolerance.tolerance(r) for r in candidates
        ):
            return "hallucinated-object"
    camera_ids = scene.camera_ids()
    for g in answer.grounded_objects:
        if g.sensor_id not in camera_ids:
            return "unknown-sensor"
    if answer.grounded_objects:
        m = _DECIMAL_RE.search(record.answer_text)
        if m is not None:
            stated = float(m.group(0))
            if abs(stated - answer.grounded_objects[0].distance_m) > 1.0:
                return "answer-distance-mismatch"
    return None


def validate_dataset(
    records: Sequence[QraRecord],
    scenes: dict[str, Scene],
    labels_by_scene: dict[str, Sequence[OcclusionLabel]],
    tolerance: TolerancePolicy = TolerancePolicy(),
) -> ValidationResult:
    """Cross-reference every record against ground truth.

    A record is rejected when (a) its count disagrees with its grounded
    object list, (b) some grounded object has no same-class scene object
    within the dynamic distance tolerance, (c) it references a sensor the
    scene does not have, or (d) the first decimal number in the answer
    text is more than 1 m away from the leading grounded distance.
    An unknown scene_id is a hard error, not a rejection.
    """
    result = ValidationResult(accepted=[], rejected=[])
    for record in records:
        if record.scene_id not in scenes:
            raise QraError(f"record {record.record_id!r} references unknown scene "
                           f"{record.scene_id!r}")
        if record.scene_id not in labels_by_scene:
            raise QraError(f"no occlusion labels for scene {record.scene_id!r}")
        reason = _check_record(record, scenes[record.scene_id], tolerance)
        if reason is None:
            result.accepted.append(record)
        else:
            result.rejected.append((record, reason))
    return result


# --- fault injection (fixture support for the validation pipeline) -----------


def inject_faults(
    records: Sequence[QraRecord], n_faults: int, seed: int = 0
) -> tuple[list[QraRecord], dict[str, str]]:
    """Corrupt n_faults records, one detectable fault each.

    Fault classes cycle through the four rejection reasons; classes that
    need a grounded object are only applied to eligible records. Returns
    the new record list plus record_id -> expected rejection reason.
    """
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    order = rng.permutation(len(records))
    with_objects = [i for i in order if records[i].grounded.grounded_objects]
    any_record = list(order)
    quotas = largest_remainder(n_faults, [0.25, 0.25, 0.25, 0.25])
    plan: list[tuple[int, str]] = []
    used: set[int] = set()

    def take(pool: list[int], reason: str, n: int) -> None:
        for i in pool:
            if n == 0:
                break
            if i in used:
                continue
            used.add(i)
            plan.append((int(i), reason))
            n -= 1
        if n:
            raise QraError(f"not enough eligible records to inject {reason} faults")

    take(any_record, "count-mismatch", quotas[0])
    take(with_objects, "hallucinated-object", quotas[1])
    take(with_objects, "unknown-sensor", quotas[2])
    take(with_objects, "answer-distance-mismatch", quotas[3])

    out = list(records)
    fault_map: dict[str, str] = {}
    for idx, reason in plan:
        rec = out[idx]
        answer = rec.grounded
        if reason == "count-mismatch":
            answer = replace(answer, count=answer.count + 1)
            rec = replace(rec, grounded=answer)
        elif reason == "hallucinated-object":
            objs = list(answer.grounded_objects)
            objs[0] = replace(objs[0], distance_m=round(objs[0].distance_m + 100.0, 2))
            rec = replace(rec, grounded=replace(answer, grounded_objects=tuple(objs)))
        elif reason == "unknown-sensor":
            objs = list(answer.grounded_objects)
            objs[0] = replace(objs[0], sensor_id="sensor_not_in_scene")
            rec = replace(rec, grounded=replace(answer, grounded_objects=tuple(objs)))
        else:
            bogus = answer.grounded_objects[0].distance_m + 77.0
            rec = replace(
                rec, answer_text=rec.answer_text + f" Estimated range {bogus:.2f} meters."
            )
        out[idx] = rec
        fault_map[rec.record_id] = reason
    return out, fault_map


# --- record i/o ---------------------------------------------------------------


def write_records(path, records: Sequence[QraRecord]) -> int:
    from .jsonl import write_jsonl

    return write_jsonl(path, (r.to_dict() for r in records))


def read_records(path) -> list[QraRecord]:
    from .jsonl import read_jsonl

    return [QraRecord.from_dict(d) for d in read_jsonl(path)]
