"""Scene annotation loading and eligibility filtering.

Annotation format (documented in the README): one JSON document per dataset,
either a single JSON array of scene records or line-delimited JSON (one scene
per line).  Per scene:

    {
      "scene_id": "...",
      "image": "relative/path.png",
      "width": 2048, "height": 1024,
      "objects": [{"bbox": [x_min, y_min, x_max, y_max],
                   "pixel_area": 4200,          # optional, falls back to bbox area
                   "label": "dog"}],            # optional
      "road_mask": "relative/mask.png",          # optional, nonzero = drivable
      "location_group": 3                        # optional
    }

Unknown fields are ignored.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import BBox

logger = logging.getLogger(__name__)

MIN_OBJECT_PIXELS = 3000


class AnnotationError(ValueError):
    """Raised when an annotation file is malformed or violates an invariant."""


@dataclass(frozen=True)
class GroundTruthObject:
    bbox: BBox
    pixel_area: int
    class_label: str | None = None

    def __post_init__(self) -> None:
        if self.pixel_area < 1:
            raise AnnotationError(f"pixel_area must be >= 1, got {self.pixel_area}")
        if self.pixel_area > self.bbox.area:
            raise AnnotationError(
                f"pixel_area {self.pixel_area} exceeds bbox area {self.bbox.area}"
            )


@dataclass(eq=False)
class SceneRecord:
    scene_id: str
    image_path: Path
    width: int
    height: int
    objects: list[GroundTruthObject] = field(default_factory=list)
    road_mask: np.ndarray | None = None
    road_mask_path: Path | None = None
    location_group: int | None = None

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise AnnotationError(
                f"scene {self.scene_id!r}: image dimensions must be positive"
            )
        for obj in self.objects:
            b = obj.bbox
            if b.x_min < 0 or b.y_min < 0 or b.x_max > self.width or b.y_max > self.height:
                raise AnnotationError(
                    f"scene {self.scene_id!r}: bbox {b.as_list()} exceeds "
                    f"image bounds {self.width}x{self.height}"
                )
        if self.road_mask is not None:
            if self.road_mask.shape != (self.height, self.width):
                raise AnnotationError(
                    f"scene {self.scene_id!r}: road mask shape {self.road_mask.shape} "
                    f"does not match image {self.height}x{self.width}"
                )


def _parse_object(raw: dict, scene_id: str, index: int) -> GroundTruthObject:
    try:
        bbox = BBox.from_list(raw["bbox"])
    except KeyError:
        raise AnnotationError(f"scene {scene_id!r}: object {index} has no bbox")
    except (TypeError, ValueError) as exc:
        raise AnnotationError(f"scene {scene_id!r}: object {index}: {exc}")
    pixel_area = raw.get("pixel_area")
    if pixel_area is None:
        pixel_area = int(round(bbox.area))
    return GroundTruthObject(
        bbox=bbox,
        pixel_area=int(pixel_area),
        class_label=raw.get("label"),
    )


def load_road_mask(path: Path) -> np.ndarray:
    """Read a single-channel mask image; nonzero pixels are drivable."""
    from PIL import Image

    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 0


def _iter_records(annotation_path: Path):
    text = annotation_path.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            records = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{annotation_path}: {exc}")
        yield from enumerate(records, start=1)
        return
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{annotation_path}, line {lineno}: {exc}")


def load_dataset(annotation_path: Path | str, image_root: Path | str) -> list[SceneRecord]:
    """Load scene records, attach masks, and validate invariants.

    Missing image or mask files are logged per scene and the scene retained
    (without the mask).  Output order is deterministic by scene_id.
    """
    annotation_path = Path(annotation_path)
    image_root = Path(image_root)
    scenes = []
    seen_ids = set()
    for lineno, raw in _iter_records(annotation_path):
        if not isinstance(raw, dict):
            raise AnnotationError(f"{annotation_path}, record {lineno}: not an object")
        try:
            scene_id = str(raw["scene_id"])
            image_rel = raw["image"]
            width = int(raw["width"])
            height = int(raw["height"])
        except KeyError as exc:
            raise AnnotationError(
                f"{annotation_path}, record {lineno}: missing field {exc}"
            )
        if scene_id in seen_ids:
            raise AnnotationError(
                f"{annotation_path}, record {lineno}: duplicate scene_id {scene_id!r}"
            )
        seen_ids.add(scene_id)

        objects = [
            _parse_object(o, scene_id, i) for i, o in enumerate(raw.get("objects", []))
        ]

        image_path = image_root / image_rel
        if not image_path.is_file():
            logger.warning("scene %s: image file %s not found", scene_id, image_path)

        road_mask = None
        road_mask_path = None
        mask_rel = raw.get("road_mask")
        if mask_rel is not None:
            mask_path = image_root / mask_rel
            if mask_path.is_file():
                road_mask = load_road_mask(mask_path)
                road_mask_path = mask_path
            else:
                logger.warning("scene %s: road mask %s not found", scene_id, mask_path)

        location_group = raw.get("location_group")
        scenes.append(
            SceneRecord(
                scene_id=scene_id,
                image_path=image_path,
                width=width,
                height=height,
                objects=objects,
                road_mask=road_mask,
                road_mask_path=road_mask_path,
                location_group=None if location_group is None else int(location_group),
            )
        )
    scenes.sort(key=lambda s: s.scene_id)
    return scenes


def save_dataset(scenes: list[SceneRecord], path: Path | str) -> None:
    """Write scenes back in the annotation format with absolute file paths.

    The output is itself a loadable annotation file (image_root is ignored for
    absolute paths), which lets pipeline stages hand scene lists to each other.
    """
    records = []
    for scene in scenes:
        record: dict = {
            "scene_id": scene.scene_id,
            "image": str(scene.image_path.resolve()),
            "width": scene.width,
            "height": scene.height,
            "objects": [
                {
                    "bbox": o.bbox.as_list(),
                    "pixel_area": o.pixel_area,
                    **({"label": o.class_label} if o.class_label else {}),
                }
                for o in scene.objects
            ],
        }
        if scene.road_mask_path is not None:
            record["road_mask"] = str(scene.road_mask_path.resolve())
        if scene.location_group is not None:
            record["location_group"] = scene.location_group
        records.append(record)
    Path(path).write_text(json.dumps(records, indent=1), encoding="utf-8")


def filter_eligible(
    scenes: list[SceneRecord],
    min_area: int = MIN_OBJECT_PIXELS,
    require_single_object: bool = True,
) -> list[SceneRecord]:
    """Scenes eligible for inpainting, order preserved.

    With require_single_object the scene must contain exactly one annotated
    object and that object must cover at least min_area pixels.  Without it,
    any scene with at least one object of sufficient size passes.
    """
    kept = []
    for scene in scenes:
        if require_single_object:
            if len(scene.objects) != 1:
                continue
            if scene.objects[0].pixel_area < min_area:
                continue
        else:
            if not any(o.pixel_area >= min_area for o in scene.objects):
                continue
        kept.append(scene)
    return kept
