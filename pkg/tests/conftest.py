"""Shared fixture builders: synthetic scenes on disk and random geometry helpers."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from ovdprobe.boxes import BBox
from ovdprobe.dataset import GroundTruthObject, SceneRecord


def random_box(rng: np.random.Generator, span: float = 100.0, max_side: float = 40.0) -> BBox:
    x0 = float(rng.uniform(0, span))
    y0 = float(rng.uniform(0, span))
    w = float(rng.uniform(1, max_side))
    h = float(rng.uniform(1, max_side))
    return BBox(x0, y0, x0 + w, y0 + h)


def write_png(path: Path, array: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")
    return path


def make_scene_image(
    width: int, height: int, bbox: BBox, road_rows: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """A green field with a grey road band and a brown object; returns (image, road mask)."""
    image = np.zeros((height, width, 3), dtype=np.uint8)
    image[..., 1] = 90
    image[road_rows[0] : road_rows[1], :] = (70, 70, 70)
    ys, xs = bbox.pixel_slices()
    image[ys, xs] = (120, 80, 40)
    mask = np.zeros((height, width), dtype=np.uint8)
    mask[road_rows[0] : road_rows[1], :] = 255
    return image, mask


def scene_on_disk(
    root: Path,
    scene_id: str,
    width: int = 700,
    height: int = 700,
    bbox: BBox | None = None,
    road_rows: tuple[int, int] = (400, 700),
    pixel_area: int | None = None,
) -> dict:
    """Write one scene image + road mask, return its annotation record."""
    bbox = bbox or BBox(300, 450, 380, 530)
    image, mask = make_scene_image(width, height, bbox, road_rows)
    image_path = write_png(root / f"{scene_id}.png", image)
    mask_path = write_png(root / f"{scene_id}_road.png", mask)
    area = pixel_area if pixel_area is not None else int(bbox.area * 0.7)
    return {
        "scene_id": scene_id,
        "image": str(image_path),
        "width": width,
        "height": height,
        "objects": [{"bbox": bbox.as_list(), "pixel_area": area}],
        "road_mask": str(mask_path),
    }


def write_annotations(path: Path, records: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(records, indent=1), encoding="utf-8")
    return path


def synthetic_scene_record(
    scene_id: str,
    width: int = 2048,
    height: int = 1024,
    bbox: BBox | None = None,
    pixel_area: int = 3500,
) -> SceneRecord:
    """In-memory scene for planning tests (no files involved)."""
    bbox = bbox or BBox(900, 500, 1000, 580)
    return SceneRecord(
        scene_id=scene_id,
        image_path=Path(f"/nonexistent/{scene_id}.png"),
        width=width,
        height=height,
        objects=[GroundTruthObject(bbox=bbox, pixel_area=pixel_area)],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)


# Populated by test_acceptance at import time: test name -> criterion label.
ACCEPTANCE_LABELS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    if not ACCEPTANCE_LABELS:
        return
    outcomes: dict[str, str] = {}
    for status, verdict in (("failed", "FAIL"), ("error", "FAIL"), ("passed", "PASS")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            outcomes.setdefault(nodeid.split("::")[-1], verdict)
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, label in ACCEPTANCE_LABELS.items():
        if name in outcomes:
            terminalreporter.write_line(f"{outcomes[name]}  {label}")
