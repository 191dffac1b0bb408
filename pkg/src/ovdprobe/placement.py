"""Inpainting geometry: oval masks, crop frames, and random placement sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .boxes import BBox

CROP_TIERS = (512, 256, 128)
GENERATOR_INPUT_SIDE = 512

SAMPLE_BBOX_W = 100
SAMPLE_BBOX_H = 130
EDGE_MARGIN = 512
DEFAULT_BORDER_DEPTH = 10


@dataclass(frozen=True)
class CropFrame:
    """Square crop around a target, upscaled to scale_to before generation."""

    rect: BBox
    scale_to: int = GENERATOR_INPUT_SIDE

    @property
    def side(self) -> int:
        return int(self.rect.width)


@dataclass(frozen=True)
class OvalMask:
    """Rasterized ellipse inscribed in bbox, in the coordinates of a crop frame.

    raster[y, x] covers the frame pixel (frame.rect.x_min + x, frame.rect.y_min + y);
    a pixel is set iff its center satisfies the ellipse inequality.
    """

    bbox: BBox
    raster: np.ndarray


@dataclass(frozen=True)
class RectMask:
    """Rasterized axis-aligned rectangle, same frame coordinates as OvalMask."""

    bbox: BBox
    raster: np.ndarray


def rect_mask(bbox: BBox, frame: CropFrame) -> RectMask:
    """Pixels of the frame whose centers lie inside bbox."""
    if not bbox.intersects(frame.rect):
        raise ValueError("bbox does not intersect the crop frame")
    side_w = int(frame.rect.width)
    side_h = int(frame.rect.height)
    xs = frame.rect.x_min + np.arange(side_w) + 0.5
    ys = frame.rect.y_min + np.arange(side_h) + 0.5
    in_x = (xs >= bbox.x_min) & (xs < bbox.x_max)
    in_y = (ys >= bbox.y_min) & (ys < bbox.y_max)
    return RectMask(bbox=bbox, raster=in_y[:, None] & in_x[None, :])


@dataclass(frozen=True)
class PlacedSample:
    center: tuple[int, int]
    set_tag: str  # "road_only" | "border"

    @property
    def bbox(self) -> BBox:
        x, y = self.center
        return BBox(
            x - SAMPLE_BBOX_W // 2,
            y - SAMPLE_BBOX_H // 2,
            x + SAMPLE_BBOX_W // 2,
            y + SAMPLE_BBOX_H // 2,
        )


@dataclass(frozen=True)
class SamplePlan:
    scene_id: str
    centers: tuple[PlacedSample, ...]
    seed: int
    margin: int = EDGE_MARGIN
    border_depth: int = DEFAULT_BORDER_DEPTH
    bbox_w: int = SAMPLE_BBOX_W
    bbox_h: int = SAMPLE_BBOX_H


def oval_mask(bbox: BBox, frame: CropFrame) -> OvalMask:
    """Ellipse inscribed in bbox, rasterized over the frame; outside pixels dropped."""
    if bbox.width < 2 or bbox.height < 2:
        raise ValueError(f"bbox {bbox.as_list()} too small for an oval mask")
    if not bbox.intersects(frame.rect):
        raise ValueError("bbox does not intersect the crop frame")

    side_w = int(frame.rect.width)
    side_h = int(frame.rect.height)
    cx, cy = bbox.center
    a = bbox.width / 2
    b = bbox.height / 2

    # pixel centers in absolute image coordinates
    xs = frame.rect.x_min + np.arange(side_w) + 0.5
    ys = frame.rect.y_min + np.arange(side_h) + 0.5
    u = (xs - cx) / a
    v = (ys - cy) / b
    raster = (u[None, :] ** 2 + v[:, None] ** 2) <= 1.0
    return OvalMask(bbox=bbox, raster=raster)


def crop_tier(bbox: BBox) -> int:
    """Crop side for a target: 512 when both sides >= 256, 256 when >= 128, else 128."""
    if bbox.width >= 256 and bbox.height >= 256:
        return 512
    if bbox.width >= 128 and bbox.height >= 128:
        return 256
    return 128


def crop_frame_around(bbox: BBox, image_w: int, image_h: int, side: int = 512) -> CropFrame:
    """Square of the given side centered on the bbox center, clamped into the image."""
    if image_w < side or image_h < side:
        raise ValueError(f"image {image_w}x{image_h} smaller than crop side {side}")
    cx, cy = bbox.center
    x0 = int(round(cx)) - side // 2
    y0 = int(round(cy)) - side // 2
    x0 = min(max(x0, 0), image_w - side)
    y0 = min(max(y0, 0), image_h - side)
    return CropFrame(rect=BBox(x0, y0, x0 + side, y0 + side), scale_to=GENERATOR_INPUT_SIDE)


def drivable_overlap(bbox: BBox, road_mask: np.ndarray) -> float:
    """Fraction of the bbox area covered by drivable pixels."""
    ys, xs = bbox.pixel_slices()
    h, w = road_mask.shape
    ys = slice(ys.start, min(ys.stop, h))
    xs = slice(xs.start, min(xs.stop, w))
    if ys.start >= ys.stop or xs.start >= xs.stop:
        return 0.0
    drivable = int(np.count_nonzero(road_mask[ys, xs]))
    return drivable / bbox.area


def build_sample_sets(
    road_mask: np.ndarray,
    image_w: int,
    image_h: int,
    margin: int = EDGE_MARGIN,
    border_depth: int = DEFAULT_BORDER_DEPTH,
    scene_id: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split road pixels far enough from the image edges into road-only and border sets.

    Candidates are road pixels (x, y) with margin <= x < image_w - margin and
    margin <= y < image_h - margin.  A candidate belongs to the border set when
    its Euclidean distance to the nearest non-road pixel is at most border_depth;
    the remainder is the road-only set.  Returns two (N, 2) int arrays of (x, y),
    disjoint by construction.
    """
    if road_mask.shape != (image_h, image_w):
        raise ValueError(
            f"road mask shape {road_mask.shape} does not match image {image_h}x{image_w}"
        )
    mask = road_mask.astype(bool)
    candidates = np.zeros_like(mask)
    if image_w > 2 * margin - 1 and image_h > 2 * margin - 1:
        candidates[margin : image_h - margin, margin : image_w - margin] = True
    candidates &= mask
    if not candidates.any():
        where = f" for scene {scene_id!r}" if scene_id else ""
        raise ValueError(
            f"no road pixels at least {margin} px from every image edge{where}"
        )

    if mask.all():
        dist = np.full(mask.shape, np.inf)
    else:
        dist = ndimage.distance_transform_edt(mask)

    border_sel = candidates & (dist <= border_depth)
    road_only_sel = candidates & ~border_sel

    def as_xy(sel: np.ndarray) -> np.ndarray:
        ys, xs = np.nonzero(sel)
        return np.stack([xs, ys], axis=1).astype(np.int64)

    return as_xy(road_only_sel), as_xy(border_sel)


def sample_plan(
    sets: tuple[np.ndarray, np.ndarray],
    scene_id: str,
    n_road: int = 1600,
    n_border: int = 400,
    seed: int = 0,
    margin: int = EDGE_MARGIN,
    border_depth: int = DEFAULT_BORDER_DEPTH,
) -> SamplePlan:
    """Draw bbox centers uniformly without replacement from each sample set."""
    road_only, border = sets
    if len(road_only) < n_road or len(border) < n_border:
        raise ValueError(
            f"sample sets too small: road_only has {len(road_only)} (need {n_road}), "
            f"border has {len(border)} (need {n_border})"
        )
    rng = np.random.default_rng(seed)
    road_idx = rng.choice(len(road_only), size=n_road, replace=False)
    border_idx = rng.choice(len(border), size=n_border, replace=False)
    samples = [
        PlacedSample(center=(int(x), int(y)), set_tag="road_only")
        for x, y in road_only[road_idx]
    ] + [
        PlacedSample(center=(int(x), int(y)), set_tag="border")
        for x, y in border[border_idx]
    ]
    return SamplePlan(
        scene_id=scene_id,
        centers=tuple(samples),
        seed=seed,
        margin=margin,
        border_depth=border_depth,
    )


def save_sample_plan(plan: SamplePlan, path: Path | str) -> None:
    doc = {
        "scene_id": plan.scene_id,
        "seed": plan.seed,
        "margin": plan.margin,
        "border_depth": plan.border_depth,
        "bbox_w": plan.bbox_w,
        "bbox_h": plan.bbox_h,
        "centers": [
            {"x": s.center[0], "y": s.center[1], "set": s.set_tag} for s in plan.centers
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_sample_plan(path: Path | str) -> SamplePlan:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    centers = tuple(
        PlacedSample(center=(int(c["x"]), int(c["y"])), set_tag=c["set"])
        for c in doc["centers"]
    )
    return SamplePlan(
        scene_id=doc["scene_id"],
        centers=centers,
        seed=int(doc["seed"]),
        margin=int(doc["margin"]),
        border_depth=int(doc["border_depth"]),
        bbox_w=int(doc.get("bbox_w", SAMPLE_BBOX_W)),
        bbox_h=int(doc.get("bbox_h", SAMPLE_BBOX_H)),
    )
