"""Control probes: noise ovals, pattern patches, removed objects, brightness smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import BBox
from .placement import CropFrame, oval_mask

WHITE = (255, 255, 255)
GREY = (128, 128, 128)
BRIGHTNESS_THRESHOLD = 200

PROBE_KINDS = ("noise_white", "noise_grey", "pattern", "removed", "brightness_smooth")


@dataclass(frozen=True)
class ProbeSpec:
    kind: str
    target_bbox: BBox
    color: tuple[int, int, int] | None = None
    source_rect: BBox | None = None
    threshold: int = BRIGHTNESS_THRESHOLD

    def __post_init__(self) -> None:
        if self.kind not in PROBE_KINDS:
            raise ValueError(f"unknown probe kind {self.kind!r}")


def noise_oval(image: np.ndarray, bbox: BBox, color: tuple[int, int, int]) -> np.ndarray:
    """Fill the ellipse inscribed in bbox with a flat color; nothing else changes."""
    out = image.copy()
    height, width = image.shape[:2]
    ys, xs = bbox.pixel_slices()
    ys = slice(ys.start, min(ys.stop, height))
    xs = slice(xs.start, min(xs.stop, width))
    if ys.start >= ys.stop or xs.start >= xs.stop:
        return out
    frame = CropFrame(rect=BBox(xs.start, ys.start, xs.stop, ys.stop))
    raster = oval_mask(bbox, frame).raster
    region = out[ys, xs]
    region[raster] = color
    return out


def pattern_patch(image: np.ndarray, bbox: BBox, source_rect: BBox) -> np.ndarray:
    """Replace the bbox pixels with the pixels of an equally sized, disjoint rect."""
    if (source_rect.width, source_rect.height) != (bbox.width, bbox.height):
        raise ValueError("source rect must have the same size as the target bbox")
    if bbox.intersects(source_rect):
        raise ValueError("source rect must be disjoint from the target bbox")
    height, width = image.shape[:2]
    for rect in (bbox, source_rect):
        if rect.x_min < 0 or rect.y_min < 0 or rect.x_max > width or rect.y_max > height:
            raise ValueError(f"rect {rect.as_list()} not inside the {width}x{height} image")
    out = image.copy()
    tys, txs = bbox.pixel_slices()
    sys_, sxs = source_rect.pixel_slices()
    out[tys, txs] = image[sys_, sxs]
    return out


def removed(image: np.ndarray, bbox: BBox) -> np.ndarray:
    """Identity transform: the scene with its object already absent is the probe."""
    del bbox
    return image.copy()


def brightness_smooth(
    image: np.ndarray, mask_bbox: BBox, threshold: int = BRIGHTNESS_THRESHOLD
) -> np.ndarray:
    """Replace bright bbox pixels by the mean color of the surrounding ring.

    Brightness is (R+G+B)/3; pixels strictly above the threshold are replaced.
    The ring is the bbox scaled by 2 about its center, minus the bbox, clipped
    to the image; when empty, the mean of the untouched bbox pixels is used.
    """
    height, width = image.shape[:2]
    out = image.copy()
    ys, xs = mask_bbox.pixel_slices()
    ys = slice(ys.start, min(ys.stop, height))
    xs = slice(xs.start, min(xs.stop, width))
    region = image[ys, xs].astype(np.float64)
    if region.size == 0:
        return out
    brightness = region.mean(axis=2)
    bright = brightness > threshold
    if not bright.any():
        return out

    cx, cy = mask_bbox.center
    ring_rect = BBox(
        max(cx - mask_bbox.width, 0.0),
        max(cy - mask_bbox.height, 0.0),
        min(cx + mask_bbox.width, float(width)),
        min(cy + mask_bbox.height, float(height)),
    )
    rys, rxs = ring_rect.pixel_slices()
    ring_sel = np.zeros((height, width), dtype=bool)
    ring_sel[rys, rxs] = True
    ring_sel[ys, xs] = False
    if ring_sel.any():
        fill = image[ring_sel].astype(np.float64).mean(axis=0)
    else:
        dark = ~bright
        if dark.any():
            fill = region[dark].mean(axis=0)
        else:
            fill = region.reshape(-1, 3).mean(axis=0)
    filled = np.rint(fill).astype(np.uint8)
    window = out[ys, xs]
    window[bright] = filled
    return out
