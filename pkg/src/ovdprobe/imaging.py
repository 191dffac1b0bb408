"""Image IO helpers: PNG load/save, base64 transport encoding, crop and paste."""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .boxes import BBox

RESAMPLING_FILTER = "bilinear"  # recorded in manifests; masks always use nearest


def load_image(path: Path | str) -> np.ndarray:
    """Read an image file as uint8 RGB (H, W, 3)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(array: np.ndarray, path: Path | str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")


def encode_png_base64(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_base64(data: str) -> np.ndarray:
    raw = base64.b64decode(data)
    with Image.open(io.BytesIO(raw)) as im:
        if im.mode == "L":
            return np.asarray(im)
        return np.asarray(im.convert("RGB"))


def mask_to_array(raster: np.ndarray) -> np.ndarray:
    """Boolean raster to uint8 grayscale, white = inpaint."""
    return np.where(raster, 255, 0).astype(np.uint8)


def resize_image(array: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of an RGB image."""
    im = Image.fromarray(np.asarray(array, dtype=np.uint8))
    return np.asarray(im.resize((width, height), Image.Resampling.BILINEAR))


def resize_mask(array: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbor resize of a grayscale mask (keeps it bilevel)."""
    im = Image.fromarray(np.asarray(array, dtype=np.uint8))
    return np.asarray(im.resize((width, height), Image.Resampling.NEAREST))


def crop(array: np.ndarray, rect: BBox) -> np.ndarray:
    x0, y0, x1, y1 = (int(v) for v in rect.as_list())
    return array[y0:y1, x0:x1].copy()


def paste(base: np.ndarray, patch: np.ndarray, x0: int, y0: int) -> np.ndarray:
    """Copy of `base` with `patch` written at (x0, y0)."""
    out = base.copy()
    h, w = patch.shape[:2]
    out[y0 : y0 + h, x0 : x0 + w] = patch
    return out
