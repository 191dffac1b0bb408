"""Axis-aligned bounding boxes in absolute pixel coordinates."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Corner-format box [x_min, y_min, x_max, y_max] with positive extent."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        # normalize to float so serialized coordinates are stable regardless of
        # whether the caller passed ints or numpy scalars
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate bbox [{self.x_min}, {self.y_min}, {self.x_max}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2

    def contains_box(self, other: "BBox") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and other.x_max <= self.x_max
            and other.y_max <= self.y_max
        )

    def intersects(self, other: "BBox") -> bool:
        return (
            self.x_min < other.x_max
            and other.x_min < self.x_max
            and self.y_min < other.y_max
            and other.y_min < self.y_max
        )

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, coords) -> "BBox":
        if len(coords) != 4:
            raise ValueError(f"bbox needs 4 coordinates, got {len(coords)}")
        return cls(*(float(c) for c in coords))

    def pixel_slices(self) -> tuple[slice, slice]:
        """(row, col) slices of the pixels whose centers fall inside the box.

        Pixel (x, y) covers [x, x+1) x [y, y+1); its center is (x+0.5, y+0.5).
        For integer-valued boxes this is the half-open range [min, max).
        """
        import math

        x0 = math.ceil(self.x_min - 0.5)
        x1 = math.ceil(self.x_max - 0.5)
        y0 = math.ceil(self.y_min - 0.5)
        y1 = math.ceil(self.y_max - 0.5)
        return slice(max(y0, 0), max(y1, 0)), slice(max(x0, 0), max(x1, 0))


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)
