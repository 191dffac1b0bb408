"""Run configuration with flags > environment > config file > defaults precedence."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_INPAINT_URL = "OVDPROBE_INPAINT_URL"
ENV_DETECT_URL = "OVDPROBE_DETECT_URL"

DEFAULTS: dict[str, object] = {
    "inpaint_url": "http://127.0.0.1:7860",
    "detect_url": "http://127.0.0.1:8866",
    "preset": "v2",
    "seed": 0,
    "iou_thresh": 0.5,
    "score_floor": 0.1,
    "nms_iou": 0.5,
    "min_overlap": 0.5,
    "heatmap_score_floor": 0.2,
    "concurrency": 4,
}

_ENV_KEYS = {"inpaint_url": ENV_INPAINT_URL, "detect_url": ENV_DETECT_URL}


@dataclass(frozen=True)
class RunConfig:
    inpaint_url: str
    detect_url: str
    preset: str
    seed: int
    iou_thresh: float
    score_floor: float
    nms_iou: float
    min_overlap: float
    heatmap_score_floor: float
    concurrency: int

    def __post_init__(self) -> None:
        for name in ("iou_thresh", "score_floor", "nms_iou", "min_overlap",
                     "heatmap_score_floor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.concurrency < 1:
            raise ValueError("concurrency must be at least 1")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config_file(path: Path | str) -> dict[str, str]:
    """Flat `key = value` lines; '#' comments and blank lines are skipped."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        if "=" not in entry:
            raise ValueError(f"{path}, line {lineno}: expected 'key = value'")
        key, _, value = entry.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve_config(
    flags: dict[str, object] | None = None,
    config_file: Path | str | None = None,
    env: dict[str, str] | None = None,
) -> RunConfig:
    """Merge configuration sources; `flags` entries that are None are unset."""
    env = os.environ if env is None else env
    merged: dict[str, object] = dict(DEFAULTS)
    if config_file is not None:
        file_values = load_config_file(config_file)
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"{config_file}: unknown config keys {sorted(unknown)}")
        merged.update(file_values)
    for key, env_name in _ENV_KEYS.items():
        if env_name in env:
            merged[key] = env[env_name]
    if flags:
        merged.update({k: v for k, v in flags.items() if v is not None})
    coerced: dict[str, object] = {}
    for key, default in DEFAULTS.items():
        value = merged[key]
        if isinstance(default, bool):
            coerced[key] = value in (True, "true", "1", "yes")
        elif isinstance(default, int):
            coerced[key] = int(value)
        elif isinstance(default, float):
            coerced[key] = float(value)
        else:
            coerced[key] = str(value)
    return RunConfig(**coerced)
