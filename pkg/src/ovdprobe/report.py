"""Result emission: delimited tables, aligned text tables, heatmap renders."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .evaluation import EvalResult, HeatmapGrid

TABLE_COLUMNS = (
    "model",
    "prompt",
    "dataset",
    "auprc",
    "ap_50_95",
    "ar_50_95",
    "tp",
    "fp",
    "fn",
)


def emit_tables(results: list[EvalResult], out_dir: Path | str) -> tuple[Path, Path]:
    """Write results.csv (machine-readable, full precision) and results.txt (aligned).

    One row per model x prompt x dataset, in stable sorted order; re-emitting the
    same results produces byte-identical files.
    """
    if not results:
        raise ValueError("no results to report")
    ordered = sorted(results, key=lambda r: (r.model_name, r.prompt_id, r.dataset_id))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    txt_path = out / "results.txt"

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in ordered:
            writer.writerow(
                [
                    r.model_name,
                    r.prompt_id,
                    r.dataset_id,
                    repr(r.auprc),
                    repr(r.ap_50_95),
                    repr(r.ar_50_95),
                    r.tp,
                    r.fp,
                    r.fn,
                ]
            )

    rows = [
        (
            r.model_name,
            r.prompt_id,
            r.dataset_id,
            f"{r.auprc:.4f}",
            f"{r.ap_50_95:.4f}",
            f"{r.ar_50_95:.4f}",
            str(r.tp),
            str(r.fp),
            str(r.fn),
        )
        for r in ordered
    ]
    widths = [
        max(len(TABLE_COLUMNS[i]), *(len(row[i]) for row in rows))
        for i in range(len(TABLE_COLUMNS))
    ]
    lines = [
        "  ".join(name.ljust(widths[i]) for i, name in enumerate(TABLE_COLUMNS)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(widths))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return csv_path, txt_path


def _recall_rgba(grid: HeatmapGrid) -> np.ndarray:
    """Linear red-to-green ramp; pixels no sample covers are fully transparent."""
    recall = grid.recall
    rgba = np.zeros((grid.height, grid.width, 4), dtype=np.uint8)
    defined = ~np.isnan(recall)
    r = np.nan_to_num(recall, nan=0.0)
    rgba[..., 0] = np.rint(255 * (1.0 - r)).astype(np.uint8)
    rgba[..., 1] = np.rint(255 * r).astype(np.uint8)
    rgba[..., 3] = np.where(defined, 255, 0).astype(np.uint8)
    rgba[~defined, 0] = 0
    return rgba


def _fn_count_rgba(grid: HeatmapGrid) -> tuple[np.ndarray, int]:
    """White-to-red sequential ramp on FN counts; max count returned for the manifest."""
    counts = grid.fn_count.astype(np.float64)
    max_count = int(counts.max()) if counts.size else 0
    norm = counts / max_count if max_count > 0 else counts
    rgba = np.zeros((grid.height, grid.width, 4), dtype=np.uint8)
    rgba[..., 0] = 255
    rgba[..., 1] = np.rint(255 * (1.0 - norm)).astype(np.uint8)
    rgba[..., 2] = np.rint(255 * (1.0 - norm)).astype(np.uint8)
    rgba[..., 3] = 255
    return rgba, max_count


def render_heatmap(grid: HeatmapGrid, path: Path | str, mode: str = "recall") -> dict:
    """Render a grid to an 8-bit RGBA PNG; returns the metadata written alongside."""
    if mode == "recall":
        rgba = _recall_rgba(grid)
        meta = {"mode": "recall", "ramp": "red(0) to green(1), undefined transparent"}
    elif mode == "fn_count":
        rgba, max_count = _fn_count_rgba(grid)
        meta = {"mode": "fn_count", "ramp": "white(0) to red(max)", "max_count": max_count}
    else:
        raise ValueError(f"unknown heatmap mode {mode!r}")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgba, mode="RGBA").save(out, format="PNG")
    out.with_suffix(".json").write_text(json.dumps(meta, indent=1), encoding="utf-8")
    return meta
