"""Detector prediction IO: JSONL files and the detector HTTP endpoint."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .boxes import BBox
from .imaging import encode_png_base64, load_image
from .prompts import PromptSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Prediction:
    bbox: BBox
    score: float
    prompt_id: str
    image_id: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class PredictionSet:
    image_id: str
    model_name: str
    prompt_id: str
    predictions: tuple[Prediction, ...]

    def __post_init__(self) -> None:
        for pred in self.predictions:
            if pred.image_id != self.image_id or pred.prompt_id != self.prompt_id:
                raise ValueError(
                    f"prediction for ({pred.image_id}, {pred.prompt_id}) grouped under "
                    f"({self.image_id}, {self.prompt_id})"
                )


def _group(records: list[tuple[str, str, Prediction]]) -> list[PredictionSet]:
    groups: dict[tuple[str, str, str], list[Prediction]] = {}
    for image_id, model, pred in records:
        groups.setdefault((image_id, model, pred.prompt_id), []).append(pred)
    return [
        PredictionSet(image_id=img, model_name=model, prompt_id=pid, predictions=tuple(preds))
        for (img, model, pid), preds in sorted(groups.items())
    ]


def load_predictions(path: Path | str) -> list[PredictionSet]:
    """Read line-delimited prediction records, grouped by (image, model, prompt)."""
    records: list[tuple[str, str, Prediction]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                pred = Prediction(
                    bbox=BBox.from_list(doc["bbox"]),
                    score=float(doc["score"]),
                    prompt_id=str(doc["prompt_id"]),
                    image_id=str(doc["image_id"]),
                )
                records.append((str(doc["image_id"]), str(doc["model"]), pred))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad prediction record on line {lineno}: {exc}") from exc
    return _group(records)


def save_predictions(sets: list[PredictionSet], path: Path | str) -> None:
    """Write sets in load order so load(save(sets)) round-trips bit-exactly."""
    ordered = sorted(sets, key=lambda s: (s.image_id, s.model_name, s.prompt_id))
    with open(path, "w", encoding="utf-8") as fh:
        for pset in ordered:
            for pred in pset.predictions:
                fh.write(
                    json.dumps(
                        {
                            "image_id": pset.image_id,
                            "model": pset.model_name,
                            "prompt_id": pset.prompt_id,
                            "bbox": pred.bbox.as_list(),
                            "score": pred.score,
                        }
                    )
                    + "\n"
                )


@dataclass(frozen=True)
class FetchFailure:
    image_id: str
    prompt_id: str
    error: str


def _detect_one(
    image_id: str,
    image_path: str,
    prompt: PromptSpec,
    model_name: str,
    service_url: str,
    score_floor: float,
    session: requests.Session,
    timeout: float,
) -> PredictionSet | FetchFailure:
    prompt_id = prompt.prompt_id or prompt.text
    try:
        payload = {
            "image": encode_png_base64(load_image(image_path)),
            "prompt": prompt.text,
            "score_floor": score_floor,
        }
        resp = session.post(
            f"{service_url.rstrip('/')}/detect", json=payload, timeout=timeout
        )
        resp.raise_for_status()
        body = resp.json()
        preds = tuple(
            Prediction(
                bbox=BBox.from_list(det["bbox"]),
                score=float(det["score"]),
                prompt_id=prompt_id,
                image_id=image_id,
            )
            for det in body["detections"]
        )
    except (requests.RequestException, OSError, KeyError, TypeError, ValueError) as exc:
        return FetchFailure(image_id=image_id, prompt_id=prompt_id, error=str(exc))
    return PredictionSet(
        image_id=image_id, model_name=model_name, prompt_id=prompt_id, predictions=preds
    )


def fetch_predictions(
    images: list[tuple[str, str]],
    prompts: list[PromptSpec],
    service_url: str,
    model_name: str,
    score_floor: float = 0.0,
    concurrency_limit: int = 4,
    timeout: float = 120.0,
) -> tuple[list[PredictionSet], list[FetchFailure]]:
    """Query the detector once per (image, prompt); failures recorded, run continues.

    `images` is a list of (image_id, image_path) pairs.
    """
    session = requests.Session()
    tasks = [(image_id, path, prompt) for image_id, path in images for prompt in prompts]
    with ThreadPoolExecutor(max_workers=max(1, concurrency_limit)) as pool:
        results = list(
            pool.map(
                lambda t: _detect_one(
                    t[0], t[1], t[2], model_name, service_url, score_floor, session, timeout
                ),
                tasks,
            )
        )
    sets = [r for r in results if isinstance(r, PredictionSet)]
    failures = [r for r in results if isinstance(r, FetchFailure)]
    if failures:
        logger.warning("%d of %d detect calls failed", len(failures), len(results))
    sets.sort(key=lambda s: (s.image_id, s.model_name, s.prompt_id))
    return sets, failures
