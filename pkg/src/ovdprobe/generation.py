"""Inpainting orchestration: job planning, HTTP execution, and paste-back."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import requests

from .boxes import BBox
from .dataset import MIN_OBJECT_PIXELS, SceneRecord
from .imaging import (
    RESAMPLING_FILTER,
    crop,
    decode_png_base64,
    encode_png_base64,
    load_image,
    mask_to_array,
    paste,
    resize_image,
    resize_mask,
    save_image,
)
from .placement import (
    CropFrame,
    GENERATOR_INPUT_SIDE,
    OvalMask,
    RectMask,
    SamplePlan,
    crop_frame_around,
    crop_tier,
    drivable_overlap,
    oval_mask,
    rect_mask,
)
from .prompts import PromptSpec, hybrid_prompt, single_concept_prompt

logger = logging.getLogger(__name__)

MAX_RETRIES = 3
_SEED_RANGE = 2**31 - 1


@dataclass(frozen=True)
class GenerationParams:
    sampler_name: str
    denoising_strength: float
    inpainting_fill: bool
    sampling_steps: int = 30
    padding_mask_crop: int = 32
    batch_size: int = 1
    repeats: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.denoising_strength <= 1:
            raise ValueError("denoising_strength must be in (0, 1]")
        for name in ("sampling_steps", "padding_mask_crop", "batch_size", "repeats"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


# v1 is a user-configurable slot: its parameters must be supplied explicitly.
PRESETS: dict[str, GenerationParams] = {
    "v2": GenerationParams("Euler a", 0.7, False, sampling_steps=30, batch_size=2, repeats=10),
    "v3": GenerationParams("DPM++ 2S a", 0.7, False, sampling_steps=30, batch_size=2, repeats=10),
    "v4": GenerationParams("DPM++ 2S a", 1.0, False, sampling_steps=30, batch_size=2, repeats=10),
    "single_concept": GenerationParams(
        "Euler a", 1.0, False, sampling_steps=80, batch_size=1, repeats=1
    ),
}


def preset(name: str, overrides: dict | None = None) -> GenerationParams:
    key = name.lower()
    if key == "v1" and not overrides:
        raise ValueError("preset v1 has no published parameters; supply them explicitly")
    if key == "v1":
        return GenerationParams(**overrides)
    if key not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)} or v1")
    params = PRESETS[key]
    return replace(params, **overrides) if overrides else params


@dataclass(frozen=True)
class InpaintJob:
    scene_id: str
    image_path: str
    frame: CropFrame
    mask: OvalMask | RectMask
    prompt: PromptSpec
    params: GenerationParams
    repeat_index: int
    batch_index: int
    output_id: str
    seed: int


@dataclass(frozen=True)
class GenerationOutcome:
    output_id: str
    status: str  # "ok" | "failed-permanent" | "failed-transient"
    output_path: str | None = None
    manifest_path: str | None = None
    error: str | None = None


def _output_id(scene_id: str, repeat: int, batch: int) -> str:
    return f"{scene_id}__r{repeat:02d}__b{batch:02d}"


def plan_hybrid_dataset(
    scenes: list[SceneRecord],
    params: GenerationParams,
    noun_list: list[str],
    seed: int = 0,
) -> list[InpaintJob]:
    """One job per (scene, repeat, batch slot), each with a freshly drawn hybrid prompt."""
    rng = np.random.default_rng(seed)
    jobs: list[InpaintJob] = []
    for scene in scenes:
        bbox = scene.objects[0].bbox
        frame = crop_frame_around(bbox, scene.width, scene.height, side=GENERATOR_INPUT_SIDE)
        mask = oval_mask(bbox, frame)
        for rep in range(params.repeats):
            for batch in range(params.batch_size):
                prompt_seed = int(rng.integers(0, _SEED_RANGE))
                job_seed = int(rng.integers(0, _SEED_RANGE))
                jobs.append(
                    InpaintJob(
                        scene_id=scene.scene_id,
                        image_path=str(scene.image_path),
                        frame=frame,
                        mask=mask,
                        prompt=hybrid_prompt(noun_list, seed=prompt_seed),
                        params=params,
                        repeat_index=rep,
                        batch_index=batch,
                        output_id=_output_id(scene.scene_id, rep, batch),
                        seed=job_seed,
                    )
                )
    return jobs


def plan_single_concept_dataset(
    scenes: list[SceneRecord],
    keywords: list[str],
    params: GenerationParams,
    min_overlap: float = 0.5,
    min_area: int = MIN_OBJECT_PIXELS,
    seed: int = 0,
) -> list[InpaintJob]:
    """One job per scene that has an object on the drivable surface.

    The target is drawn seeded-uniformly among objects with drivable_overlap
    >= min_overlap and pixel_area >= min_area; scenes without a road mask or a
    qualifying object are skipped with a logged reason.
    """
    rng = np.random.default_rng(seed)
    jobs: list[InpaintJob] = []
    for scene in scenes:
        if scene.road_mask is None:
            logger.info("scene %s skipped: no road mask", scene.scene_id)
            continue
        qualifying = [
            obj
            for obj in scene.objects
            if obj.pixel_area >= min_area
            and drivable_overlap(obj.bbox, scene.road_mask) >= min_overlap
        ]
        if not qualifying:
            logger.info("scene %s skipped: no qualifying on-road object", scene.scene_id)
            continue
        target = qualifying[int(rng.integers(0, len(qualifying)))]
        keyword = keywords[int(rng.integers(0, len(keywords)))]
        side = crop_tier(target.bbox)
        frame = crop_frame_around(target.bbox, scene.width, scene.height, side=side)
        jobs.append(
            InpaintJob(
                scene_id=scene.scene_id,
                image_path=str(scene.image_path),
                frame=frame,
                mask=rect_mask(target.bbox, frame),
                prompt=single_concept_prompt(keyword, keywords),
                params=params,
                repeat_index=0,
                batch_index=0,
                output_id=_output_id(scene.scene_id, 0, 0),
                seed=int(rng.integers(0, _SEED_RANGE)),
            )
        )
    return jobs


def plan_random_location_dataset(
    scene: SceneRecord,
    plan: SamplePlan,
    params: GenerationParams,
    fixed_prompt: str | None = None,
    noun_list: list[str] | None = None,
    seed: int = 0,
) -> list[InpaintJob]:
    """One job per planned center; ovals in bbox_w x bbox_h boxes at each center."""
    if fixed_prompt is None and noun_list is None:
        raise ValueError("need either a fixed prompt or a noun list for hybrid prompts")
    rng = np.random.default_rng(seed)
    jobs: list[InpaintJob] = []
    for index, sample in enumerate(plan.centers):
        x, y = sample.center
        bbox = BBox(
            x - plan.bbox_w // 2,
            y - plan.bbox_h // 2,
            x + plan.bbox_w // 2,
            y + plan.bbox_h // 2,
        )
        frame = crop_frame_around(bbox, scene.width, scene.height, side=GENERATOR_INPUT_SIDE)
        if fixed_prompt is not None:
            prompt = single_concept_prompt(fixed_prompt)
        else:
            prompt = hybrid_prompt(noun_list, seed=int(rng.integers(0, _SEED_RANGE)))
        jobs.append(
            InpaintJob(
                scene_id=scene.scene_id,
                image_path=str(scene.image_path),
                frame=frame,
                mask=oval_mask(bbox, frame),
                prompt=prompt,
                params=params,
                repeat_index=index,
                batch_index=0,
                output_id=f"{scene.scene_id}__c{index:04d}__{sample.set_tag}",
                seed=int(rng.integers(0, _SEED_RANGE)),
            )
        )
    return jobs


def save_jobs(jobs: list[InpaintJob], path: Path | str) -> None:
    """Serialize jobs as line-delimited JSON; mask rasters are rebuilt on load."""
    with open(path, "w", encoding="utf-8") as fh:
        for job in jobs:
            fh.write(
                json.dumps(
                    {
                        "scene_id": job.scene_id,
                        "image_path": job.image_path,
                        "frame": job.frame.rect.as_list(),
                        "scale_to": job.frame.scale_to,
                        "mask_kind": "oval" if isinstance(job.mask, OvalMask) else "rect",
                        "mask_bbox": job.mask.bbox.as_list(),
                        "prompt": {
                            "kind": job.prompt.kind,
                            "text": job.prompt.text,
                            "components": list(job.prompt.components),
                            "seed": job.prompt.seed,
                            "prompt_id": job.prompt.prompt_id,
                        },
                        "params": {
                            "sampler_name": job.params.sampler_name,
                            "denoising_strength": job.params.denoising_strength,
                            "inpainting_fill": job.params.inpainting_fill,
                            "sampling_steps": job.params.sampling_steps,
                            "padding_mask_crop": job.params.padding_mask_crop,
                            "batch_size": job.params.batch_size,
                            "repeats": job.params.repeats,
                        },
                        "repeat_index": job.repeat_index,
                        "batch_index": job.batch_index,
                        "output_id": job.output_id,
                        "seed": job.seed,
                    }
                )
                + "\n"
            )


def load_jobs(path: Path | str) -> list[InpaintJob]:
    jobs: list[InpaintJob] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                frame = CropFrame(
                    rect=BBox.from_list(doc["frame"]), scale_to=int(doc["scale_to"])
                )
                mask_bbox = BBox.from_list(doc["mask_bbox"])
                mask = (
                    oval_mask(mask_bbox, frame)
                    if doc["mask_kind"] == "oval"
                    else rect_mask(mask_bbox, frame)
                )
                p = doc["prompt"]
                prompt = PromptSpec(
                    kind=p["kind"],
                    text=p["text"],
                    components=tuple(p["components"]),
                    seed=p["seed"],
                    prompt_id=p["prompt_id"],
                )
                jobs.append(
                    InpaintJob(
                        scene_id=doc["scene_id"],
                        image_path=doc["image_path"],
                        frame=frame,
                        mask=mask,
                        prompt=prompt,
                        params=GenerationParams(**doc["params"]),
                        repeat_index=int(doc["repeat_index"]),
                        batch_index=int(doc["batch_index"]),
                        output_id=doc["output_id"],
                        seed=int(doc["seed"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad job record on line {lineno}: {exc}") from exc
    return jobs


def _build_request(job: InpaintJob, image: np.ndarray) -> dict:
    frame_img = crop(image, job.frame.rect)
    mask_img = mask_to_array(job.mask.raster)
    side = job.frame.side
    if side < job.frame.scale_to:
        frame_img = resize_image(frame_img, job.frame.scale_to, job.frame.scale_to)
        mask_img = resize_mask(mask_img, job.frame.scale_to, job.frame.scale_to)
    return {
        "image": encode_png_base64(frame_img),
        "mask": encode_png_base64(mask_img),
        "prompt": job.prompt.text,
        "sampler_name": job.params.sampler_name,
        "steps": job.params.sampling_steps,
        "denoising_strength": job.params.denoising_strength,
        "inpainting_fill": job.params.inpainting_fill,
        "padding_mask_crop": job.params.padding_mask_crop,
        "batch_size": 1,
        "seed": job.seed,
    }


def _run_job(
    job: InpaintJob,
    service_url: str,
    out_dir: Path,
    session: requests.Session,
    timeout: float,
    backoff_base: float,
) -> GenerationOutcome:
    try:
        source = load_image(job.image_path)
    except OSError as exc:
        return GenerationOutcome(job.output_id, "failed-permanent", error=str(exc))
    payload = _build_request(job, source)
    body = json.dumps(payload, sort_keys=True)
    last_error = "unknown"
    for attempt in range(MAX_RETRIES + 1):
        if attempt:
            time.sleep(backoff_base * 2 ** (attempt - 1))
        try:
            resp = session.post(
                f"{service_url.rstrip('/')}/inpaint",
                data=body,
                headers={"Content-Type": "application/json"},
                timeout=timeout,
            )
        except requests.RequestException as exc:
            last_error = f"transport: {exc}"
            continue
        if 400 <= resp.status_code < 500:
            return GenerationOutcome(
                job.output_id, "failed-permanent", error=f"HTTP {resp.status_code}"
            )
        if resp.status_code != 200:
            last_error = f"HTTP {resp.status_code}"
            continue
        result = decode_png_base64(resp.json()["images"][0])
        side = job.frame.side
        if result.shape[:2] != (side, side):
            result = resize_image(result, side, side)
        output = paste(source, result, int(job.frame.rect.x_min), int(job.frame.rect.y_min))
        output_path = out_dir / f"{job.output_id}.png"
        save_image(output, output_path)
        manifest_path = out_dir / f"{job.output_id}.manifest.json"
        manifest = {
            "output_id": job.output_id,
            "scene_id": job.scene_id,
            "source_image": job.image_path,
            "frame": job.frame.rect.as_list(),
            "generator_input_side": job.frame.scale_to,
            "resampling_filter": RESAMPLING_FILTER,
            "prompt": job.prompt.text,
            "prompt_kind": job.prompt.kind,
            "seed": job.seed,
            "request_sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        }
        manifest_path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
        return GenerationOutcome(
            job.output_id, "ok", str(output_path), str(manifest_path)
        )
    return GenerationOutcome(job.output_id, "failed-transient", error=last_error)


def execute(
    jobs: list[InpaintJob],
    service_url: str,
    out_dir: Path | str,
    concurrency_limit: int = 4,
    timeout: float = 120.0,
    backoff_base: float = 1.0,
) -> list[GenerationOutcome]:
    """Run all jobs against the inpainting service; failures are recorded, not raised."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session = requests.Session()
    with ThreadPoolExecutor(max_workers=max(1, concurrency_limit)) as pool:
        outcomes = list(
            pool.map(
                lambda job: _run_job(job, service_url, out, session, timeout, backoff_base),
                jobs,
            )
        )
    outcomes.sort(key=lambda o: o.output_id)
    failed = [o for o in outcomes if o.status != "ok"]
    if failed:
        logger.warning("%d of %d jobs failed", len(failed), len(outcomes))
    return outcomes


def apply_discard_list(
    outcomes: list[GenerationOutcome], discard_file: Path | str
) -> list[GenerationOutcome]:
    """Drop outcomes whose output_id appears in the discard file (one id per line)."""
    listed = {
        line.strip()
        for line in Path(discard_file).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    }
    known = {o.output_id for o in outcomes}
    for unknown in sorted(listed - known):
        logger.warning("discard list names unknown output_id %r", unknown)
    kept = [o for o in outcomes if o.output_id not in listed]
    logger.info("discarded %d of %d outcomes", len(outcomes) - len(kept), len(outcomes))
    return kept
