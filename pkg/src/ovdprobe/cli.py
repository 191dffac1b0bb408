"""Command-line pipeline: ingest, plan, inpaint, probe, detect, eval, heatmap,
correlate, report."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boxes import BBox
from .config import resolve_config
from .dataset import (
    MIN_OBJECT_PIXELS,
    filter_eligible,
    load_dataset,
    save_dataset,
)
from .detection import fetch_predictions, load_predictions, save_predictions
from .evaluation import (
    EvalResult,
    FnVector,
    evaluate,
    fn_correlation,
    fn_counts_per_scene,
    heatmap as build_heatmap,
    match,
    nms,
)
from .generation import (
    apply_discard_list,
    execute,
    load_jobs,
    plan_hybrid_dataset,
    plan_random_location_dataset,
    plan_single_concept_dataset,
    preset,
    save_jobs,
)
from .placement import build_sample_sets, load_sample_plan, sample_plan, save_sample_plan
from .probes import (
    BRIGHTNESS_THRESHOLD,
    GREY,
    WHITE,
    brightness_smooth,
    noise_oval,
    pattern_patch,
    removed,
)
from .prompts import detection_prompts, default_keywords, default_nouns, load_word_list
from .imaging import load_image, save_image
from .report import emit_tables, render_heatmap

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage could not complete."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, stage: str, config: dict, inputs: list[Path]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "stage": stage,
        "version": __version__,
        "config": {k: str(v) if isinstance(v, Path) else v for k, v in config.items()},
        "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
    }
    path = out_dir / f"{stage}.manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return path


def _params_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for flag, field in (
        ("sampler", "sampler_name"),
        ("denoising", "denoising_strength"),
        ("steps", "sampling_steps"),
        ("padding_mask_crop", "padding_mask_crop"),
        ("batch_size", "batch_size"),
        ("repeats", "repeats"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "fill", None) is not None:
        overrides["inpainting_fill"] = args.fill
    return overrides


def _load_scenes(annotations: Path, image_root: Path):
    scenes = load_dataset(annotations, image_root)
    if not scenes:
        raise StageError(f"no scenes in {annotations}")
    return scenes


def cmd_ingest(args: argparse.Namespace) -> int:
    scenes = _load_scenes(args.annotations, args.image_root)
    eligible = filter_eligible(
        scenes, min_area=args.min_area, require_single_object=not args.all_objects
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(eligible, out / "eligible.json")
    _write_manifest(
        out,
        "ingest",
        {
            "annotations": args.annotations,
            "image_root": args.image_root,
            "min_area": args.min_area,
            "all_objects": args.all_objects,
        },
        [args.annotations],
    )
    print(f"{len(eligible)} of {len(scenes)} scenes eligible -> {out / 'eligible.json'}")
    return 0


def cmd_plan_hybrid(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"preset": args.preset, "seed": args.seed}, config_file=args.config
    )
    scenes = _load_scenes(args.eligible, args.image_root)
    nouns = load_word_list(args.nouns) if args.nouns else default_nouns()
    params = preset(config.preset, _params_overrides(args))
    jobs = plan_hybrid_dataset(scenes, params, nouns, seed=config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_jobs(jobs, out / "jobs.json")
    _write_manifest(
        out,
        "plan-hybrid",
        {
            "eligible": args.eligible,
            "preset": config.preset,
            "seed": config.seed,
            "nouns": args.nouns or "builtin",
            "scenes": len(scenes),
            "jobs": len(jobs),
        },
        [args.eligible] + ([Path(args.nouns)] if args.nouns else []),
    )
    print(f"{len(jobs)} inpainting jobs planned -> {out / 'jobs.json'}")
    return 0


def cmd_plan_single(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"seed": args.seed, "min_overlap": args.min_overlap}, config_file=args.config
    )
    scenes = _load_scenes(args.eligible, args.image_root)
    keywords = load_word_list(args.keywords) if args.keywords else default_keywords()
    params = preset("single_concept", _params_overrides(args))
    jobs = plan_single_concept_dataset(
        scenes,
        keywords,
        params,
        min_overlap=config.min_overlap,
        min_area=args.min_area,
        seed=config.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_jobs(jobs, out / "jobs.json")
    _write_manifest(
        out,
        "plan-single",
        {
            "eligible": args.eligible,
            "seed": config.seed,
            "min_overlap": config.min_overlap,
            "min_area": args.min_area,
            "keywords": args.keywords or "builtin",
            "scenes": len(scenes),
            "jobs": len(jobs),
        },
        [args.eligible] + ([Path(args.keywords)] if args.keywords else []),
    )
    print(f"{len(jobs)} inpainting jobs planned -> {out / 'jobs.json'}")
    return 0


def cmd_plan_random(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"preset": args.preset, "seed": args.seed}, config_file=args.config
    )
    scenes = _load_scenes(args.annotations, args.image_root)
    matching = [s for s in scenes if s.scene_id == args.scene]
    if not matching:
        raise StageError(f"scene {args.scene!r} not found in {args.annotations}")
    scene = matching[0]
    if scene.road_mask is None:
        raise StageError(f"scene {args.scene!r} has no road mask")
    sets = build_sample_sets(
        scene.road_mask,
        scene.width,
        scene.height,
        margin=args.margin,
        border_depth=args.border_depth,
        scene_id=scene.scene_id,
    )
    plan = sample_plan(
        sets,
        scene.scene_id,
        n_road=args.n_road,
        n_border=args.n_border,
        seed=config.seed,
        margin=args.margin,
        border_depth=args.border_depth,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_sample_plan(plan, out / "plan.json")
    nouns = None
    if args.fixed_prompt is None:
        nouns = load_word_list(args.nouns) if args.nouns else default_nouns()
    params = preset(config.preset, _params_overrides(args))
    jobs = plan_random_location_dataset(
        scene,
        plan,
        params,
        fixed_prompt=args.fixed_prompt,
        noun_list=nouns,
        seed=config.seed,
    )
    save_jobs(jobs, out / "jobs.json")
    _write_manifest(
        out,
        "plan-random",
        {
            "annotations": args.annotations,
            "scene": args.scene,
            "seed": config.seed,
            "preset": config.preset,
            "n_road": args.n_road,
            "n_border": args.n_border,
            "margin": args.margin,
            "border_depth": args.border_depth,
            "fixed_prompt": args.fixed_prompt,
            "jobs": len(jobs),
        },
        [args.annotations],
    )
    print(f"{len(jobs)} random-location jobs planned -> {out / 'jobs.json'}")
    return 0


def cmd_inpaint(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"inpaint_url": args.service_url, "concurrency": args.concurrency},
        config_file=args.config,
    )
    jobs = load_jobs(args.jobs)
    out = Path(args.out)
    outcomes = execute(
        jobs, config.inpaint_url, out / "images", concurrency_limit=config.concurrency
    )
    if args.discard_file:
        outcomes = apply_discard_list(outcomes, args.discard_file)
    ok = [o for o in outcomes if o.status == "ok"]
    doc = [
        {
            "output_id": o.output_id,
            "status": o.status,
            "output_path": o.output_path,
            "manifest_path": o.manifest_path,
            "error": o.error,
        }
        for o in outcomes
    ]
    out.mkdir(parents=True, exist_ok=True)
    (out / "outcomes.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")
    _write_manifest(
        out,
        "inpaint",
        {
            "jobs": args.jobs,
            "service_url": config.inpaint_url,
            "concurrency": config.concurrency,
            "discard_file": args.discard_file,
            "ok": len(ok),
            "failed": len(outcomes) - len(ok),
        },
        [args.jobs] + ([Path(args.discard_file)] if args.discard_file else []),
    )
    print(f"{len(ok)} of {len(outcomes)} jobs succeeded -> {out / 'images'}")
    if jobs and not ok:
        raise StageError("every inpainting job failed; check the service URL")
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    scenes = _load_scenes(args.eligible, args.image_root)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    if kind == "noise":  # generic form: --color picks the variant
        kind = f"noise_{args.color}"
    rows = []
    skipped = 0
    for scene in scenes:
        if len(scene.objects) != 1:
            logger.warning("scene %s skipped: probes need a single object", scene.scene_id)
            skipped += 1
            continue
        bbox = scene.objects[0].bbox
        image = load_image(scene.image_path)
        params: dict = {"bbox": bbox.as_list()}
        if kind in ("noise_white", "noise_grey"):
            kind_color = WHITE if kind == "noise_white" else GREY
            result = noise_oval(image, bbox, kind_color)
            params["color"] = list(kind_color)
        elif kind == "pattern":
            source = _pattern_source(bbox, scene.width, scene.height)
            if source is None:
                logger.warning(
                    "scene %s skipped: no room for a disjoint source rect", scene.scene_id
                )
                skipped += 1
                continue
            result = pattern_patch(image, bbox, source)
            params["source_rect"] = source.as_list()
        elif kind == "removed":
            result = removed(image, bbox)
        elif kind == "brightness_smooth":
            result = brightness_smooth(image, bbox, threshold=args.threshold)
            params["threshold"] = args.threshold
        else:
            raise StageError(f"unknown probe kind {kind!r}")
        output_path = out / f"{scene.scene_id}__{kind}.png"
        save_image(result, output_path)
        rows.append({"scene_id": scene.scene_id, "output": str(output_path), **params})
    (out / "probes.json").write_text(json.dumps(rows, indent=1), encoding="utf-8")
    _write_manifest(
        out,
        "probe",
        {
            "eligible": args.eligible,
            "kind": kind,
            "color": args.color,
            "threshold": args.threshold,
            "generated": len(rows),
            "skipped": skipped,
        },
        [args.eligible],
    )
    print(f"{len(rows)} probe images -> {out}")
    return 0


def _pattern_source(bbox: BBox, width: int, height: int) -> BBox | None:
    """A same-size rect disjoint from bbox inside the image, preferring lateral shifts."""
    candidates = [
        BBox(bbox.x_min - bbox.width, bbox.y_min, bbox.x_min, bbox.y_max),
        BBox(bbox.x_max, bbox.y_min, bbox.x_max + bbox.width, bbox.y_max),
        BBox(bbox.x_min, bbox.y_min - bbox.height, bbox.x_max, bbox.y_min),
        BBox(bbox.x_min, bbox.y_max, bbox.x_max, bbox.y_max + bbox.height),
    ]
    for rect in candidates:
        if rect.x_min >= 0 and rect.y_min >= 0 and rect.x_max <= width and rect.y_max <= height:
            return rect
    return None


def _load_image_listing(images_arg: Path) -> list[tuple[str, str]]:
    if images_arg.is_dir():
        return [
            (p.stem, str(p))
            for p in sorted(images_arg.glob("*.png")) + sorted(images_arg.glob("*.jpg"))
        ]
    doc = json.loads(images_arg.read_text(encoding="utf-8"))
    return [(str(rec["image_id"]), str(rec["path"])) for rec in doc]


def cmd_detect(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"detect_url": args.service_url, "concurrency": args.concurrency},
        config_file=args.config,
    )
    images = _load_image_listing(args.images)
    if not images:
        raise StageError(f"no images found in {args.images}")
    prompts = detection_prompts()
    if args.prompts:
        wanted = set(args.prompts.split(","))
        unknown = wanted - {p.prompt_id for p in prompts}
        if unknown:
            raise StageError(f"unknown prompt ids {sorted(unknown)}; have p1..p5")
        prompts = [p for p in prompts if p.prompt_id in wanted]
    sets, failures = fetch_predictions(
        images,
        prompts,
        config.detect_url,
        model_name=args.model,
        score_floor=args.score_floor,
        concurrency_limit=config.concurrency,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_predictions(sets, out)
    _write_manifest(
        out.parent,
        "detect",
        {
            "images": args.images,
            "model": args.model,
            "prompts": args.prompts or "p1,p2,p3,p4,p5",
            "service_url": config.detect_url,
            "score_floor": args.score_floor,
            "sets": len(sets),
            "failures": [
                {"image_id": f.image_id, "prompt_id": f.prompt_id, "error": f.error}
                for f in failures
            ],
        },
        [args.images] if args.images.is_file() else [],
    )
    print(f"{len(sets)} prediction sets -> {out} ({len(failures)} failures)")
    if images and len(failures) == len(images) * len(prompts):
        raise StageError("every detect call failed; check the service URL")
    return 0


def _gts_by_image(scenes) -> dict[str, list[BBox]]:
    return {s.scene_id: [o.bbox for o in s.objects] for s in scenes}


def cmd_eval(args: argparse.Namespace) -> int:
    config = resolve_config(
        {
            "iou_thresh": args.iou,
            "score_floor": args.score_floor,
            "nms_iou": args.nms_iou,
        },
        config_file=args.config,
    )
    sets = load_predictions(args.preds)
    scenes = _load_scenes(args.gt, args.image_root)
    results = evaluate(
        sets,
        _gts_by_image(scenes),
        dataset_id=args.dataset_id,
        iou_thresh=config.iou_thresh,
        score_floor=config.score_floor,
        nms_thresh=config.nms_iou,
    )
    out = Path(args.out)
    csv_path, txt_path = emit_tables(results, out)
    _write_manifest(
        out,
        "eval",
        {
            "preds": args.preds,
            "gt": args.gt,
            "dataset_id": args.dataset_id,
            "iou_thresh": config.iou_thresh,
            "score_floor": config.score_floor,
            "nms_iou": config.nms_iou,
            "rows": len(results),
        },
        [args.preds, args.gt],
    )
    print(txt_path.read_text(encoding="utf-8"), end="")
    print(f"tables -> {csv_path} and {txt_path}")
    return 0


def _single_group(sets, path, model=None, prompt=None) -> list:
    if model is not None:
        sets = [s for s in sets if s.model_name == model]
    if prompt is not None:
        sets = [s for s in sets if s.prompt_id == prompt]
    if not sets:
        raise StageError(
            f"{path} has no predictions left after filtering "
            f"(model={model!r}, prompt={prompt!r})"
        )
    groups = {(s.model_name, s.prompt_id) for s in sets}
    if len(groups) > 1:
        raise StageError(
            f"{path} mixes several (model, prompt) groups {sorted(groups)}; "
            "narrow it with --model/--prompt or split the file"
        )
    return sets


def cmd_heatmap(args: argparse.Namespace) -> int:
    config = resolve_config(
        {
            "iou_thresh": args.iou,
            "heatmap_score_floor": args.score_floor,
            "nms_iou": args.nms_iou,
        },
        config_file=args.config,
    )
    sets = _single_group(
        load_predictions(args.preds), args.preds, model=args.model, prompt=args.prompt
    )
    scenes = _load_scenes(args.gt, args.image_root)
    gts = _gts_by_image(scenes)
    by_image = {s.image_id: s for s in sets}
    samples: list[tuple[BBox, bool]] = []
    for image_id, boxes in sorted(gts.items()):
        pset = by_image.get(image_id)
        preds = list(nms(pset, config.nms_iou).predictions) if pset else []
        result = match(
            preds, boxes, iou_thresh=config.iou_thresh, score_floor=config.heatmap_score_floor
        )
        matched_gts = {g for _, g, _ in result.matched_pairs}
        samples.extend((bbox, g in matched_gts) for g, bbox in enumerate(boxes))
    grid = build_heatmap(samples, width=args.width, height=args.height)
    meta = render_heatmap(grid, args.out, mode=args.mode)
    _write_manifest(
        Path(args.out).parent,
        "heatmap",
        {
            "preds": args.preds,
            "gt": args.gt,
            "mode": args.mode,
            "width": args.width,
            "height": args.height,
            "score_floor": config.heatmap_score_floor,
            "iou_thresh": config.iou_thresh,
            "samples": len(samples),
            **meta,
        },
        [args.preds, args.gt],
    )
    print(f"heatmap ({args.mode}) over {len(samples)} samples -> {args.out}")
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    config = resolve_config(
        {"iou_thresh": args.iou, "score_floor": args.score_floor, "nms_iou": args.nms_iou},
        config_file=args.config,
    )
    scenes = _load_scenes(args.gt, args.image_root)
    labels = args.labels.split(",") if args.labels else None
    if labels and len(labels) != len(args.preds):
        raise StageError(
            f"{len(labels)} labels for {len(args.preds)} prediction files"
        )
    scene_order = sorted({s.scene_id.split("__")[0] for s in scenes})
    gts = _gts_by_image(scenes)
    vectors: list[FnVector] = []
    for index, preds_path in enumerate(args.preds):
        sets = _single_group(
            load_predictions(preds_path), preds_path, model=args.model, prompt=args.prompt
        )
        cleaned = [nms(s, config.nms_iou) for s in sets]
        label = labels[index] if labels else Path(preds_path).stem
        vectors.append(
            fn_counts_per_scene(
                cleaned,
                gts,
                scene_order,
                iou_thresh=config.iou_thresh,
                score_floor=config.score_floor,
                dataset_id=label,
                scene_key=lambda image_id: image_id.split("__")[0],
            )
        )
    pearson, spearman, ids = fn_correlation(vectors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix(out / "fn_pearson.csv", pearson, ids)
    _write_matrix(out / "fn_spearman.csv", spearman, ids)
    with open(out / "fn_vectors.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scene_id"] + ids)
        for row_index, scene_id in enumerate(scene_order):
            writer.writerow([scene_id] + [v.counts[row_index] for v in vectors])
    _write_manifest(
        out,
        "correlate",
        {
            "preds": [str(p) for p in args.preds],
            "gt": args.gt,
            "labels": ids,
            "scenes": len(scene_order),
            "iou_thresh": config.iou_thresh,
            "score_floor": config.score_floor,
        },
        [Path(p) for p in args.preds] + [args.gt],
    )
    for name, matrix in (("pearson", pearson), ("spearman", spearman)):
        print(f"{name}:")
        print("  " + "  ".join(f"{v:7.4f}" for v in matrix.flatten()))
    print(f"correlation tables -> {out}")
    return 0


def _write_matrix(path: Path, matrix: np.ndarray, ids: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + ids)
        for label, row in zip(ids, matrix):
            writer.writerow([label] + [repr(float(v)) for v in row])


def cmd_report(args: argparse.Namespace) -> int:
    results: list[EvalResult] = []
    for path in args.results:
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                results.append(
                    EvalResult(
                        model_name=row["model"],
                        prompt_id=row["prompt"],
                        dataset_id=row["dataset"],
                        auprc=float(row["auprc"]),
                        ap_50_95=float(row["ap_50_95"]),
                        ar_50_95=float(row["ar_50_95"]),
                        tp=int(row["tp"]),
                        fp=int(row["fp"]),
                        fn=int(row["fn"]),
                    )
                )
    if not results:
        raise StageError("no rows in the given results files")
    out = Path(args.out)
    csv_path, txt_path = emit_tables(results, out)
    _write_manifest(
        out,
        "report",
        {"results": [str(p) for p in args.results], "rows": len(results)},
        [Path(p) for p in args.results],
    )
    print(txt_path.read_text(encoding="utf-8"), end="")
    print(f"merged tables -> {csv_path}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="flat key=value file")
    parser.add_argument("--image-root", type=Path, default=Path("."),
                        help="base directory for relative annotation paths")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovdprobe",
        description="Challenge open-vocabulary detectors with inpainted street scenes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load annotations and keep eligible scenes")
    _add_common(p)
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--min-area", type=int, default=MIN_OBJECT_PIXELS)
    p.add_argument("--all-objects", action="store_true",
                   help="keep multi-object scenes (single-object filter off)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("plan-hybrid", help="plan hybrid-concept inpainting jobs")
    _add_common(p)
    p.add_argument("--eligible", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--preset", default=None, help="v1..v4 (v1 needs explicit params)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--nouns", type=Path, default=None)
    _add_param_overrides(p)
    p.set_defaults(func=cmd_plan_hybrid)

    p = sub.add_parser("plan-single", help="plan single-concept inpainting jobs")
    _add_common(p)
    p.add_argument("--eligible", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--keywords", type=Path, default=None)
    p.add_argument("--min-overlap", type=float, default=None)
    p.add_argument("--min-area", type=int, default=MIN_OBJECT_PIXELS)
    _add_param_overrides(p)
    p.set_defaults(func=cmd_plan_single)

    p = sub.add_parser("plan-random", help="plan random-location inpainting jobs")
    _add_common(p)
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--preset", default=None)
    p.add_argument("--n-road", type=int, default=1600)
    p.add_argument("--n-border", type=int, default=400)
    p.add_argument("--margin", type=int, default=512)
    p.add_argument("--border-depth", type=int, default=10)
    p.add_argument("--fixed-prompt", default=None)
    p.add_argument("--nouns", type=Path, default=None)
    _add_param_overrides(p)
    p.set_defaults(func=cmd_plan_random)

    p = sub.add_parser("inpaint", help="execute planned jobs against the service")
    _add_common(p)
    p.add_argument("--jobs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--service-url", default=None)
    p.add_argument("--concurrency", type=int, default=None)
    p.add_argument("--discard-file", type=Path, default=None)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("probe", help="generate control probe images")
    _add_common(p)
    p.add_argument("--eligible", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument(
        "--kind",
        required=True,
        choices=["noise", "noise_white", "noise_grey", "pattern", "removed",
                 "brightness_smooth"],
    )
    p.add_argument("--color", choices=["white", "grey"], default="white")
    p.add_argument("--threshold", type=int, default=BRIGHTNESS_THRESHOLD)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("detect", help="collect detector predictions per prompt")
    _add_common(p)
    p.add_argument("--images", type=Path, required=True,
                   help="directory of images or a JSON listing")
    p.add_argument("--out", type=Path, required=True, help="predictions JSONL path")
    p.add_argument("--model", default="model")
    p.add_argument("--service-url", default=None)
    p.add_argument("--score-floor", type=float, default=0.0)
    p.add_argument("--prompts", default=None, help="comma-separated subset of p1..p5")
    p.add_argument("--concurrency", type=int, default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    _add_common(p)
    p.add_argument("--preds", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dataset-id", default="dataset")
    p.add_argument("--iou", type=float, default=None)
    p.add_argument("--score-floor", type=float, default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heatmap", help="pixel-wise recall or FN-count heatmap")
    _add_common(p)
    p.add_argument("--preds", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output PNG path")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--mode", choices=["recall", "fn_count"], default="recall")
    p.add_argument("--model", default=None, help="keep only this model's predictions")
    p.add_argument("--prompt", default=None, help="keep only this prompt's predictions")
    p.add_argument("--score-floor", type=float, default=None)
    p.add_argument("--iou", type=float, default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("correlate", help="FN-per-scene correlation across datasets")
    _add_common(p)
    p.add_argument("--preds", type=Path, action="append", required=True,
                   help="repeatable: one predictions file per dataset")
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--labels", default=None, help="comma-separated dataset labels")
    p.add_argument("--model", default=None, help="keep only this model's predictions")
    p.add_argument("--prompt", default=None, help="keep only this prompt's predictions")
    p.add_argument("--iou", type=float, default=None)
    p.add_argument("--score-floor", type=float, default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="merge and re-emit results tables")
    _add_common(p)
    p.add_argument("--results", type=Path, action="append", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _add_param_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sampler", default=None)
    parser.add_argument("--denoising", type=float, default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--padding-mask-crop", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--repeats", type=int, default=None)
    parser.add_argument("--fill", action="store_const", const=True, default=None)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
