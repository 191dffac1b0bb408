"""Detection metrics: NMS, greedy matching, AUPRC, COCO AP/AR, heatmaps, FN correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .boxes import BBox, iou
from .detection import Prediction, PredictionSet

DEFAULT_IOU_THRESH = 0.5
DEFAULT_SCORE_FLOOR = 0.1
HEATMAP_SCORE_FLOOR = 0.2
# linspace, not arange: arange accumulates rounding error (its third value is
# 0.6000000000000001, which would reject a detection whose IoU is exactly 0.6)
COCO_IOU_THRESHOLDS = np.linspace(0.5, 0.95, 10, endpoint=True)
COCO_RECALL_POINTS = np.linspace(0.0, 1.0, 101)
COCO_MAX_DETECTIONS = 100


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    matched_pairs: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.tp != len(self.matched_pairs):
            raise ValueError("tp must equal the number of matched pairs")
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class EvalResult:
    model_name: str
    prompt_id: str
    dataset_id: str
    auprc: float
    ap_50_95: float
    ar_50_95: float
    tp: int
    fp: int
    fn: int
    iou_threshold: float = DEFAULT_IOU_THRESH


@dataclass(frozen=True)
class HeatmapGrid:
    width: int
    height: int
    tp_count: np.ndarray
    fn_count: np.ndarray

    @property
    def recall(self) -> np.ndarray:
        """tp/(tp+fn) per pixel; NaN where no sample bbox covers the pixel."""
        total = self.tp_count + self.fn_count
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, self.tp_count / np.maximum(total, 1), np.nan)


@dataclass(frozen=True)
class FnVector:
    dataset_id: str
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("FN counts must be non-negative")


def nms(pset: PredictionSet, iou_thresh: float = DEFAULT_IOU_THRESH) -> PredictionSet:
    """Greedy NMS per prompt: keep by descending score (ties: larger area, then
    input order), suppress remaining boxes with IoU strictly above the threshold."""
    preds = pset.predictions
    if len(preds) <= 1:
        return pset
    order = sorted(
        range(len(preds)), key=lambda i: (-preds[i].score, -preds[i].bbox.area, i)
    )
    kept: list[int] = []
    suppressed = [False] * len(preds)
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        for j in order:
            if not suppressed[j] and j != i and iou(preds[i].bbox, preds[j].bbox) > iou_thresh:
                suppressed[j] = True
    kept.sort()
    return PredictionSet(
        image_id=pset.image_id,
        model_name=pset.model_name,
        prompt_id=pset.prompt_id,
        predictions=tuple(preds[i] for i in kept),
    )


def match(
    preds: list[Prediction] | tuple[Prediction, ...],
    gts: list[BBox] | tuple[BBox, ...],
    iou_thresh: float = DEFAULT_IOU_THRESH,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> MatchResult:
    """Greedy matching by descending score; a prediction takes the unmatched
    ground truth of highest IoU when that IoU is strictly above the threshold.

    matched_pairs carries indices into the *input* prediction list.
    """
    eligible = [i for i, p in enumerate(preds) if p.score >= score_floor]
    eligible.sort(key=lambda i: (-preds[i].score, i))
    taken = [False] * len(gts)
    pairs: list[tuple[int, int, float]] = []
    for i in eligible:
        best_iou = 0.0
        best_gt = -1
        for g, gt in enumerate(gts):
            if taken[g]:
                continue
            overlap = iou(preds[i].bbox, gt)
            if overlap > best_iou:  # strict: ties keep the lowest gt index
                best_iou = overlap
                best_gt = g
        if best_gt >= 0 and best_iou > iou_thresh:
            taken[best_gt] = True
            pairs.append((i, best_gt, best_iou))
    tp = len(pairs)
    return MatchResult(
        tp=tp, fp=len(eligible) - tp, fn=len(gts) - tp, matched_pairs=tuple(pairs)
    )


def _match_labels(
    preds: list[Prediction] | tuple[Prediction, ...],
    gts: list[BBox] | tuple[BBox, ...],
    iou_thresh: float,
) -> list[bool]:
    """Per-prediction TP labels from a floor-0 match.

    Greedy matching by descending score is prefix-stable: the matches among
    predictions above any score threshold equal the matches of running the
    greedy rule on just those predictions.  This turns threshold sweeps into a
    classification-style PR computation over fixed labels.
    """
    result = match(preds, gts, iou_thresh=iou_thresh, score_floor=0.0)
    labels = [False] * len(preds)
    for pred_idx, _, _ in result.matched_pairs:
        labels[pred_idx] = True
    return labels


def pr_curve_auprc(
    preds: list[Prediction] | tuple[Prediction, ...],
    gts: list[BBox] | tuple[BBox, ...],
    iou_thresh: float = DEFAULT_IOU_THRESH,
) -> tuple[list[tuple[float, float]], float]:
    """PR points over descending unique score thresholds and the step-wise AUPRC.

    Points are (recall, precision).  AUPRC = sum (R_i − R_{i−1}) · P_i with
    R_0 = 0; no prediction or no ground truth yields an empty curve and 0.
    """
    if not preds or not gts:
        return [], 0.0
    labels = _match_labels(preds, gts, iou_thresh)
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    n_gt = len(gts)
    points: list[tuple[float, float]] = []
    tp = 0
    seen = 0
    for rank, idx in enumerate(order):
        tp += labels[idx]
        seen += 1
        nxt = order[rank + 1] if rank + 1 < len(order) else None
        if nxt is not None and preds[nxt].score == preds[idx].score:
            continue  # same threshold: only the completed tie group is an operating point
        points.append((tp / n_gt, tp / seen))
    auprc = 0.0
    prev_recall = 0.0
    for recall, precision in points:
        auprc += (recall - prev_recall) * precision
        prev_recall = recall
    return points, auprc


def _coco_single_threshold(
    image_preds: list[tuple[list[Prediction], list[BBox]]], thresh: float
) -> tuple[np.ndarray, np.ndarray, int]:
    """COCO-style matching at one IoU threshold across images.

    Returns (scores, tp_flags, n_gt) pooled over images, with per-image
    matching on mergesort-stable descending score, gt chosen by highest IoU
    with IoU >= min(thresh, 1 − 1e-10) and later ties winning, detections
    capped at COCO_MAX_DETECTIONS per image.
    """
    all_scores: list[float] = []
    all_tp: list[bool] = []
    n_gt = 0
    min_required = min(thresh, 1.0 - 1e-10)
    for preds, gts in image_preds:
        n_gt += len(gts)
        order = np.argsort([-p.score for p in preds], kind="mergesort")[
            :COCO_MAX_DETECTIONS
        ]
        taken = [False] * len(gts)
        for i in order:
            pred = preds[int(i)]
            best = min_required
            best_gt = -1
            for g, gt in enumerate(gts):
                if taken[g]:
                    continue
                overlap = iou(pred.bbox, gt)
                if overlap >= best:
                    best = overlap
                    best_gt = g
            matched = best_gt >= 0
            if matched:
                taken[best_gt] = True
            all_scores.append(pred.score)
            all_tp.append(matched)
    return np.asarray(all_scores), np.asarray(all_tp, dtype=bool), n_gt


def coco_ap_ar(
    image_preds: list[tuple[list[Prediction], list[BBox]]],
) -> tuple[float, float]:
    """Class-agnostic COCO AP and AR averaged over IoU 0.50:0.05:0.95.

    AP uses 101-point recall interpolation of the precision envelope; AR is
    the mean over thresholds of final recall at up to 100 detections per image.
    """
    if not image_preds:
        return 0.0, 0.0
    ap_values: list[float] = []
    ar_values: list[float] = []
    for thresh in COCO_IOU_THRESHOLDS:
        scores, tp_flags, n_gt = _coco_single_threshold(image_preds, float(thresh))
        if n_gt == 0:
            continue
        if len(scores) == 0:
            ap_values.append(0.0)
            ar_values.append(0.0)
            continue
        order = np.argsort(-scores, kind="mergesort")
        tp_sorted = tp_flags[order]
        tp_cum = np.cumsum(tp_sorted)
        fp_cum = np.cumsum(~tp_sorted)
        recall = tp_cum / n_gt
        precision = tp_cum / np.maximum(tp_cum + fp_cum, 1e-12)
        # precision envelope: monotone non-increasing from the right
        for i in range(len(precision) - 1, 0, -1):
            precision[i - 1] = max(precision[i - 1], precision[i])
        indices = np.searchsorted(recall, COCO_RECALL_POINTS, side="left")
        interpolated = np.where(
            indices < len(precision), precision[np.minimum(indices, len(precision) - 1)], 0.0
        )
        ap_values.append(float(np.mean(interpolated)))
        ar_values.append(float(recall[-1]))
    if not ap_values:
        return 0.0, 0.0
    return float(np.mean(ap_values)), float(np.mean(ar_values))


def heatmap(
    samples: list[tuple[BBox, bool]],
    width: int,
    height: int,
) -> HeatmapGrid:
    """Accumulate per-pixel TP/FN counts over sample bboxes (outcome True = TP)."""
    tp_count = np.zeros((height, width), dtype=np.int64)
    fn_count = np.zeros((height, width), dtype=np.int64)
    for bbox, outcome in samples:
        ys, xs = bbox.pixel_slices()
        ys = slice(ys.start, min(ys.stop, height))
        xs = slice(xs.start, min(xs.stop, width))
        if ys.start >= ys.stop or xs.start >= xs.stop:
            continue
        (tp_count if outcome else fn_count)[ys, xs] += 1
    return HeatmapGrid(width=width, height=height, tp_count=tp_count, fn_count=fn_count)


def fn_counts_per_scene(
    sets: list[PredictionSet],
    gts: dict[str, list[BBox]],
    scene_order: list[str],
    iou_thresh: float = DEFAULT_IOU_THRESH,
    score_floor: float = DEFAULT_SCORE_FLOOR,
    dataset_id: str = "",
    scene_key=None,
) -> FnVector:
    """FN counts per scene; images without predictions count all their gts as FN.

    `gts` is keyed by image_id.  `scene_key` maps an image_id to the scene it
    belongs to (identity by default), so repeated synthetic copies of a scene
    aggregate into one count.
    """
    if scene_key is None:
        scene_key = lambda image_id: image_id
    by_image: dict[str, PredictionSet] = {s.image_id: s for s in sets}
    buckets: dict[str, int] = {}
    for image_id, scene_gts in gts.items():
        pset = by_image.get(image_id)
        preds = list(pset.predictions) if pset else []
        fn = match(preds, scene_gts, iou_thresh, score_floor).fn
        key = scene_key(image_id)
        buckets[key] = buckets.get(key, 0) + fn
    unknown = set(buckets) - set(scene_order)
    if unknown:
        raise ValueError(f"images map to scenes outside the given order: {sorted(unknown)}")
    counts = [buckets.get(scene_id, 0) for scene_id in scene_order]
    return FnVector(dataset_id=dataset_id, counts=tuple(counts))


def fn_correlation(
    vectors: list[FnVector],
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Pearson and Spearman correlation matrices over FN-count vectors.

    Zero-variance vectors give NaN off-diagonal entries; diagonals are 1.0.
    Returns (pearson, spearman, dataset_ids).
    """
    if not vectors:
        raise ValueError("at least one FN vector is required")
    length = len(vectors[0].counts)
    if length < 2:
        raise ValueError("FN vectors must have at least 2 entries")
    for vec in vectors:
        if len(vec.counts) != length:
            raise ValueError("all FN vectors must have the same length")
    n = len(vectors)
    data = np.asarray([v.counts for v in vectors], dtype=float)
    pearson = np.eye(n)
    spearman = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            if np.std(data[i]) == 0 or np.std(data[j]) == 0:
                pearson[i, j] = pearson[j, i] = math.nan
                spearman[i, j] = spearman[j, i] = math.nan
                continue
            pearson[i, j] = pearson[j, i] = float(np.corrcoef(data[i], data[j])[0, 1])
            rho = stats.spearmanr(data[i], data[j]).statistic
            spearman[i, j] = spearman[j, i] = float(rho)
    return pearson, spearman, [v.dataset_id for v in vectors]


def evaluate(
    sets: list[PredictionSet],
    gts: dict[str, list[BBox]],
    dataset_id: str,
    iou_thresh: float = DEFAULT_IOU_THRESH,
    score_floor: float = DEFAULT_SCORE_FLOOR,
    nms_thresh: float = DEFAULT_IOU_THRESH,
) -> list[EvalResult]:
    """Full per-(model, prompt) evaluation: NMS, pooled AUPRC, COCO AP/AR, TP/FP/FN."""
    by_group: dict[tuple[str, str], list[PredictionSet]] = {}
    for pset in sets:
        by_group.setdefault((pset.model_name, pset.prompt_id), []).append(pset)
    results: list[EvalResult] = []
    for (model_name, prompt_id), group in sorted(by_group.items()):
        cleaned = [nms(pset, nms_thresh) for pset in group]
        covered = {pset.image_id for pset in cleaned}
        image_pairs: list[tuple[list[Prediction], list[BBox]]] = []
        tp = fp = fn = 0
        for pset in cleaned:
            scene_gts = gts.get(pset.image_id, [])
            result = match(list(pset.predictions), scene_gts, iou_thresh, score_floor)
            tp += result.tp
            fp += result.fp
            fn += result.fn
            image_pairs.append((list(pset.predictions), scene_gts))
        for image_id, scene_gts in gts.items():
            if image_id not in covered:
                fn += len(scene_gts)
                image_pairs.append(([], scene_gts))
        auprc = _pooled_auprc(cleaned, gts, covered, iou_thresh)
        ap, ar = coco_ap_ar(image_pairs)
        results.append(
            EvalResult(
                model_name=model_name,
                prompt_id=prompt_id,
                dataset_id=dataset_id,
                auprc=auprc,
                ap_50_95=ap,
                ar_50_95=ar,
                tp=tp,
                fp=fp,
                fn=fn,
                iou_threshold=iou_thresh,
            )
        )
    return results


def _pooled_auprc(
    cleaned: list[PredictionSet],
    gts: dict[str, list[BBox]],
    covered: set[str],
    iou_thresh: float,
) -> float:
    """Dataset-level AUPRC: per-image TP labels pooled into one score-ranked sweep."""
    scores: list[float] = []
    labels: list[bool] = []
    n_gt = 0
    for pset in cleaned:
        scene_gts = gts.get(pset.image_id, [])
        n_gt += len(scene_gts)
        image_labels = _match_labels(list(pset.predictions), scene_gts, iou_thresh)
        scores.extend(p.score for p in pset.predictions)
        labels.extend(image_labels)
    for image_id, scene_gts in gts.items():
        if image_id not in covered:
            n_gt += len(scene_gts)
    if not scores or n_gt == 0:
        return 0.0
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    auprc = 0.0
    prev_recall = 0.0
    tp = 0
    seen = 0
    for rank, idx in enumerate(order):
        tp += labels[idx]
        seen += 1
        nxt = order[rank + 1] if rank + 1 < len(order) else None
        if nxt is not None and scores[nxt] == scores[idx]:
            continue
        recall = tp / n_gt
        auprc += (recall - prev_recall) * (tp / seen)
        prev_recall = recall
    return auprc
