"""Test bench that probes open-vocabulary object detectors with synthetically
inpainted street-scene objects."""

__version__ = "0.1.0"

from .boxes import BBox, iou
from .dataset import (
    AnnotationError,
    GroundTruthObject,
    SceneRecord,
    filter_eligible,
    load_dataset,
    save_dataset,
)
from .detection import (
    FetchFailure,
    Prediction,
    PredictionSet,
    fetch_predictions,
    load_predictions,
    save_predictions,
)
from .evaluation import (
    EvalResult,
    FnVector,
    HeatmapGrid,
    MatchResult,
    coco_ap_ar,
    evaluate,
    fn_correlation,
    fn_counts_per_scene,
    heatmap,
    match,
    nms,
    pr_curve_auprc,
)
from .generation import (
    GenerationOutcome,
    GenerationParams,
    InpaintJob,
    apply_discard_list,
    execute,
    plan_hybrid_dataset,
    plan_random_location_dataset,
    plan_single_concept_dataset,
    preset,
)
from .placement import (
    CropFrame,
    OvalMask,
    PlacedSample,
    RectMask,
    SamplePlan,
    build_sample_sets,
    crop_frame_around,
    crop_tier,
    drivable_overlap,
    oval_mask,
    rect_mask,
    sample_plan,
)
from .probes import brightness_smooth, noise_oval, pattern_patch, removed
from .prompts import (
    PromptSpec,
    detection_prompts,
    default_keywords,
    default_nouns,
    hybrid_prompt,
    parse_hybrid,
    single_concept_prompt,
)
from .report import emit_tables, render_heatmap

__all__ = [name for name in dir() if not name.startswith("_")]
