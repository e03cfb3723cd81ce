"""animatepainter: self-supervised painting-process dataset generation and
evaluation.

The pipeline plans brush strokes for an image, orders them by local stroke
density, reverse-erases the painting into keyframes, layers the scene by
depth, and scores the resulting process videos.
"""

from .core import (
    KeyframeSequence,
    RasterImage,
    Stroke,
    StrokeList,
    blank_canvas,
    composite_stroke,
    load_image,
    mse,
    save_png,
)
from .config import RunConfig
from .dataset import CorpusEntry, build_dataset, filter_corpus, generate_one
from .erasure import (
    EraseSchedule,
    density_scores,
    erase_order,
    make_schedule,
    render_keyframes,
    sample_progressive,
)
from .layering import (
    DepthMap,
    LayerMasks,
    balanced_thresholds,
    ingest_depth,
    layer_masks,
    layered_images,
    pseudo_depth,
)
from .metrics import DdcReport, DistanceCurve, ddc, distance_curve, dtw, psnr, ssim
from .sbr import PlannerConfig, PlanResult, import_strokes, plan, plan_strokes, render

__version__ = "0.1.0"

__all__ = [
    "KeyframeSequence",
    "RasterImage",
    "Stroke",
    "StrokeList",
    "blank_canvas",
    "composite_stroke",
    "load_image",
    "mse",
    "save_png",
    "RunConfig",
    "CorpusEntry",
    "build_dataset",
    "filter_corpus",
    "generate_one",
    "EraseSchedule",
    "density_scores",
    "erase_order",
    "make_schedule",
    "render_keyframes",
    "sample_progressive",
    "DepthMap",
    "LayerMasks",
    "balanced_thresholds",
    "ingest_depth",
    "layer_masks",
    "layered_images",
    "pseudo_depth",
    "DdcReport",
    "DistanceCurve",
    "ddc",
    "distance_curve",
    "dtw",
    "psnr",
    "ssim",
    "PlannerConfig",
    "PlanResult",
    "import_strokes",
    "plan",
    "plan_strokes",
    "render",
]
