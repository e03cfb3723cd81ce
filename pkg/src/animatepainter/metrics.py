"""Frame- and sequence-level evaluation: MSE/PSNR, SSIM, per-frame distance
curves, dynamic time warping, and the drawing-dynamics consistency score.

DDC compares a keyframe sequence's normalized distance-to-target curve
against an idealized linear completion from 1 down to 0; lower values mean
steadier, more human-like progress.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import KeyframeSequence, RasterImage, dump_json, load_json, mse
from .errors import InputError, MetricError, SchemaError
from .layering import luminance

FRAMESCORES_SCHEMA = "framescores/v1"
DDC_REPORT_SCHEMA = "ddcreport/v1"

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 1.0

METRIC_NAMES = ("mse-dist", "ssim-dist", "ingested")


@dataclass(frozen=True)
class DistanceCurve:
    """Per-frame distances from a sequence to its target."""

    values: tuple[float, ...]
    metric_name: str

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(v < 0.0 or not math.isfinite(v) for v in vals):
            raise ValueError("distances must be finite and >= 0")


@dataclass(frozen=True)
class DdcReport:
    """DDC value plus the normalized and theoretical curves behind it."""

    ddc: float
    curve: DistanceCurve
    theoretical: DistanceCurve

    def __post_init__(self):
        if self.ddc < 0.0:
            raise ValueError("ddc must be >= 0")
        for c in (self.curve, self.theoretical):
            if abs(c.values[0] - 1.0) > 1e-12:
                raise ValueError("report curves must start at 1 (blank frame)")


def psnr(a: RasterImage, b: RasterImage) -> float:
    """10 * log10(1 / mse); identical images report +inf."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64) - half
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable 2-D correlation, valid region only."""
    win = kernel.size
    tmp = np.lib.stride_tricks.sliding_window_view(img, win, axis=0) @ kernel
    return np.lib.stride_tricks.sliding_window_view(tmp, win, axis=1) @ kernel


def ssim(a: RasterImage, b: RasterImage) -> float:
    """Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), computed
    on grayscale at dynamic range 1. RGB inputs are converted via Rec.601
    luma first."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValueError(
            f"image {a.width}x{a.height} smaller than the {SSIM_WINDOW}px SSIM window"
        )
    x = luminance(a)
    y = luminance(b)
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    var_x = _filter_valid(x * x, kernel) - mu_x * mu_x
    var_y = _filter_valid(y * y, kernel) - mu_y * mu_y
    cov = _filter_valid(x * y, kernel) - mu_x * mu_y
    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def load_framescores(path: str | Path) -> tuple[str, list[float]]:
    """Read a framescores/v1 file of externally computed per-frame scores."""
    doc = load_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != FRAMESCORES_SCHEMA:
        raise SchemaError(f"expected schema {FRAMESCORES_SCHEMA!r}")
    if "values" not in doc or not isinstance(doc["values"], list):
        raise SchemaError("framescores file missing a values list")
    try:
        values = [float(v) for v in doc["values"]]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"framescores values must be numbers: {exc}") from exc
    if any(v < 0.0 or not math.isfinite(v) for v in values):
        raise SchemaError("framescores values must be finite and >= 0")
    return str(doc.get("metric", "ingested")), values


def distance_curve(
    seq: KeyframeSequence,
    target: RasterImage,
    metric: str = "ssim-dist",
    scores: Sequence[float] | None = None,
) -> DistanceCurve:
    """Per-frame distance from each frame to the target.

    metric "mse-dist" uses plain MSE, "ssim-dist" uses (1 - SSIM)/2, and
    "ingested" consumes externally computed scores (one per frame).
    """
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRIC_NAMES}")
    if metric == "ingested":
        if scores is None:
            raise InputError("metric 'ingested' requires a per-frame score list")
        if len(scores) != len(seq):
            raise InputError(
                f"got {len(scores)} ingested scores for {len(seq)} frames"
            )
        return DistanceCurve(values=tuple(scores), metric_name="ingested")
    values = []
    for frame in seq.frames:
        if metric == "mse-dist":
            values.append(mse(frame, target))
        else:
            values.append((1.0 - ssim(frame, target)) / 2.0)
    return DistanceCurve(values=tuple(values), metric_name=metric)


def dtw(a: Sequence[float], b: Sequence[float]) -> float:
    """Classic dynamic time warping cost with absolute-difference local
    cost and no warping-window constraint."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("dtw requires non-empty sequences")
    xs = np.asarray(a, dtype=np.float64)
    ys = np.asarray(b, dtype=np.float64)
    n, m = xs.size, ys.size
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        costs = np.abs(xs[i - 1] - ys)
        for j in range(1, m + 1):
            acc[i, j] = costs[j - 1] + min(
                acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1]
            )
    return float(acc[n, m])


def theoretical_curve(length: int) -> DistanceCurve:
    """Idealized completion: linear descent from 1 to 0."""
    return DistanceCurve(
        values=tuple(np.linspace(1.0, 0.0, length)), metric_name="theoretical"
    )


def ddc(
    seq: KeyframeSequence,
    target: RasterImage,
    metric: str = "ssim-dist",
    scores: Sequence[float] | None = None,
) -> DdcReport:
    """DTW distance between the sequence's first-value-normalized distance
    curve and the linear theoretical curve of the same length."""
    if len(seq) < 2:
        raise MetricError(f"ddc needs at least 2 frames, got {len(seq)}")
    raw = distance_curve(seq, target, metric, scores)
    first = raw.values[0]
    if first == 0.0:
        raise MetricError("degenerate sequence: first frame already matches the target")
    norm = DistanceCurve(
        values=tuple(v / first for v in raw.values), metric_name=raw.metric_name
    )
    theo = theoretical_curve(len(norm.values))
    return DdcReport(ddc=dtw(norm.values, theo.values), curve=norm, theoretical=theo)


def ddc_from_curve(raw: DistanceCurve) -> DdcReport:
    """DDC for an already-computed raw distance curve."""
    if len(raw.values) < 2:
        raise MetricError("ddc needs at least 2 frames")
    first = raw.values[0]
    if first == 0.0:
        raise MetricError("degenerate sequence: first frame already matches the target")
    norm = DistanceCurve(
        values=tuple(v / first for v in raw.values), metric_name=raw.metric_name
    )
    theo = theoretical_curve(len(norm.values))
    return DdcReport(ddc=dtw(norm.values, theo.values), curve=norm, theoretical=theo)


# ---------------------------------------------------------------------------
# report serialization


def report_to_dict(report: DdcReport) -> dict:
    return {
        "schema": DDC_REPORT_SCHEMA,
        "ddc": report.ddc,
        "metric": report.curve.metric_name,
        "curve": list(report.curve.values),
        "theoretical": list(report.theoretical.values),
    }


def report_from_dict(doc: dict) -> DdcReport:
    if not isinstance(doc, dict) or doc.get("schema") != DDC_REPORT_SCHEMA:
        raise SchemaError(f"expected schema {DDC_REPORT_SCHEMA!r}")
    return DdcReport(
        ddc=float(doc["ddc"]),
        curve=DistanceCurve(tuple(doc["curve"]), str(doc.get("metric", "ingested"))),
        theoretical=DistanceCurve(tuple(doc["theoretical"]), "theoretical"),
    )


def export_report(report: DdcReport, path: str | Path) -> None:
    dump_json(report_to_dict(report), path)


def export_curve_csv(report: DdcReport, path: str | Path) -> None:
    """Write the normalized and theoretical curves as CSV for plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("frame,distance,theoretical\n")
        for i, (v, t) in enumerate(zip(report.curve.values, report.theoretical.values)):
            fh.write(f"{i},{v!r},{t!r}\n")
