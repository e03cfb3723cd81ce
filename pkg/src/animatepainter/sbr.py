"""Built-in stroke-based renderer: greedy coarse-to-fine stroke planning,
sequential rendering, and strokes/v1 JSON import/export.

The planner lays a grid per level (cell size proportional to the current
stroke scale), samples jittered candidate strokes per cell, scores each by
the exact squared-error delta over its bounding box, and keeps the best
candidate of a cell when it improves the canvas-level MSE by at least
`min_improvement`. Acceptance is sequential, so results are reproducible
for a given seed regardless of evaluation parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (
    RGB,
    WHITE,
    RasterImage,
    Stroke,
    StrokeList,
    blank_canvas,
    dump_json,
    load_json,
    mse,
    stroke_footprint,
    strokelist_from_dict,
    strokelist_to_dict,
)

# Planner candidates snap to 8 rotations; jitter handles the rest.
ROTATIONS = tuple(k * math.pi / 8.0 for k in range(8))


@dataclass(frozen=True)
class PlannerConfig:
    levels: int = 4
    strokes_per_level: int | tuple[int, ...] = (32, 64, 128, 256)
    candidates_per_cell: int = 8
    seed: int = 0
    min_improvement: float = 1e-7
    background: RGB = WHITE
    base_length: float = 0.18
    shrink: float = 0.55

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.candidates_per_cell < 1:
            raise ValueError("candidates_per_cell must be >= 1")
        if self.min_improvement <= 0.0:
            raise ValueError("min_improvement must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0,1)")
        budgets = self.budgets()
        if any(b < 0 for b in budgets):
            raise ValueError("per-level stroke budgets must be >= 0")

    def budgets(self) -> tuple[int, ...]:
        """Per-level stroke budgets, expanded to one entry per level."""
        spl = self.strokes_per_level
        if isinstance(spl, int):
            return (spl,) * self.levels
        spl = tuple(int(b) for b in spl)
        if len(spl) != self.levels:
            raise ValueError(
                f"strokes_per_level has {len(spl)} entries for {self.levels} levels"
            )
        return spl


@dataclass(frozen=True)
class PlanResult:
    """A planned stroke list plus the canvas MSE recorded at blank and after
    each accepted stroke (strictly decreasing)."""

    stroke_list: StrokeList
    mse_history: tuple[float, ...]


def _blend(region: np.ndarray, alpha: np.ndarray, color: np.ndarray) -> np.ndarray:
    a = alpha[:, :, None]
    return np.clip(a * color + (1.0 - a) * region, 0.0, 1.0)


def _sse(a: np.ndarray, b: np.ndarray) -> float:
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.sum(d * d))


def _candidate(rng: np.random.Generator, cell_box: tuple[int, int, int, int],
               length: float, width: int, height: int) -> Stroke:
    x0, x1, y0, y1 = cell_box
    px = rng.uniform(x0, x1)
    py = rng.uniform(y0, y1)
    rot = ROTATIONS[int(rng.integers(0, len(ROTATIONS)))]
    ln = min(max(length * rng.uniform(0.75, 1.35), 1e-4), 1.0)
    th = ln * rng.uniform(0.35, 0.6)
    return Stroke(
        cx=min(max(px / width, 0.0), 1.0),
        cy=min(max(py / height, 0.0), 1.0),
        length=ln,
        thick=th,
        rotation=rot,
        color=(0.0, 0.0, 0.0),  # replaced by the mean target color below
        opacity=1.0,
        index=0,
    )


def plan(
    target: RasterImage,
    config: PlannerConfig | None = None,
    observer: Callable[[dict], None] | None = None,
) -> PlanResult:
    """Greedy coarse-to-fine stroke planning against `target`.

    `observer`, when given, receives one event dict per evaluated cell with
    the candidate strokes, their canvas-level MSE improvements, and the
    accepted stroke (or None); used by audits and tests.
    """
    config = config or PlannerConfig()
    if target.channels != 3:
        raise ValueError("planning requires an RGB target")
    height, width = target.height, target.width
    if min(width, height) < 16:
        raise ValueError(f"target too small to plan: {width}x{height} (min dim 16)")

    tgt = target.data
    canvas = np.array(blank_canvas(width, height, config.background).data)
    total = float(tgt.size)
    scale = 2.0 * math.hypot(width, height)

    current_sse = _sse(canvas, tgt)
    history = [current_sse / total]
    accepted: list[Stroke] = []

    for level, budget in enumerate(config.budgets()):
        length = config.base_length * config.shrink**level
        len_px = length * scale
        cell_px = max(4, int(round(len_px * 0.75)))
        n_cols = max(1, math.ceil(width / cell_px))
        n_rows = max(1, math.ceil(height / cell_px))
        taken = 0
        sweep = 0
        while taken < budget:
            gained = 0
            for row in range(n_rows):
                for col in range(n_cols):
                    if taken >= budget:
                        break
                    rng = np.random.default_rng(
                        [config.seed, level, sweep, row, col]
                    )
                    cell_box = (
                        col * cell_px,
                        min((col + 1) * cell_px, width),
                        row * cell_px,
                        min((row + 1) * cell_px, height),
                    )
                    best = None
                    best_gain = -math.inf
                    cands: list[Stroke] = []
                    gains: list[float] = []
                    for _ in range(config.candidates_per_cell):
                        stroke = _candidate(rng, cell_box, length, width, height)
                        hit = stroke_footprint(width, height, stroke)
                        if hit is None:
                            continue
                        rows_, cols_, alpha = hit
                        covered = alpha > 0.0
                        if not covered.any():
                            continue
                        mean_color = tgt[rows_, cols_][covered].mean(axis=0)
                        stroke = Stroke(
                            cx=stroke.cx, cy=stroke.cy, length=stroke.length,
                            thick=stroke.thick, rotation=stroke.rotation,
                            color=tuple(np.clip(mean_color, 0.0, 1.0).tolist()),
                            opacity=stroke.opacity, index=0,
                        )
                        region = canvas[rows_, cols_]
                        tregion = tgt[rows_, cols_]
                        blended = _blend(region, alpha, np.asarray(stroke.color, np.float32))
                        gain = (_sse(region, tregion) - _sse(blended, tregion)) / total
                        cands.append(stroke)
                        gains.append(gain)
                        if gain > best_gain:
                            best, best_gain = (stroke, rows_, cols_, alpha, blended), gain
                    chosen = None
                    if best is not None and best_gain >= config.min_improvement:
                        stroke, rows_, cols_, alpha, blended = best
                        canvas[rows_, cols_] = blended
                        current_sse -= best_gain * total
                        chosen = Stroke(
                            cx=stroke.cx, cy=stroke.cy, length=stroke.length,
                            thick=stroke.thick, rotation=stroke.rotation,
                            color=stroke.color, opacity=stroke.opacity,
                            index=len(accepted),
                        )
                        accepted.append(chosen)
                        history.append(current_sse / total)
                        taken += 1
                        gained += 1
                    if observer is not None:
                        observer(
                            {
                                "level": level,
                                "sweep": sweep,
                                "cell": (row, col),
                                "candidates": cands,
                                "improvements": gains,
                                "accepted": chosen,
                            }
                        )
            if gained == 0:
                break
            sweep += 1

    strokes = StrokeList(
        strokes=tuple(accepted),
        canvas_width=width,
        canvas_height=height,
        background=config.background,
    )
    return PlanResult(stroke_list=strokes, mse_history=tuple(history))


def plan_strokes(target: RasterImage, config: PlannerConfig | None = None) -> StrokeList:
    """Plan a stroke list approximating `target`; see `plan` for the trace."""
    return plan(target, config).stroke_list


def render_onto(canvas: np.ndarray, strokes: Sequence[Stroke],
                width: int, height: int) -> np.ndarray:
    """Composite strokes in the given order into a mutable float32 array."""
    for stroke in strokes:
        hit = stroke_footprint(width, height, stroke)
        if hit is None:
            continue
        rows, cols, alpha = hit
        canvas[rows, cols] = _blend(
            canvas[rows, cols], alpha, np.asarray(stroke.color, np.float32)
        )
    return canvas


def render(strokes: StrokeList) -> RasterImage:
    """Sequential composite of all strokes in index order over the background."""
    canvas = np.array(
        blank_canvas(strokes.canvas_width, strokes.canvas_height, strokes.background).data
    )
    render_onto(canvas, strokes.strokes, strokes.canvas_width, strokes.canvas_height)
    return RasterImage(canvas)


def import_strokes(path: str | Path) -> StrokeList:
    """Read and validate a strokes/v1 JSON file."""
    return strokelist_from_dict(load_json(path))


def export_strokes(strokes: StrokeList, path: str | Path) -> None:
    """Write a strokes/v1 JSON file; floats round-trip exactly."""
    dump_json(strokelist_to_dict(strokes), path)


def final_mse(result: PlanResult, target: RasterImage) -> float:
    """Canvas MSE of the fully rendered plan against the target."""
    return mse(render(result.stroke_list), target)
