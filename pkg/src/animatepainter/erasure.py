"""Density-guided reverse erasure: score strokes by local crowding, erase
dense regions first, and render the resulting keyframe schedule.

Reversing an erase schedule yields a paint order that lays sparse outline
strokes before clustered detail strokes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    KeyframeSequence,
    RasterImage,
    StrokeList,
    blank_canvas,
    dump_json,
    load_json,
)
from .errors import SchemaError
from .sbr import render_onto

SCHEDULE_SCHEMA = "schedule/v1"

# Neighborhood radius as a fraction of canvas width.
NEIGHBOR_RADIUS = 0.1
# Two strokes count as similarly rotated below this circular angle distance.
NEIGHBOR_ANGLE = math.pi / 4.0


@dataclass(frozen=True)
class EraseSchedule:
    """Frame-by-frame stroke counts from the full painting down to blank."""

    frame_stroke_counts: tuple[int, ...]
    erase_order: tuple[int, ...]
    steps: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.frame_stroke_counts)
        order = tuple(int(i) for i in self.erase_order)
        object.__setattr__(self, "frame_stroke_counts", counts)
        object.__setattr__(self, "erase_order", order)
        if sorted(order) != list(range(len(order))):
            raise ValueError("erase_order must be a permutation of stroke indices")
        if len(counts) != self.steps + 1:
            raise ValueError("expected steps+1 frame counts")
        if counts[0] != len(order) or counts[-1] != 0:
            raise ValueError("counts must run from the stroke count down to 0")
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise ValueError("frame counts must be non-increasing")


def angle_distance(a: float, b: float) -> float:
    """Circular distance between rotations normalized to [0, pi)."""
    d = abs(a - b)
    return min(d, math.pi - d)


def density_scores(strokes: StrokeList) -> np.ndarray:
    """Per-stroke count of nearby, similarly-rotated other strokes.

    Neighbors are strokes whose centers lie strictly closer than
    NEIGHBOR_RADIUS times the canvas width and whose rotation differs by
    strictly less than NEIGHBOR_ANGLE (circular). Self-pairs are excluded,
    so an isolated stroke scores 0.
    """
    n = len(strokes)
    if n == 0:
        raise ValueError("density_scores requires a non-empty stroke list")
    w, h = strokes.canvas_width, strokes.canvas_height
    xs = np.array([s.cx * w for s in strokes.strokes])
    ys = np.array([s.cy * h for s in strokes.strokes])
    rot = np.array([s.rotation for s in strokes.strokes])

    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    close = dx * dx + dy * dy < (NEIGHBOR_RADIUS * w) ** 2
    dr = np.abs(rot[:, None] - rot[None, :])
    aligned = np.minimum(dr, math.pi - dr) < NEIGHBOR_ANGLE
    pair = close & aligned
    np.fill_diagonal(pair, False)
    return pair.sum(axis=1).astype(np.int64)


def erase_order(strokes: StrokeList, scores: np.ndarray) -> np.ndarray:
    """Stroke indices sorted densest-first; ties erase later paint indices
    first, so refinements disappear before the outlines beneath them."""
    n = len(strokes)
    if len(scores) != n:
        raise ValueError(f"scores length {len(scores)} != stroke count {n}")
    order = sorted(range(n), key=lambda i: (-int(scores[i]), -i))
    return np.array(order, dtype=np.int64)


def make_schedule(strokes: StrokeList, order: Sequence[int], steps: int) -> EraseSchedule:
    """Split the erasure of n strokes into `steps` even moves.

    Each move removes ceil(n/steps) strokes (clamped at zero), giving
    steps+1 frame counts from n down to 0.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = len(strokes)
    per_step = -(-n // steps) if n else 0
    counts = tuple(max(n - j * per_step, 0) for j in range(steps + 1))
    return EraseSchedule(
        frame_stroke_counts=counts,
        erase_order=tuple(int(i) for i in order),
        steps=steps,
    )


def frame_stroke_sets(strokes: StrokeList, schedule: EraseSchedule) -> list[tuple[int, ...]]:
    """Surviving stroke indices per frame, ordered target -> blank."""
    n = len(strokes)
    sets = []
    for count in schedule.frame_stroke_counts:
        erased = set(schedule.erase_order[: n - count])
        sets.append(tuple(i for i in range(n) if i not in erased))
    return sets


def render_keyframes(strokes: StrokeList, schedule: EraseSchedule) -> KeyframeSequence:
    """Render every schedule frame and emit them in paint order.

    Strokes surviving in a frame composite in their original paint-index
    order. The first emitted frame is the blank canvas, the last the full
    rendering.
    """
    if len(schedule.erase_order) != len(strokes):
        raise ValueError("schedule does not match this stroke list")
    w, h = strokes.canvas_width, strokes.canvas_height
    frames = []
    sets = frame_stroke_sets(strokes, schedule)
    for surviving in sets:
        canvas = np.array(blank_canvas(w, h, strokes.background).data)
        render_onto(canvas, [strokes.strokes[i] for i in surviving], w, h)
        frames.append(RasterImage(canvas))
    frames.reverse()
    sets.reverse()
    return KeyframeSequence(frames=tuple(frames), stroke_sets=tuple(sets))


def sample_progressive(
    frames: Sequence[RasterImage] | KeyframeSequence, count: int
) -> KeyframeSequence:
    """Pick `count` frames at evenly spaced indices, always keeping the
    first and last."""
    stroke_sets = None
    if isinstance(frames, KeyframeSequence):
        stroke_sets = frames.stroke_sets
        frames = frames.frames
    n = len(frames)
    if n < 2:
        raise ValueError("need at least 2 frames to sample")
    if count < 2:
        raise ValueError("need at least 2 output frames")
    if count > n:
        raise ValueError(f"cannot sample {count} frames from {n}")
    idx = [int(math.floor(j * (n - 1) / (count - 1) + 0.5)) for j in range(count)]
    picked = tuple(frames[i] for i in idx)
    picked_sets = tuple(stroke_sets[i] for i in idx) if stroke_sets is not None else None
    return KeyframeSequence(frames=picked, stroke_sets=picked_sets)


# ---------------------------------------------------------------------------
# schedule/v1 JSON


def schedule_to_dict(schedule: EraseSchedule) -> dict:
    return {
        "schema": SCHEDULE_SCHEMA,
        "steps": schedule.steps,
        "erase_order": list(schedule.erase_order),
        "counts": list(schedule.frame_stroke_counts),
    }


def schedule_from_dict(doc: dict) -> EraseSchedule:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEDULE_SCHEMA:
        raise SchemaError(f"expected schema {SCHEDULE_SCHEMA!r}")
    for key in ("steps", "erase_order", "counts"):
        if key not in doc:
            raise SchemaError(f"schedule missing field {key!r}")
    try:
        return EraseSchedule(
            frame_stroke_counts=tuple(doc["counts"]),
            erase_order=tuple(doc["erase_order"]),
            steps=int(doc["steps"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid schedule: {exc}") from exc


def export_schedule(schedule: EraseSchedule, path: str | Path) -> None:
    dump_json(schedule_to_dict(schedule), path)


def import_schedule(path: str | Path) -> EraseSchedule:
    return schedule_from_dict(load_json(path))
