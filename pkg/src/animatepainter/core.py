"""Shared image/stroke data types, pixel arithmetic, and compositing primitives.

Images are float32 arrays normalized to [0,1]; files are 8-bit PNG/JPEG.
Strokes are oriented soft-edged rectangles; see `composite_stroke` for the
brush model. All values are immutable after construction and safe to share
between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from PIL import Image

from .errors import FormatError, InputError, ParseError, SchemaError

RGB = tuple[float, float, float]

WHITE: RGB = (1.0, 1.0, 1.0)
BLACK: RGB = (0.0, 0.0, 0.0)

STROKES_SCHEMA = "strokes/v1"

# Fraction of the rectangle's thickness over which the brush edge fades out.
EDGE_FALLOFF = 0.15


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RasterImage:
    """H x W x C pixel grid with scalars in [0,1], stored as float32."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] not in (1, 3, 4):
            raise ValueError(f"image must be HxWx{{1,3,4}}, got shape {d.shape}")
        if d.dtype != np.float32:
            object.__setattr__(self, "data", d.astype(np.float32))
            d = self.data
        if d.size and (float(d.min()) < 0.0 or float(d.max()) > 1.0):
            raise ValueError("image scalars must lie in [0,1]")
        _freeze(d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _norm_rotation(rotation: float) -> float:
    """Map an angle to [0, pi); a stroke is symmetric under 180 deg rotation."""
    r = math.fmod(float(rotation), math.pi)
    if r < 0.0:
        r += math.pi
    if r >= math.pi:  # fmod rounding at the boundary
        r = 0.0
    return r


@dataclass(frozen=True)
class Stroke:
    """One brush stroke.

    Center and size are normalized: cx, cy are fractions of the canvas
    width/height, length and thick are fractions of twice the canvas
    diagonal (so a length-1 stroke always covers any canvas entirely).
    """

    cx: float
    cy: float
    length: float
    thick: float
    rotation: float
    color: RGB
    opacity: float
    index: int

    def __post_init__(self):
        object.__setattr__(self, "rotation", _norm_rotation(self.rotation))
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"stroke center ({self.cx}, {self.cy}) outside [0,1]^2")
        if not (0.0 < self.length <= 1.0):
            raise ValueError(f"stroke length {self.length} outside (0,1]")
        if not (0.0 < self.thick <= self.length):
            raise ValueError(f"stroke thick {self.thick} violates 0 < thick <= length")
        if len(self.color) != 3 or any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ValueError(f"stroke color {self.color} outside [0,1]^3")
        if not (0.0 <= self.opacity <= 1.0):
            raise ValueError(f"stroke opacity {self.opacity} outside [0,1]")
        if self.index < 0 or int(self.index) != self.index:
            raise ValueError(f"stroke index {self.index} must be an integer >= 0")
        object.__setattr__(self, "index", int(self.index))


@dataclass(frozen=True)
class StrokeList:
    """An ordered painting plan: strokes composite in index order."""

    strokes: tuple[Stroke, ...]
    canvas_width: int
    canvas_height: int
    background: RGB = WHITE

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))
        object.__setattr__(self, "background", tuple(float(c) for c in self.background))
        if self.canvas_width < 1 or self.canvas_height < 1:
            raise ValueError("canvas dimensions must be >= 1")
        indices = [s.index for s in self.strokes]
        if sorted(indices) != list(range(len(indices))):
            raise ValueError("stroke indices must be unique and contiguous from 0")
        if indices != sorted(indices):
            # canonicalize storage order to paint order
            object.__setattr__(
                self, "strokes", tuple(sorted(self.strokes, key=lambda s: s.index))
            )

    def __len__(self) -> int:
        return len(self.strokes)


@dataclass(frozen=True)
class KeyframeSequence:
    """Ordered frames from blank canvas to target, one stroke subset each.

    `stroke_sets` is None for sequences loaded from bare image files.
    """

    frames: tuple[RasterImage, ...]
    stroke_sets: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.stroke_sets is not None:
            sets = tuple(tuple(s) for s in self.stroke_sets)
            if len(sets) != len(self.frames):
                raise ValueError("one stroke set per frame required")
            object.__setattr__(self, "stroke_sets", sets)

    def __len__(self) -> int:
        return len(self.frames)


def blank_canvas(width: int, height: int, background: RGB = WHITE) -> RasterImage:
    """Constant RGB canvas filled with `background`."""
    if width < 1 or height < 1:
        raise ValueError(f"canvas dimensions must be >= 1, got {width}x{height}")
    data = np.empty((height, width, 3), dtype=np.float32)
    data[:] = np.asarray(background, dtype=np.float32)
    return RasterImage(data)


def _stroke_scale(width: int, height: int) -> float:
    # Normalized stroke sizes are fractions of twice the canvas diagonal:
    # a length-1, thick-1 stroke centered anywhere keeps every pixel inside
    # its fully-opaque core regardless of rotation or aspect ratio.
    return 2.0 * math.hypot(width, height)


def stroke_footprint(
    width: int, height: int, stroke: Stroke
) -> tuple[slice, slice, np.ndarray] | None:
    """Per-pixel alpha of `stroke` over the canvas, restricted to its bbox.

    Returns (row_slice, col_slice, alpha) or None when the stroke lies
    entirely off-canvas. Alpha is `opacity` inside the rectangle core and
    falls to zero along a cosine ramp over the outer band of width
    EDGE_FALLOFF * thickness, measured inward from the rectangle edge.
    """
    scale = _stroke_scale(width, height)
    half_len = 0.5 * stroke.length * scale
    half_thk = 0.5 * stroke.thick * scale
    cx = stroke.cx * width
    cy = stroke.cy * height
    cos_r = math.cos(stroke.rotation)
    sin_r = math.sin(stroke.rotation)

    # bbox of the rotated rectangle, clipped to the canvas
    ex = abs(half_len * cos_r) + abs(half_thk * sin_r)
    ey = abs(half_len * sin_r) + abs(half_thk * cos_r)
    c0 = max(int(math.floor(cx - ex)), 0)
    c1 = min(int(math.ceil(cx + ex)) + 1, width)
    r0 = max(int(math.floor(cy - ey)), 0)
    r1 = min(int(math.ceil(cy + ey)) + 1, height)
    if c0 >= c1 or r0 >= r1:
        return None

    xs = np.arange(c0, c1, dtype=np.float64) + 0.5 - cx
    ys = np.arange(r0, r1, dtype=np.float64) + 0.5 - cy
    dx, dy = np.meshgrid(xs, ys)
    a = dx * cos_r + dy * sin_r  # along major axis
    b = -dx * sin_r + dy * cos_r  # along minor axis

    margin = np.minimum(half_len - np.abs(a), half_thk - np.abs(b))
    band = EDGE_FALLOFF * 2.0 * half_thk
    alpha = np.zeros_like(margin)
    core = margin >= band
    edge = (margin > 0.0) & ~core
    alpha[core] = 1.0
    alpha[edge] = 0.5 * (1.0 - np.cos(np.pi * margin[edge] / band))
    alpha *= stroke.opacity
    return slice(r0, r1), slice(c0, c1), alpha.astype(np.float32)


def composite_stroke(canvas: RasterImage, stroke: Stroke) -> RasterImage:
    """Alpha-over composite of one stroke; pixels outside its footprint
    are untouched byte-for-byte. Off-canvas strokes clip silently."""
    if canvas.channels != 3:
        raise ValueError("composite_stroke requires an RGB canvas")
    hit = stroke_footprint(canvas.width, canvas.height, stroke)
    if hit is None:
        return canvas
    rows, cols, alpha = hit
    out = np.array(canvas.data)
    region = out[rows, cols]
    color = np.asarray(stroke.color, dtype=np.float32)
    a = alpha[:, :, None]
    out[rows, cols] = np.clip(a * color + (1.0 - a) * region, 0.0, 1.0)
    return RasterImage(out)


def mse(a: RasterImage, b: RasterImage) -> float:
    """Mean of squared per-scalar differences."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# image file I/O


def load_image(path: str | Path) -> RasterImage:
    """Read a PNG (RGB/RGBA) or JPEG file into a normalized image."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"image not found: {path}")
    try:
        with Image.open(path) as im:
            if im.mode not in ("RGB", "RGBA", "L"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float32) / 255.0
    except InputError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot decode image {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return RasterImage(arr)


def save_png(image: RasterImage, path: str | Path) -> None:
    """Write an image as 8-bit PNG."""
    arr = np.clip(np.rint(image.data * 255.0), 0, 255).astype(np.uint8)
    if arr.shape[2] == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr)
    pil.save(Path(path), format="PNG")


# ---------------------------------------------------------------------------
# strokes/v1 JSON schema


def strokelist_to_dict(strokes: StrokeList) -> dict:
    return {
        "schema": STROKES_SCHEMA,
        "canvas": {
            "w": strokes.canvas_width,
            "h": strokes.canvas_height,
            "bg": list(strokes.background),
        },
        "strokes": [
            {
                "cx": s.cx,
                "cy": s.cy,
                "len": s.length,
                "thick": s.thick,
                "rot": s.rotation,
                "color": list(s.color),
                "opacity": s.opacity,
                "index": s.index,
            }
            for s in strokes.strokes
        ],
    }


_STROKE_FIELDS = ("cx", "cy", "len", "thick", "rot", "color", "opacity", "index")


def strokelist_from_dict(doc: dict) -> StrokeList:
    """Validate a strokes/v1 document; errors name the offending stroke."""
    if not isinstance(doc, dict):
        raise SchemaError("strokes document must be a JSON object")
    if doc.get("schema") != STROKES_SCHEMA:
        raise SchemaError(f"expected schema {STROKES_SCHEMA!r}, got {doc.get('schema')!r}")
    canvas = doc.get("canvas")
    if not isinstance(canvas, dict) or not {"w", "h", "bg"} <= set(canvas):
        raise SchemaError("canvas must be an object with fields w, h, bg")
    raw = doc.get("strokes")
    if not isinstance(raw, list):
        raise SchemaError("strokes must be a list")
    parsed = []
    for pos, item in enumerate(raw):
        if not isinstance(item, dict):
            raise SchemaError(f"stroke {pos}: not an object")
        missing = [f for f in _STROKE_FIELDS if f not in item]
        if missing:
            raise SchemaError(f"stroke {pos}: missing field(s) {', '.join(missing)}")
        try:
            parsed.append(
                Stroke(
                    cx=float(item["cx"]),
                    cy=float(item["cy"]),
                    length=float(item["len"]),
                    thick=float(item["thick"]),
                    rotation=float(item["rot"]),
                    color=tuple(item["color"]),
                    opacity=float(item["opacity"]),
                    index=int(item["index"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"stroke {pos}: {exc}") from exc
    try:
        return StrokeList(
            strokes=tuple(parsed),
            canvas_width=int(canvas["w"]),
            canvas_height=int(canvas["h"]),
            background=tuple(canvas["bg"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def load_json(path: str | Path) -> dict:
    """Parse a JSON file, reporting line/column on failure."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def dump_json(doc: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
