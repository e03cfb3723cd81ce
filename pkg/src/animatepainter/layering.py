"""Depth-map layering: pixel-balanced thresholds, cumulative far-to-near
masks, and progressively revealed layered images.

Depth convention throughout: larger values are nearer to the viewer.
Layer 1 holds the farthest pixels, so painting mask by mask fills the
background first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .core import RGB, RasterImage, dump_json, load_json
from .errors import FormatError, InputError, SchemaError

LAYERS_SCHEMA = "layers/v1"

# Blend weights for the heuristic depth fallback: a vertical ramp (image
# bottoms tend to be nearer) dominates, luminance breaks ties within rows.
RAMP_WEIGHT = 0.7
LUMA_WEIGHT = 0.3

LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class DepthMap:
    """H x W field of relative depth; larger = nearer."""

    depth: np.ndarray

    def __post_init__(self):
        d = self.depth
        if d.ndim != 2 or d.size == 0:
            raise ValueError(f"depth map must be a non-empty HxW array, got {d.shape}")
        if d.dtype != np.float32:
            object.__setattr__(self, "depth", d.astype(np.float32))
            d = self.depth
        if not np.isfinite(d).all():
            raise ValueError("depth values must be finite")
        d.flags.writeable = False

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    def normalized(self) -> "DepthMap":
        """Min-max rescale to [0,1]; a constant map becomes all 0.5."""
        lo = float(self.depth.min())
        hi = float(self.depth.max())
        if hi > lo:
            return DepthMap((self.depth - lo) / (hi - lo))
        return DepthMap(np.full_like(self.depth, 0.5))


@dataclass(frozen=True)
class LayerMasks:
    """Cumulative far-to-near binary masks; mask_t is a subset of mask_t+1
    and the last mask covers every pixel."""

    masks: tuple[np.ndarray, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        masks = tuple(np.asarray(m, dtype=bool) for m in self.masks)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if len(masks) != len(self.thresholds) + 1:
            raise ValueError("expected one more mask than thresholds")
        if not masks[-1].all():
            raise ValueError("final mask must cover every pixel")
        for t in range(len(masks) - 1):
            if (masks[t] & ~masks[t + 1]).any():
                raise ValueError(f"mask {t + 1} is not nested inside mask {t + 2}")
        for m in masks:
            m.flags.writeable = False

    @property
    def count(self) -> int:
        return len(self.masks)


def balanced_thresholds(depth: DepthMap, layers: int) -> np.ndarray:
    """Depth cut points at the ceil(j*N/T)-th order statistics.

    Splitting at order statistics rather than fixed values keeps per-layer
    pixel counts near-equal even when depth values bunch up.
    """
    if layers < 1:
        raise ValueError("layer count must be >= 1")
    flat = np.sort(depth.depth, axis=None)
    n = flat.size
    cuts = [flat[math.ceil(j * n / layers) - 1] for j in range(1, layers)]
    return np.array(cuts, dtype=np.float64)


def layer_masks(depth: DepthMap, thresholds: Sequence[float]) -> LayerMasks:
    """Cumulative masks over len(thresholds)+1 pixel-balanced layers.

    Pixels are ranked far to near, ties broken by row-major position so
    counts stay balanced; mask_t covers the first ceil(t*N/T) ranks.
    """
    thr = [float(t) for t in thresholds]
    if any(a > b for a, b in zip(thr, thr[1:])):
        raise ValueError("thresholds must be ascending")
    layers = len(thr) + 1
    flat = depth.depth.reshape(-1)
    n = flat.size
    rank = np.empty(n, dtype=np.int64)
    rank[np.argsort(flat, kind="stable")] = np.arange(n)
    masks = []
    for t in range(1, layers + 1):
        cut = math.ceil(t * n / layers)
        masks.append((rank < cut).reshape(depth.depth.shape))
    return LayerMasks(masks=tuple(masks), thresholds=tuple(thr))


def layered_images(
    image: RasterImage, masks: LayerMasks, background: RGB
) -> list[RasterImage]:
    """Image content where each mask is set, background elsewhere."""
    shape = masks.masks[0].shape
    if shape != (image.height, image.width):
        raise ValueError(
            f"mask shape {shape} does not match image {image.height}x{image.width}"
        )
    bg = np.asarray(background, dtype=np.float32)
    out = []
    for mask in masks.masks:
        data = np.where(mask[:, :, None], image.data, bg)
        out.append(RasterImage(data.astype(np.float32)))
    return out


def luminance(image: RasterImage) -> np.ndarray:
    """Rec.601 luma of an RGB image (or the sole channel of a gray one)."""
    if image.channels == 1:
        return image.data[:, :, 0].astype(np.float64)
    rgb = image.data[:, :, :3].astype(np.float64)
    return rgb @ np.asarray(LUMA)


def pseudo_depth(image: RasterImage) -> DepthMap:
    """Heuristic depth when no estimated map is supplied: a downward ramp
    (nearer at the bottom) blended with luminance. Values land in [0,1]."""
    if image.channels not in (3, 4):
        raise ValueError("pseudo_depth requires an RGB image")
    h = image.height
    ramp = np.zeros(h) if h == 1 else np.arange(h, dtype=np.float64) / (h - 1)
    depth = RAMP_WEIGHT * ramp[:, None] + LUMA_WEIGHT * luminance(image)
    return DepthMap(depth.astype(np.float32))


# ---------------------------------------------------------------------------
# depth file I/O: 16-bit grayscale PNG and PFM


def ingest_depth(path: str | Path, convention: str = "larger-is-nearer") -> DepthMap:
    """Read a depth file and normalize it to [0,1], larger = nearer.

    16-bit PNG values are scaled by 1/65535; PFM values (scale-free floats)
    are min-max normalized. Pass convention="larger-is-farther" for inputs
    with the opposite sense; they are flipped to larger = nearer.
    """
    if convention not in ("larger-is-nearer", "larger-is-farther"):
        raise ValueError(f"unknown depth convention {convention!r}")
    path = Path(path)
    if not path.is_file():
        raise InputError(f"depth file not found: {path}")
    if path.suffix.lower() == ".pfm":
        data = read_pfm(path)
        lo, hi = float(data.min()), float(data.max())
        norm = (data - lo) / (hi - lo) if hi > lo else np.full_like(data, 0.5)
    else:
        with Image.open(path) as im:
            if im.mode not in ("I", "I;16", "I;16B", "I;16L"):
                raise FormatError(
                    f"{path}: expected 16-bit grayscale PNG, got mode {im.mode!r}"
                )
            raw = np.asarray(im, dtype=np.float64)
        if raw.max() > 65535 or raw.min() < 0:
            raise FormatError(f"{path}: sample values exceed 16-bit range")
        norm = raw / 65535.0
    if convention == "larger-is-farther":
        norm = 1.0 - norm
    return DepthMap(norm.astype(np.float32))


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a grayscale PFM file (rows stored bottom-up per the format)."""
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header == b"PF":
            raise FormatError(f"{path}: color PFM not supported, need grayscale 'Pf'")
        if header != b"Pf":
            raise FormatError(f"{path}: not a PFM file (header {header!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise FormatError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h
        payload = fh.read(count * 4)
        if len(payload) != count * 4:
            raise FormatError(f"{path}: truncated PFM payload")
        data = np.frombuffer(payload, dtype=endian + "f4").reshape(h, w)
    return np.flipud(data).astype(np.float32)


def write_pfm(data: np.ndarray, path: str | Path) -> None:
    """Write a grayscale float32 PFM file (little-endian)."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("PFM writer expects an HxW array")
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(np.flipud(arr).astype("<f4").tobytes())


def write_depth_png(depth: DepthMap, path: str | Path) -> None:
    """Write a depth map as 16-bit grayscale PNG (values clipped to [0,1])."""
    arr = np.clip(depth.depth, 0.0, 1.0)
    pil = Image.fromarray(np.rint(arr * 65535.0).astype(np.uint16))
    pil.save(Path(path), format="PNG")


# ---------------------------------------------------------------------------
# mask export: 1-bit PNG stack plus a layers/v1 index


def export_masks(masks: LayerMasks, out_dir: str | Path, prefix: str = "mask") -> dict:
    """Write each mask as 1-bit PNG plus a layers/v1 JSON index; returns
    the index document."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for t, mask in enumerate(masks.masks):
        name = f"{prefix}_{t:02d}.png"
        Image.fromarray(mask).convert("1").save(out_dir / name, format="PNG")
        files.append(name)
    index = {
        "schema": LAYERS_SCHEMA,
        "thresholds": [float(t) for t in masks.thresholds],
        "masks": files,
    }
    dump_json(index, out_dir / f"{prefix}_layers.json")
    return index


def import_mask_index(path: str | Path) -> dict:
    doc = load_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != LAYERS_SCHEMA:
        raise SchemaError(f"expected schema {LAYERS_SCHEMA!r}")
    if "thresholds" not in doc or "masks" not in doc:
        raise SchemaError("layers index missing thresholds or masks")
    return doc
