"""Small shared image helpers for the adapter scripts."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def load_rgb(path: str | Path) -> np.ndarray:
    """Decode an image to float64 RGB in [0,1]."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def luma(rgb: np.ndarray) -> np.ndarray:
    return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]


def box_halve(img: np.ndarray) -> np.ndarray:
    """2x2 box downsampling (odd trailing row/col dropped)."""
    h, w = img.shape[:2]
    h2, w2 = h // 2, w // 2
    cropped = img[: h2 * 2, : w2 * 2]
    return cropped.reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def smooth3(field: np.ndarray) -> np.ndarray:
    """3x3 box smoothing with edge replication."""
    padded = np.pad(field, 1, mode="edge")
    out = np.zeros_like(field)
    for dr in range(3):
        for dc in range(3):
            out += padded[dr : dr + field.shape[0], dc : dc + field.shape[1]]
    return out / 9.0


def write_depth16(depth01: np.ndarray, path: str | Path) -> None:
    """Write a [0,1] depth field as 16-bit grayscale PNG."""
    arr = np.clip(depth01, 0.0, 1.0)
    Image.fromarray(np.rint(arr * 65535.0).astype(np.uint16)).save(path, format="PNG")


def list_images(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    return sorted(
        p for p in directory.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
