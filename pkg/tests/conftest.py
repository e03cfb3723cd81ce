"""Shared fixtures: deterministic RNG and synthetic target images."""

from __future__ import annotations

import numpy as np
import pytest

from animatepainter import RasterImage, Stroke, StrokeList


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def synthetic_target(size: int, seed: int) -> RasterImage:
    """A paintable test image: smooth gradients plus a few solid shapes."""
    r = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / max(size - 1, 1)
    base = np.stack(
        [
            0.15 + 0.7 * xx,
            0.2 + 0.6 * yy,
            0.8 - 0.5 * xx * yy,
        ],
        axis=2,
    )
    for _ in range(r.integers(2, 5)):
        cx, cy = r.uniform(0.2, 0.8, 2)
        rad = r.uniform(0.08, 0.25)
        color = r.uniform(0.0, 1.0, 3)
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 < rad**2
        base[mask] = color
    return RasterImage(np.clip(base, 0.0, 1.0).astype(np.float32))


def random_stroke_list(
    r: np.random.Generator, n: int, width: int = 100, height: int = 100
) -> StrokeList:
    strokes = []
    for i in range(n):
        length = float(r.uniform(0.01, 0.2))
        strokes.append(
            Stroke(
                cx=float(r.uniform(0, 1)),
                cy=float(r.uniform(0, 1)),
                length=length,
                thick=length * float(r.uniform(0.3, 1.0)),
                rotation=float(r.uniform(0, np.pi)),
                color=tuple(r.uniform(0, 1, 3).tolist()),
                opacity=float(r.uniform(0.5, 1.0)),
                index=i,
            )
        )
    return StrokeList(strokes=tuple(strokes), canvas_width=width, canvas_height=height)
