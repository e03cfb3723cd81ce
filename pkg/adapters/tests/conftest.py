"""Fixtures: a 10-image corpus with color-dominant content, plus keyframes
produced through the primary pipeline's public CLI."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

COLORS = [
    ("red", (0.85, 0.1, 0.1)),
    ("green", (0.1, 0.8, 0.15)),
    ("blue", (0.1, 0.2, 0.85)),
    ("yellow", (0.9, 0.85, 0.1)),
    ("orange", (0.9, 0.5, 0.1)),
    ("purple", (0.5, 0.1, 0.5)),
    ("white", (0.92, 0.92, 0.92)),
    ("black", (0.08, 0.08, 0.08)),
    ("cyan", (0.1, 0.8, 0.8)),
    ("gray", (0.5, 0.5, 0.5)),
]


def primary_cli(*args: str) -> subprocess.CompletedProcess:
    """Invoke the installed primary pipeline CLI."""
    return subprocess.run(
        [sys.executable, "-m", "animatepainter.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


def write_color_image(path: Path, color, size: int = 48, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    img = np.empty((size, size, 3))
    img[:] = color
    img += rng.normal(0.0, 0.04, img.shape)
    # a contrasting block so paintings are not single strokes
    img[size // 3 : size // 2, size // 4 : 3 * size // 4] = 1.0 - np.asarray(color)
    Image.fromarray((np.clip(img, 0, 1) * 255).astype("uint8")).save(path)


@pytest.fixture(scope="session")
def image_set(tmp_path_factory) -> Path:
    """Ten images, each dominated by one named color."""
    root = tmp_path_factory.mktemp("images")
    for i, (name, color) in enumerate(COLORS):
        write_color_image(root / f"{i:02d}_{name}.png", color, seed=i)
    return root


@pytest.fixture(scope="session")
def corpus_file(image_set, tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    path = root / "corpus.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i, (name, _) in enumerate(COLORS):
            entry = {
                "id": f"v{i:02d}",
                "image": str(image_set / f"{i:02d}_{name}.png"),
                "caption": f"a mostly {name} painting",
            }
            fh.write(json.dumps(entry) + "\n")
    return path


@pytest.fixture(scope="session")
def keyframes(image_set, tmp_path_factory):
    """Frames for one image, generated through the primary CLI."""
    out = tmp_path_factory.mktemp("frames")
    target = image_set / "00_red.png"
    result = primary_cli(
        "process", "--in", target, "--frames", "8", "--out", out,
        "--seed", "3", "--levels", "2", "--strokes-per-level", "8,16",
    )
    assert result.returncode == 0, result.stderr
    return out, target
