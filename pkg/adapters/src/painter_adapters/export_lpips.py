"""Export per-frame perceptual distances to a framescores/v1 JSON file.

Uses the LPIPS network when the package and its weights are available
locally; otherwise a deterministic multi-scale pyramid distance (mean
squared luma difference averaged over box-downsampled octaves). The model
identifier used is embedded in the output document.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .imaging import box_halve, list_images, load_rgb, luma

HEURISTIC_ID = "heuristic/pyramid-l2/v1"
LPIPS_ID = "lpips/alex"

MIN_PYRAMID_SIZE = 8


def pyramid_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared luma difference averaged over pyramid octaves."""
    x, y = luma(a), luma(b)
    levels = []
    while min(x.shape) >= MIN_PYRAMID_SIZE:
        levels.append(float(np.mean((x - y) ** 2)))
        x, y = box_halve(x), box_halve(y)
    if not levels:
        levels.append(float(np.mean((x - y) ** 2)))
    return float(np.mean(levels))


def load_lpips():
    try:
        import lpips
        import torch

        net = lpips.LPIPS(net="alex", verbose=False)
        net.eval()
        return net, torch
    except Exception:
        return None


def lpips_distance(a: np.ndarray, b: np.ndarray, bundle) -> float:
    net, torch = bundle

    def to_tensor(img):
        return torch.from_numpy((img * 2.0 - 1.0).transpose(2, 0, 1)[None]).float()

    with torch.no_grad():
        return float(net(to_tensor(a), to_tensor(b)).item())


def export_lpips(frames_dir: str | Path, target_path: str | Path,
                 out_path: str | Path, model: str = "auto") -> dict:
    """Score every frame against the target; returns the written document."""
    frames = list_images(frames_dir)
    frames = [p for p in frames if p.stem.startswith("frame_")] or frames
    if not frames:
        raise FileNotFoundError(f"no frames found in {frames_dir}")
    target = load_rgb(target_path)

    backend = None
    if model in ("auto", "lpips"):
        backend = load_lpips()
        if backend is None and model == "lpips":
            raise RuntimeError("LPIPS weights unavailable in the local cache")
    model_id = LPIPS_ID if backend else HEURISTIC_ID

    values = []
    for path in frames:
        frame = load_rgb(path)
        if frame.shape != target.shape:
            raise ValueError(
                f"{path.name}: frame shape {frame.shape[:2]} does not match "
                f"target {target.shape[:2]}"
            )
        if backend:
            values.append(lpips_distance(frame, target, backend))
        else:
            values.append(pyramid_distance(frame, target))

    doc = {
        "schema": "framescores/v1",
        "metric": "lpips" if backend else "pyramid-l2",
        "model": model_id,
        "values": values,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return doc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Score keyframes against their target into framescores/v1 JSON."
    )
    parser.add_argument("--frames", required=True, help="directory of frame images")
    parser.add_argument("--target", required=True, help="target image")
    parser.add_argument("--out", required=True, help="output JSON path")
    parser.add_argument("--model", default="auto", choices=("auto", "lpips", "heuristic"))
    args = parser.parse_args(argv)
    try:
        doc = export_lpips(args.frames, args.target, args.out, args.model)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"model: {doc['model']}")
    print(f"frames scored: {len(doc['values'])}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
