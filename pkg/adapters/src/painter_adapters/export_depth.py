"""Export per-image depth maps as 16-bit grayscale PNG, larger = nearer.

Uses a monocular depth estimation network when one is importable and
cached locally; otherwise falls back to a deterministic composition
heuristic (vertical ramp blended with smoothed luminance). The model
identifier actually used is recorded in <out>/_adapter_meta.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .imaging import list_images, load_rgb, luma, smooth3, write_depth16

HEURISTIC_ID = "heuristic/ramp-luma/v1"
MIDAS_ID = "intel-isl/MiDaS:MiDaS_small"


def heuristic_depth(rgb: np.ndarray) -> np.ndarray:
    """Composition prior: image bottoms are nearer, bright regions pop."""
    h = rgb.shape[0]
    ramp = np.zeros(h) if h == 1 else np.arange(h) / (h - 1)
    field = 0.7 * ramp[:, None] + 0.3 * smooth3(luma(rgb))
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo) if hi > lo else np.full_like(field, 0.5)


def load_midas():
    """Try the small MiDaS model from the local torch hub cache only; never
    reaches for the network."""
    try:
        import torch

        hub_repo = Path(torch.hub.get_dir()) / "intel-isl_MiDaS_master"
        if not hub_repo.is_dir():
            return None
        model = torch.hub.load(
            "intel-isl/MiDaS", "MiDaS_small", trust_repo=True, skip_validation=True,
        )
        model.eval()
        return model, torch
    except Exception:
        return None


def midas_depth(rgb: np.ndarray, bundle) -> np.ndarray:
    model, torch = bundle
    with torch.no_grad():
        tensor = torch.from_numpy(rgb.transpose(2, 0, 1)[None]).float()
        pred = model(tensor)[0].numpy()
    lo, hi = pred.min(), pred.max()
    # MiDaS emits inverse depth: larger = nearer already
    return (pred - lo) / (hi - lo) if hi > lo else np.full_like(pred, 0.5)


def export_depth(images_dir: str | Path, out_dir: str | Path,
                 model: str = "auto", deterministic: bool = False) -> dict:
    """Write one 16-bit depth PNG per image; returns the metadata record."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = list_images(images_dir)
    if not images:
        raise FileNotFoundError(f"no images found in {images_dir}")

    backend = None
    if model in ("auto", "midas"):
        backend = load_midas()
        if backend is None and model == "midas":
            raise RuntimeError("MiDaS model unavailable in the local cache")
    model_id = MIDAS_ID if backend else HEURISTIC_ID

    if deterministic and backend is not None:
        import torch

        torch.manual_seed(0)
        torch.use_deterministic_algorithms(True)

    written = []
    for path in images:
        rgb = load_rgb(path)
        depth = midas_depth(rgb, backend) if backend else heuristic_depth(rgb)
        name = path.stem + ".png"
        write_depth16(depth, out_dir / name)
        written.append(name)

    meta = {
        "model": model_id,
        "convention": "larger-is-nearer",
        "format": "png16",
        "deterministic": bool(deterministic or backend is None),
        "files": written,
    }
    with open(out_dir / "_adapter_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return meta


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Export 16-bit depth PNGs (larger = nearer) for a directory of images."
    )
    parser.add_argument("--images", required=True, help="input image directory")
    parser.add_argument("--out", required=True, help="output depth directory")
    parser.add_argument("--model", default="auto",
                        choices=("auto", "midas", "heuristic"))
    parser.add_argument("--deterministic", action="store_true",
                        help="force bit-identical outputs across runs")
    args = parser.parse_args(argv)
    try:
        meta = export_depth(args.images, args.out, args.model, args.deterministic)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"model: {meta['model']}")
    print(f"depth maps: {len(meta['files'])}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
