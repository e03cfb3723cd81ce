"""Fill the similarity field of a corpus JSON-lines file.

Scores caption/image agreement with CLIP when a checkpoint is cached
locally, else with a deterministic color-keyword heuristic: captions are
scanned for color and brightness words, which predict mean image color;
the score is the (negated, rescaled) L1 gap between prediction and the
actual image statistics. Entries without captions are flagged, never
dropped. The model identifier used goes into <out>.meta.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .imaging import load_rgb

HEURISTIC_ID = "heuristic/caption-color-match/v1"
CLIP_ID = "openai/clip-vit-base-patch32"

COLOR_WORDS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "orange": (1.0, 0.5, 0.0),
    "purple": (0.5, 0.0, 0.5),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
    "gray": (0.5, 0.5, 0.5),
    "grey": (0.5, 0.5, 0.5),
    "bright": (0.85, 0.85, 0.85),
    "light": (0.75, 0.75, 0.75),
    "dark": (0.15, 0.15, 0.15),
}


def heuristic_similarity(caption: str, rgb: np.ndarray) -> float:
    """Color-keyword agreement in [-1, 1]; 0 for uninformative captions."""
    words = [w.strip(".,;:!?") for w in caption.lower().split()]
    prototypes = [COLOR_WORDS[w] for w in words if w in COLOR_WORDS]
    if not prototypes:
        return 0.0
    expected = np.mean(prototypes, axis=0)
    actual = rgb.reshape(-1, 3).mean(axis=0)
    l1 = float(np.abs(expected - actual).sum())  # in [0, 3]
    return float(np.clip(1.0 - 2.0 * l1 / 3.0, -1.0, 1.0))


def load_clip():
    try:
        import torch
        from transformers import CLIPModel, CLIPProcessor

        model = CLIPModel.from_pretrained(CLIP_ID, local_files_only=True)
        processor = CLIPProcessor.from_pretrained(CLIP_ID, local_files_only=True)
        model.eval()
        return model, processor, torch
    except Exception:
        return None


def clip_similarity(caption: str, rgb: np.ndarray, bundle) -> float:
    model, processor, torch = bundle
    from PIL import Image

    image = Image.fromarray((rgb * 255).astype("uint8"))
    inputs = processor(text=[caption], images=[image], return_tensors="pt",
                       padding=True, truncation=True)
    with torch.no_grad():
        out = model(**inputs)
        text = out.text_embeds / out.text_embeds.norm(dim=-1, keepdim=True)
        img = out.image_embeds / out.image_embeds.norm(dim=-1, keepdim=True)
        return float((text @ img.T)[0, 0])


def export_similarity(corpus_path: str | Path, out_path: str | Path,
                      model: str = "auto") -> dict:
    """Rewrite the corpus with similarity filled; returns the metadata."""
    corpus_path = Path(corpus_path)
    out_path = Path(out_path)
    backend = None
    if model in ("auto", "clip"):
        backend = load_clip()
        if backend is None and model == "clip":
            raise RuntimeError("CLIP checkpoint unavailable in the local cache")
    model_id = CLIP_ID if backend else HEURISTIC_ID

    scored = 0
    flagged = 0
    lines_out = []
    with open(corpus_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            caption = entry.get("caption", "")
            if not caption:
                flags = entry.get("flags", [])
                entry["flags"] = flags + ["caption-missing"]
                flagged += 1
            else:
                rgb = load_rgb(entry["image"])
                if backend:
                    entry["similarity"] = clip_similarity(caption, rgb, backend)
                else:
                    entry["similarity"] = heuristic_similarity(caption, rgb)
                scored += 1
            lines_out.append(json.dumps(entry, sort_keys=True))
    with open(out_path, "w", encoding="utf-8") as fh:
        for line in lines_out:
            fh.write(line + "\n")

    meta = {"model": model_id, "scored": scored, "flagged": flagged}
    with open(out_path.with_suffix(out_path.suffix + ".meta.json"), "w",
              encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return meta


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Fill the similarity field of a corpus JSON-lines file."
    )
    parser.add_argument("--corpus", required=True, help="input corpus .jsonl")
    parser.add_argument("--out", required=True, help="output corpus .jsonl")
    parser.add_argument("--model", default="auto", choices=("auto", "clip", "heuristic"))
    args = parser.parse_args(argv)
    try:
        meta = export_similarity(args.corpus, args.out, args.model)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"model: {meta['model']}")
    print(f"scored: {meta['scored']}, flagged: {meta['flagged']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
