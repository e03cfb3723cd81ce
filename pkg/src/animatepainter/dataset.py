"""Corpus-level pipeline: similarity filtering, per-image process-video
generation, and packaging into a versioned dataset with a manifest.

Per-entry failures never abort a corpus run; they are recorded and
summarized. The manifest is written last via temp-file + rename so readers
never observe a half-built dataset, and wall-clock info lives in a side
file so two runs with the same seed produce byte-identical datasets.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .config import RunConfig
from .core import dump_json, load_image, load_json, mse, save_png
from .erasure import (
    density_scores,
    erase_order,
    export_schedule,
    import_schedule,
    make_schedule,
    render_keyframes,
)
from .errors import EmptyDatasetError, InputError, ParseError, SchemaError
from .layering import (
    balanced_thresholds,
    export_masks,
    ingest_depth,
    layer_masks,
    pseudo_depth,
)
from .metrics import ddc, psnr, ssim
from .sbr import export_strokes, import_strokes, plan

MANIFEST_SCHEMA = "dataset/v1"
METRICS_SCHEMA = "metrics/v1"


@dataclass(frozen=True)
class CorpusEntry:
    """One text-image pair, optionally with precomputed similarity and
    side files (estimated depth, externally planned strokes)."""

    id: str
    image_path: str
    caption: str = ""
    similarity: float | None = None
    depth_path: str | None = None
    strokes_path: str | None = None
    flags: tuple[str, ...] = ()


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    """Read a JSON-lines corpus; one entry per line with keys
    id, image, and optionally caption, similarity, depth, strokes."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"corpus file not found: {path}")
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(doc, dict) or "id" not in doc or "image" not in doc:
                raise SchemaError(f"{path}:{lineno}: entry needs 'id' and 'image'")
            entry_id = str(doc["id"])
            if entry_id in seen:
                raise SchemaError(f"{path}:{lineno}: duplicate id {entry_id!r}")
            seen.add(entry_id)
            sim = doc.get("similarity")
            entries.append(
                CorpusEntry(
                    id=entry_id,
                    image_path=str(doc["image"]),
                    caption=str(doc.get("caption", "")),
                    similarity=float(sim) if sim is not None else None,
                    depth_path=str(doc["depth"]) if doc.get("depth") else None,
                    strokes_path=str(doc["strokes"]) if doc.get("strokes") else None,
                )
            )
    return entries


def filter_corpus(entries: list[CorpusEntry], threshold: float) -> list[CorpusEntry]:
    """Keep entries whose similarity meets the threshold. Entries without a
    similarity score are kept but flagged rather than dropped."""
    kept = []
    for entry in entries:
        if entry.similarity is None:
            kept.append(replace(entry, flags=entry.flags + ("similarity-missing",)))
        elif entry.similarity >= threshold:
            kept.append(entry)
    return kept


def generate_one(entry: CorpusEntry, config: RunConfig, out_root: str | Path) -> dict:
    """Run the full pipeline for one corpus entry and write its artifacts
    under out_root/{id}/. Returns the manifest record."""
    out_dir = Path(out_root) / entry.id
    out_dir.mkdir(parents=True, exist_ok=True)

    target = load_image(entry.image_path)
    if target.channels != 3:
        raise InputError(f"{entry.image_path}: dataset entries must be RGB")

    if entry.strokes_path or config.backbone == "import":
        if not entry.strokes_path:
            raise InputError(f"entry {entry.id}: backbone 'import' needs a strokes file")
        strokes = import_strokes(entry.strokes_path)
        backbone = "imported"
    else:
        strokes = plan(target, config.planner_for(entry.id)).stroke_list
        backbone = "builtin"
    export_strokes(strokes, out_dir / "strokes.json")

    scores = density_scores(strokes) if len(strokes) else None
    order = erase_order(strokes, scores) if scores is not None else []
    schedule = make_schedule(strokes, order, steps=config.frames - 1)
    export_schedule(schedule, out_dir / "schedule.json")
    seq = render_keyframes(strokes, schedule)

    frame_files = []
    for i, frame in enumerate(seq.frames):
        name = f"frame_{i:02d}.png"
        save_png(frame, out_dir / name)
        frame_files.append(name)
    if config.gif:
        _write_gif(seq.frames, out_dir / "preview.gif")

    if entry.depth_path:
        depth = ingest_depth(entry.depth_path)
    else:
        depth = pseudo_depth(target)
    if (depth.height, depth.width) != (target.height, target.width):
        raise InputError(
            f"entry {entry.id}: depth {depth.width}x{depth.height} does not "
            f"match image {target.width}x{target.height}"
        )
    thresholds = balanced_thresholds(depth, config.layers)
    masks = layer_masks(depth, thresholds)
    index = export_masks(masks, out_dir, prefix="mask")

    final = seq.frames[-1]
    report = ddc(seq, target, metric=config.metric)
    metrics_doc = {
        "schema": METRICS_SCHEMA,
        "ddc": report.ddc,
        "metric": config.metric,
        "curve": list(report.curve.values),
        "final_mse": mse(final, target),
        "final_psnr": _finite(psnr(final, target)),
        "final_ssim": ssim(final, target),
    }
    dump_json(metrics_doc, out_dir / "metrics.json")

    return {
        "id": entry.id,
        "backbone": backbone,
        "flags": list(entry.flags),
        "frames": frame_files,
        "masks": index["masks"],
        "strokes": "strokes.json",
        "schedule": "schedule.json",
        "metrics": "metrics.json",
        "ddc": report.ddc,
        "final_mse": metrics_doc["final_mse"],
        "final_ssim": metrics_doc["final_ssim"],
    }


def _finite(value: float) -> float | None:
    # JSON has no inf; identical final frames report a null PSNR
    return value if math.isfinite(value) else None


def _write_gif(frames, path: Path) -> None:
    pils = [
        Image.fromarray((np.clip(f.data, 0, 1) * 255).astype("uint8")) for f in frames
    ]
    pils[0].save(
        path, save_all=True, append_images=pils[1:], duration=250, loop=0
    )


def _worker(args: tuple[CorpusEntry, RunConfig, str]) -> tuple[str, dict | None, str | None]:
    entry, config, out_root = args
    try:
        return entry.id, generate_one(entry, config, out_root), None
    except Exception as exc:  # per-entry failures must not abort the corpus
        return entry.id, None, f"{type(exc).__name__}: {exc}"


def build_dataset(
    entries: list[CorpusEntry], config: RunConfig, out_dir: str | Path
) -> dict:
    """Generate one process video per corpus entry and write the manifest.

    Returns the manifest document. Raises EmptyDatasetError when nothing
    succeeded."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.filter_threshold is not None:
        entries = filter_corpus(entries, config.filter_threshold)

    started = time.time()
    tasks = [(entry, config, str(out_dir)) for entry in entries]
    if config.jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]
    elapsed = time.time() - started

    records = [rec for _, rec, err in results if rec is not None]
    failures = [
        {"id": entry_id, "error": err} for entry_id, rec, err in results if rec is None
    ]
    if not records:
        raise EmptyDatasetError(
            f"no dataset entries produced ({len(failures)} failure(s))"
        )

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "backbone": config.backbone,
        "frames": config.frames,
        "layers": config.layers,
        "metric": config.metric,
        "seed": config.seed,
        "entries": records,
        "failures": failures,
    }
    _atomic_dump(manifest, out_dir / "manifest.json")
    # timestamps stay out of the manifest so identical runs match byte-for-byte
    dump_json(
        {
            "elapsed_seconds": elapsed,
            "entries_per_second": len(records) / elapsed if elapsed > 0 else None,
            "finished_unix": time.time(),
        },
        out_dir / "run_info.json",
    )
    _write_summary_csv(records, out_dir / "metrics_summary.csv")
    return manifest


def _atomic_dump(doc: dict, path: Path) -> None:
    tmp = path.with_suffix(".tmp")
    dump_json(doc, tmp)
    os.replace(tmp, path)


def _write_summary_csv(records: list[dict], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,ddc,final_mse,final_ssim\n")
        for rec in records:
            fh.write(
                f"{rec['id']},{rec['ddc']!r},{rec['final_mse']!r},{rec['final_ssim']!r}\n"
            )


def validate_manifest(out_dir: str | Path) -> dict:
    """Check manifest closure: every referenced file exists and parses
    under its schema. Returns the manifest."""
    out_dir = Path(out_dir)
    manifest = load_json(out_dir / "manifest.json")
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"expected schema {MANIFEST_SCHEMA!r}")
    for rec in manifest["entries"]:
        base = out_dir / rec["id"]
        for key in ("strokes", "schedule", "metrics"):
            if not (base / rec[key]).is_file():
                raise SchemaError(f"{rec['id']}: missing {rec[key]}")
        for name in rec["frames"] + rec["masks"]:
            if not (base / name).is_file():
                raise SchemaError(f"{rec['id']}: missing {name}")
        import_strokes(base / rec["strokes"])
        import_schedule(base / rec["schedule"])
        metrics_doc = load_json(base / rec["metrics"])
        if metrics_doc.get("schema") != METRICS_SCHEMA:
            raise SchemaError(f"{rec['id']}: bad metrics schema")
    return manifest
