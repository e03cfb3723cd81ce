"""Command-line front end: render, process, dataset, eval, dfcheck.

Every command honors --seed (identical invocations produce byte-identical
artifacts) and --config (a JSON file whose fields individual flags
override). Exit codes are stable: 0 success, 2 input error, 3 schema
error, 4 empty result, 5 metric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import dfmath
from .config import JOBS_ENV, RunConfig, config_from_dict, default_jobs, env_jobs
from .core import load_image, load_json, save_png
from .dataset import build_dataset, load_corpus
from .erasure import (
    density_scores,
    erase_order,
    export_schedule,
    make_schedule,
    render_keyframes,
)
from .errors import InputError, MetricError, PipelineError
from .layering import (
    balanced_thresholds,
    export_masks,
    ingest_depth,
    layer_masks,
    layered_images,
    pseudo_depth,
)
from .metrics import (
    KeyframeSequence,
    ddc,
    export_curve_csv,
    export_report,
    load_framescores,
    mse,
    psnr,
    ssim,
)
from .sbr import export_strokes, import_strokes, plan, render
from . import plotting


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--seed", type=int, help="seed for all randomness in this run")
    p.add_argument(
        "--jobs", type=int, help=f"worker count (default: {JOBS_ENV} or CPU count)"
    )


def _add_planner(p: argparse.ArgumentParser) -> None:
    p.add_argument("--levels", type=int, help="planner coarse-to-fine passes")
    p.add_argument("--strokes-per-level", help="comma-separated per-level budgets")
    p.add_argument("--min-improvement", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="animatepainter",
        description="Generate and evaluate painting-process keyframe datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="plan strokes for an image and render them")
    p.add_argument("--in", dest="input", required=True, help="target image (PNG/JPEG)")
    p.add_argument("--out", default=".", help="output directory")
    _add_planner(p)
    _add_common(p)

    p = sub.add_parser("process", help="turn strokes into keyframes, masks, layers")
    p.add_argument("--strokes", help="strokes/v1 JSON input")
    p.add_argument("--in", dest="input", help="plan strokes from this image instead")
    p.add_argument("--frames", type=int, help="emitted keyframes (>= 2, default 12)")
    p.add_argument("--layers", type=int, help="depth layer count (default frames-2)")
    p.add_argument("--depth", help="16-bit PNG or PFM depth map (else heuristic)")
    p.add_argument(
        "--depth-convention",
        choices=("larger-is-nearer", "larger-is-farther"),
        default="larger-is-nearer",
    )
    p.add_argument("--out", default=".", help="output directory")
    _add_planner(p)
    _add_common(p)

    p = sub.add_parser("dataset", help="build a process-video dataset from a corpus")
    p.add_argument("--corpus", required=True, help="JSON-lines corpus file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--filter", type=float, help="drop entries below this similarity")
    p.add_argument("--frames", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--metric", choices=("mse-dist", "ssim-dist"))
    p.add_argument("--backbone", choices=("builtin", "import"))
    p.add_argument("--gif", action="store_true", help="also write GIF previews")
    _add_planner(p)
    _add_common(p)

    p = sub.add_parser("eval", help="score a keyframe sequence against its target")
    p.add_argument("--frames", required=True, help="directory of frame_*.png files")
    p.add_argument("--target", required=True, help="target image")
    p.add_argument(
        "--metric", choices=("mse-dist", "ssim-dist", "ingested"), default="ssim-dist"
    )
    p.add_argument("--scores", help="framescores/v1 JSON for --metric ingested")
    p.add_argument("--out", help="report directory (default: alongside frames)")
    _add_common(p)

    p = sub.add_parser("dfcheck", help="run the depth-fusion numerics self-checks")
    p.add_argument("--step", type=float, default=1e-6, help="finite-difference step")
    _add_common(p)

    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        config = config_from_dict(load_json(args.config))
    overrides = {}
    for field in ("frames", "layers", "metric", "backbone", "seed", "jobs"):
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "filter", None) is not None:
        overrides["filter_threshold"] = args.filter
    if getattr(args, "gif", False):
        overrides["gif"] = True
    # precedence for workers: --jobs flag, then env, then config file, then CPUs
    if "jobs" not in overrides:
        env = env_jobs()
        if env is not None:
            overrides["jobs"] = env
        elif not getattr(args, "config", None):
            overrides["jobs"] = default_jobs()
    config = dataclasses.replace(config, **overrides)
    planner = config.planner
    planner_overrides = {}
    if getattr(args, "levels", None) is not None:
        planner_overrides["levels"] = args.levels
    if getattr(args, "strokes_per_level", None):
        budgets = tuple(int(b) for b in args.strokes_per_level.split(","))
        planner_overrides["strokes_per_level"] = (
            budgets if len(budgets) > 1 else budgets[0]
        )
    if getattr(args, "min_improvement", None) is not None:
        planner_overrides["min_improvement"] = args.min_improvement
    if config.seed != planner.seed:
        planner_overrides["seed"] = config.seed
    if planner_overrides:
        if "levels" in planner_overrides and "strokes_per_level" not in planner_overrides:
            if not isinstance(planner.strokes_per_level, int):
                planner_overrides.setdefault(
                    "strokes_per_level", planner.strokes_per_level[-1]
                )
        planner = dataclasses.replace(planner, **planner_overrides)
        config = dataclasses.replace(config, planner=planner)
    return config


def cmd_render(args) -> int:
    config = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = load_image(args.input)
    result = plan(target, config.planner)
    export_strokes(result.stroke_list, out_dir / "strokes.json")
    image = render(result.stroke_list)
    save_png(image, out_dir / "render.png")
    plotting.save_mse_trace(list(result.mse_history), out_dir / "mse_trace.png")
    print(f"strokes: {len(result.stroke_list)}")
    print(f"final mse: {mse(image, target):.6g}")
    return 0


def cmd_process(args) -> int:
    config = _load_config(args)  # validates frames >= 2, layers >= 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    target = None
    if args.strokes:
        strokes = import_strokes(args.strokes)
    elif args.input:
        target = load_image(args.input)
        strokes = plan(target, config.planner).stroke_list
    else:
        raise InputError("process needs --strokes or --in")
    export_strokes(strokes, out_dir / "strokes.json")

    scores = density_scores(strokes) if len(strokes) else None
    order = erase_order(strokes, scores) if scores is not None else []
    schedule = make_schedule(strokes, order, steps=config.frames - 1)
    export_schedule(schedule, out_dir / "schedule.json")
    seq = render_keyframes(strokes, schedule)
    for i, frame in enumerate(seq.frames):
        save_png(frame, out_dir / f"frame_{i:02d}.png")

    if args.depth:
        depth = ingest_depth(args.depth, args.depth_convention)
    else:
        base = target if target is not None else seq.frames[-1]
        depth = pseudo_depth(base)
    thresholds = balanced_thresholds(depth, config.layers)
    masks = layer_masks(depth, thresholds)
    export_masks(masks, out_dir, prefix="mask")
    reference = target if target is not None else seq.frames[-1]
    if (depth.height, depth.width) == (reference.height, reference.width):
        for i, layer in enumerate(layered_images(reference, masks, strokes.background)):
            save_png(layer, out_dir / f"layered_{i:02d}.png")
    print(f"frames: {len(seq)}")
    print(f"layers: {masks.count}")
    return 0


def cmd_dataset(args) -> int:
    config = _load_config(args)
    entries = load_corpus(args.corpus)
    manifest = build_dataset(entries, config, args.out)
    out_dir = Path(args.out)
    ddcs = [rec["ddc"] for rec in manifest["entries"]]
    plotting.save_ddc_histogram(ddcs, out_dir / "ddc_hist.png")
    print(f"videos: {len(manifest['entries'])}")
    print(f"failures: {len(manifest['failures'])}")
    print(f"manifest: {out_dir / 'manifest.json'}")
    return 0


def cmd_eval(args) -> int:
    frames_dir = Path(args.frames)
    if not frames_dir.is_dir():
        raise InputError(f"frames directory not found: {frames_dir}")
    frame_files = sorted(frames_dir.glob("frame_*.png")) or sorted(
        frames_dir.glob("*.png")
    )
    if len(frame_files) < 2:
        raise MetricError(f"need at least 2 frames, found {len(frame_files)}")
    seq = KeyframeSequence(frames=tuple(load_image(f) for f in frame_files))
    target = load_image(args.target)

    scores = None
    if args.metric == "ingested":
        if not args.scores:
            raise InputError("--metric ingested requires --scores")
        _, scores = load_framescores(args.scores)

    final = seq.frames[-1]
    final_mse = mse(final, target)
    final_psnr = psnr(final, target)
    try:
        final_ssim = ssim(final, target)
    except ValueError:
        final_ssim = None  # frame smaller than the SSIM window
    report = ddc(seq, target, metric=args.metric, scores=scores)

    out_dir = Path(args.out) if args.out else frames_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    export_report(report, out_dir / "ddc_report.json")
    export_curve_csv(report, out_dir / "distance_curve.csv")
    plotting.save_curve_figure(report, out_dir / "distance_curve.png")

    print(f"final mse: {final_mse:.6g}")
    print(f"final psnr: {'inf' if math.isinf(final_psnr) else f'{final_psnr:.4f}'}")
    print(f"final ssim: {'n/a' if final_ssim is None else f'{final_ssim:.6f}'}")
    print(f"ddc: {report.ddc:.6g}")
    return 0


def cmd_dfcheck(args) -> int:
    config = _load_config(args)
    rng = np.random.default_rng(config.seed)
    failures = []

    z = rng.normal(size=(4, 3))
    f_d = rng.normal(size=(5, 2))
    mlp = dfmath.MlpWeights(
        w1=rng.normal(size=(6, 2)), b1=rng.normal(size=6),
        w2=rng.normal(size=(3, 6)), b2=rng.normal(size=3),
    )
    weights = dfmath.AttentionWeights(
        wq=rng.normal(size=(3, 3)), wk=rng.normal(size=(3, 3)),
        wv=rng.normal(size=(4, 3)), mlp=mlp,
    )
    emb = dfmath.mlp_embed(f_d, mlp)
    logits = (z @ weights.wq.T) @ (emb @ weights.wk.T).T / math.sqrt(weights.d)
    rows = dfmath.rowsoftmax(logits).sum(axis=1)
    if not np.allclose(rows, 1.0, atol=1e-12):
        failures.append("attention rows do not sum to 1")
    shifted = dfmath.rowsoftmax(logits + 7.5)
    if not np.allclose(shifted, dfmath.rowsoftmax(logits), atol=1e-12):
        failures.append("softmax shift invariance violated")

    batches = []
    for _ in range(3):
        x = rng.normal(size=(2, 3))
        batches.append(
            dfmath.DenoiseBatch(
                x_t=x,
                eps=rng.normal(size=(2, 3)),
                mask=(rng.uniform(size=(2, 3)) < 0.5).astype(float),
                cond=rng.normal(size=2),
                t=int(rng.integers(1, 50)),
            )
        )
    params = dfmath.ToyDenoiserParams.init(6, 2, 5, rng)

    def loss_and_grad(p):
        return dfmath.batch_loss_and_grad(batches, dfmath.ToyDenoiserParams.from_dict(p))

    err = dfmath.gradient_check(loss_and_grad, params.as_dict(), step=args.step)
    print(f"attention row sums: ok ({rows.min():.15f}..{rows.max():.15f})")
    print(f"max relative gradient error: {err:.3g}")
    if err >= 1e-4:
        failures.append(f"gradient check error {err:.3g} >= 1e-4")
    if failures:
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        return 1
    print("dfcheck: all checks passed")
    return 0


_COMMANDS = {
    "render": cmd_render,
    "process": cmd_process,
    "dataset": cmd_dataset,
    "eval": cmd_eval,
    "dfcheck": cmd_dfcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
