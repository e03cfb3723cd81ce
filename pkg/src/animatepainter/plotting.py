"""Matplotlib figure writers for the report paths (eval, dataset).

All figures are rendered headless (Agg) straight to files next to the
JSON/CSV output they illustrate.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import DdcReport


def save_curve_figure(report: DdcReport, path: str | Path) -> None:
    """Normalized distance curve against the theoretical linear descent."""
    frames = range(len(report.curve.values))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(frames, report.curve.values, "o-", label=report.curve.metric_name)
    ax.plot(frames, report.theoretical.values, "--", color="gray", label="theoretical")
    ax.set_xlabel("frame")
    ax.set_ylabel("normalized distance to target")
    ax.set_title(f"ddc = {report.ddc:.4f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ddc_histogram(values: list[float], path: str | Path) -> None:
    """Distribution of per-entry DDC scores across a dataset."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(values, bins=min(20, max(5, len(values) // 5)), color="steelblue")
    ax.set_xlabel("ddc")
    ax.set_ylabel("videos")
    ax.set_title(f"{len(values)} videos, median ddc = {_median(values):.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_mse_trace(history: list[float], path: str | Path) -> None:
    """Planner convergence: canvas MSE after each accepted stroke."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(range(len(history)), history, lw=1.0)
    ax.set_xlabel("accepted strokes")
    ax.set_ylabel("canvas mse")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        return float("nan")
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])
