"""Run configuration shared by the CLI and the dataset pipeline.

A run is described by one JSON config file; command-line flags override
individual fields. All randomness in a run flows from the single seed.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace

from .errors import SchemaError
from .sbr import PlannerConfig

JOBS_ENV = "ANIMATEPAINTER_JOBS"

BACKBONES = ("builtin", "import")


@dataclass(frozen=True)
class RunConfig:
    frames: int = 12
    layers: int | None = None  # defaults to frames - 2
    backbone: str = "builtin"
    metric: str = "ssim-dist"
    seed: int = 0
    jobs: int = 1
    filter_threshold: float | None = None
    gif: bool = False
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError("frames must be >= 2")
        layers = self.layers if self.layers is not None else max(self.frames - 2, 1)
        object.__setattr__(self, "layers", layers)
        if layers < 1:
            raise ValueError("layers must be >= 1")
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}")
        if self.metric not in ("mse-dist", "ssim-dist"):
            raise ValueError("dataset metric must be mse-dist or ssim-dist")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def entry_seed(self, entry_id: str) -> int:
        """Stable per-entry planner seed derived from the run seed.

        Uses blake2b rather than hash() so results do not depend on the
        process hash salt."""
        digest = hashlib.blake2b(
            f"{self.seed}:{entry_id}".encode("utf-8"), digest_size=8
        ).digest()
        return int.from_bytes(digest, "little") >> 1

    def planner_for(self, entry_id: str) -> PlannerConfig:
        return replace(self.planner, seed=self.entry_seed(entry_id))


def env_jobs() -> int | None:
    """Worker count from the environment, or None when unset."""
    env = os.environ.get(JOBS_ENV)
    if not env:
        return None
    try:
        return max(1, int(env))
    except ValueError:
        raise SchemaError(f"{JOBS_ENV} must be an integer, got {env!r}")


def default_jobs() -> int:
    return env_jobs() or os.cpu_count() or 1


def config_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON config file."""
    if not isinstance(doc, dict):
        raise SchemaError("config file must hold a JSON object")
    known = {
        "frames", "layers", "backbone", "metric", "seed", "jobs",
        "filter", "gif", "planner",
    }
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    planner_doc = doc.get("planner", {})
    if not isinstance(planner_doc, dict):
        raise SchemaError("planner config must be an object")
    try:
        planner_kwargs = dict(planner_doc)
        if "strokes_per_level" in planner_kwargs and isinstance(
            planner_kwargs["strokes_per_level"], list
        ):
            planner_kwargs["strokes_per_level"] = tuple(
                planner_kwargs["strokes_per_level"]
            )
        if "background" in planner_kwargs:
            planner_kwargs["background"] = tuple(planner_kwargs["background"])
        planner = PlannerConfig(**planner_kwargs)
        return RunConfig(
            frames=int(doc.get("frames", 12)),
            layers=int(doc["layers"]) if "layers" in doc else None,
            backbone=str(doc.get("backbone", "builtin")),
            metric=str(doc.get("metric", "ssim-dist")),
            seed=int(doc.get("seed", 0)),
            jobs=int(doc.get("jobs", 1)),
            filter_threshold=float(doc["filter"]) if "filter" in doc else None,
            gif=bool(doc.get("gif", False)),
            planner=planner,
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid config: {exc}") from exc
