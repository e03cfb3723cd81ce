"""Standalone bridge scripts for the animatepainter pipeline.

Each script runs a pretrained model when one is available locally and
otherwise falls back to a deterministic heuristic, always recording the
model identifier actually used in its output metadata. Outputs conform to
the pipeline's ingest schemas (16-bit depth PNG, corpus JSON-lines,
framescores/v1) and are validated only through the pipeline's public CLI.
"""

__version__ = "0.1.0"
