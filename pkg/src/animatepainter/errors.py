"""Exception types shared across the pipeline, with stable CLI exit codes."""


class PipelineError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class InputError(PipelineError):
    """Unreadable or missing input (bad path, wrong image format)."""

    exit_code = 2


class ParseError(PipelineError):
    """File could not be parsed at all (malformed JSON, bad header)."""

    exit_code = 3


class SchemaError(PipelineError):
    """File parsed but violates its schema or an invariant."""

    exit_code = 3


class FormatError(InputError):
    """Unsupported image format or bit depth."""

    exit_code = 2


class EmptyDatasetError(PipelineError):
    """A corpus run produced zero usable entries."""

    exit_code = 4


class MetricError(PipelineError):
    """Metric computation impossible (too few frames, degenerate curve)."""

    exit_code = 5
