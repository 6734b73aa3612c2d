"""Exception hierarchy for rtscalib."""


class RtsCalibError(Exception):
    """Base class for all rtscalib errors."""


class ConfigError(RtsCalibError, ValueError):
    """Invalid or missing configuration."""


class IngestError(RtsCalibError, ValueError):
    """A measurement, GCP or distance file cannot be parsed."""


class ReportError(RtsCalibError, ValueError):
    """A calibration report cannot be written or parsed."""


class FrameMismatchError(RtsCalibError, ValueError):
    """Two transforms or points do not share the expected frames."""


class UnleveledTransformError(RtsCalibError, ValueError):
    """A rotation does not keep the vertical axis fixed."""


class DegenerateGeometryError(RtsCalibError, ValueError):
    """Point configuration cannot constrain the requested transform."""


class InsufficientDataError(RtsCalibError, ValueError):
    """Not enough samples, labels or points for an operation."""


class PipelineError(RtsCalibError, ValueError):
    """A pre-processing block produced no usable output."""


class IllConditionedError(RtsCalibError, ValueError):
    """A linear system is too ill-conditioned to solve reliably."""


class SolverError(RtsCalibError, RuntimeError):
    """Hard failure inside an iterative solver (e.g. NaN residuals)."""
