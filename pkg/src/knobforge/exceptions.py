"""Exception hierarchy shared by all knobforge modules."""


class KnobforgeError(Exception):
    """Base class for every error raised by this package."""


class ParseError(KnobforgeError):
    """A cell or row in an input file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        location = ""
        if path is not None:
            location = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + location)
        self.path = path
        self.line = line


class SchemaError(KnobforgeError):
    """Column kinds, names, or ordering violate the repository contract."""


class InsufficientRows(KnobforgeError):
    """A table has too few rows for the requested split."""


class ScalerScopeError(KnobforgeError):
    """The latency column was requested for scaling."""


class DegenerateInput(KnobforgeError):
    """Input data cannot support the requested decomposition."""


class ClusterDegeneracy(KnobforgeError):
    """A clustering fit collapsed (empty cluster or numerical failure)."""


class InvalidK(KnobforgeError):
    """Requested cluster count is impossible for the data."""


class UndefinedSilhouette(KnobforgeError):
    """Silhouette score needs at least two clusters."""


class NumericalError(KnobforgeError):
    """A matrix factorization failed."""


class InvalidTarget(KnobforgeError):
    """Regression targets violate a model precondition (e.g. zeros under a percentage loss)."""


class ShapeError(KnobforgeError):
    """Array dimensions do not match the fitted model."""


class UndefinedMape(KnobforgeError):
    """MAPE is undefined when a true value is zero."""


class AlignmentError(KnobforgeError):
    """Target and source rows cannot be aligned for scoring."""


class LeakageError(KnobforgeError):
    """A held-out row reached a model fit."""


class PipelineError(KnobforgeError):
    """A pipeline stage failed; carries the stage name and offending workload."""

    def __init__(self, stage, message, workload_id=None):
        detail = f"stage={stage}"
        if workload_id is not None:
            detail += f" workload={workload_id}"
        super().__init__(f"{message} ({detail})")
        self.stage = stage
        self.workload_id = workload_id
