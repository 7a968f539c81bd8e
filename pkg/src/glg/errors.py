"""Exception types shared across the package."""


class GlgError(Exception):
    """Base class for all package errors."""


class ShapeError(GlgError):
    """Operands have incompatible dimensions."""


class NumericError(GlgError):
    """A numerical routine failed (SVD non-convergence, overflow, ...)."""


class DataFormatError(GlgError):
    """A dataset file is malformed; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}]" if line is not None else "]")
        super().__init__(message + where)


class AmbiguousLabelError(GlgError):
    """The gradient sign rule did not single out one class."""


class UnrecoverableError(GlgError):
    """A closed-form recovery has no usable gradient rows."""


class PartialRecoveryError(GlgError):
    """Per-node recovery failed for a subset of nodes."""

    def __init__(self, message, failed_nodes):
        self.failed_nodes = list(failed_nodes)
        super().__init__(f"{message}: nodes {self.failed_nodes}")


class DegenerateGradientError(GlgError):
    """A gradient bundle has zero norm where the objective needs one."""


class UndefinedMetricError(GlgError):
    """The metric is undefined for the given inputs (e.g. single-class truth)."""


class ConfigError(GlgError):
    """Experiment configuration failed validation; carries the field path."""

    def __init__(self, message, field=None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(prefix + message)
