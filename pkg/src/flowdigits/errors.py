"""Exception types shared across the package."""


class FlowDigitsError(Exception):
    """Base class for all package-specific errors."""


class ParseError(FlowDigitsError):
    """A record in an input stream could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(ParseError):
    """The input stream is not in the expected format at all."""


class EmptyHistogramError(FlowDigitsError):
    """A digit histogram had nothing to normalize over."""


class CapabilityError(FlowDigitsError):
    """The dataset lacks an attribute the requested operation needs."""


class DegenerateLabelsError(FlowDigitsError):
    """ROC analysis needs at least one positive and one negative label."""


class EmptyStatsError(FlowDigitsError):
    """No valid windows to aggregate statistics over."""


class GeneratorSpecError(FlowDigitsError):
    """A synthetic-traffic specification is internally inconsistent."""
