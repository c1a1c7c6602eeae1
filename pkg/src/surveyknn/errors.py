"""Exception types shared across the package."""


class SurveyKnnError(Exception):
    """Base class for errors raised by surveyknn."""


class CapacityError(SurveyKnnError):
    """An exhaustive computation would exceed its configured support cap."""


class DataFormatError(SurveyKnnError):
    """A data file could not be parsed; the message carries row/column context."""


class DiagnosticUnavailableError(SurveyKnnError):
    """A diagnostic needs joint inclusion probabilities the design cannot provide."""
