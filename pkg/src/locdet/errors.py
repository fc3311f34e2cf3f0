"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(InvalidInputError):
    """Input is syntactically valid but numerically unusable (e.g. zero vector)."""


class FormatError(ValueError):
    """A file does not match its declared schema; message names the location."""


class MissingGroundTruthError(LookupError):
    """The expected reference image has no entry in the database."""


class NoEvidenceError(ValueError):
    """A score was requested over a region with no covered pixels."""


class UndefinedMetricError(ValueError):
    """The metric is undefined for the given sample set (e.g. zero positives)."""
