"""Exception types shared across the toolkit."""


class TravkitError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidParameterError(TravkitError, ValueError):
    """A parameter violates its documented range."""


class ShapeMismatchError(TravkitError, ValueError):
    """Raster dimensions do not agree."""


class EmptyInputError(TravkitError, ValueError):
    """An operation received an empty input it cannot handle."""


class NoCandidateError(TravkitError):
    """No mask proposal survived filtering."""


class EmptyMaskError(TravkitError):
    """A mask with no true pixels where one is required."""


class ProtocolError(TravkitError):
    """A segmentation adapter violated the wire protocol."""


class EmptyDatasetError(TravkitError):
    """An annotation job produced zero dataset tuples."""
