"""Exception hierarchy shared across the package."""


class MaskflowError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMaskError(MaskflowError):
    """An instance mask was constructed from zero pixels."""


class OutOfBoundsError(MaskflowError):
    """A pixel position lies outside its grid."""


class DimsMismatchError(MaskflowError):
    """Two grid-backed values with different dimensions were combined."""


class NoSamplesError(MaskflowError):
    """An instance has no valid flow samples; its motion cannot be interpolated."""


class FrameOrderViolationError(MaskflowError):
    """Tracker input frames must advance by exactly one."""


class UnsupportedFormatError(MaskflowError):
    """A file is not in one of the supported formats."""


class CorruptFileError(MaskflowError):
    """A file header or payload is malformed or truncated."""


class BadMagicError(CorruptFileError):
    """A flow file does not start with the expected magic value."""


class TruncatedFileError(CorruptFileError):
    """A binary file ends before its declared payload."""


class ParseError(MaskflowError):
    """A text file failed to parse; carries the offending line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class EmptyGroundTruthError(MaskflowError):
    """Evaluation was requested against an empty ground truth."""


class SpecError(MaskflowError):
    """A synthetic scene specification is inconsistent."""
