"""Exception hierarchy shared by all pipeline stages."""


class SemPipeError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(SemPipeError):
    """Bad input values or configuration (CLI exit code 1)."""


class IoError(SemPipeError):
    """File system / format failures (CLI exit code 2)."""


class UnsupportedFormat(IoError):
    pass


class IoFailure(IoError):
    pass


class CorruptData(IoError):
    pass


class ImageTooSmall(ValidationError):
    pass


class DegenerateImage(ValidationError):
    pass


class NoPoresFound(ValidationError):
    pass


class MalformedLine(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class DegeneratePolygon(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class MissingConfidence(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class PlacementFailure(ValidationError):
    pass


class MalformedInput(ValidationError):
    pass
