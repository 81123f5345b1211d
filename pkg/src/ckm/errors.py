"""Exception hierarchy shared by the library and the CLI."""


class CkmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CkmError, ValueError):
    """Bad input: malformed files, out-of-range values, degenerate geometry."""


class GeometryError(ValidationError):
    pass


class BimFormatError(ValidationError):
    pass
