"""Exception hierarchy shared across the package."""


class TourError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(TourError, ValueError):
    """An embedding file does not conform to the binary layout."""


class TruncationError(FormatError):
    """Declared matrix size disagrees with the file length."""


class ValidationError(TourError, ValueError):
    """Loaded or computed data violates a structural invariant."""


class ConfigError(TourError, ValueError):
    """A configuration value is outside its permitted range."""


class ContractError(TourError, ValueError):
    """A caller violated an operation precondition."""


class NumericError(TourError, ArithmeticError):
    """A numeric update produced a non-finite result."""


class LabelerError(TourError):
    """Base class for relevance-labeler failures."""


class TransportError(LabelerError):
    """A remote labeler endpoint could not be reached."""


class ProtocolError(LabelerError):
    """A remote labeler returned a malformed or misaligned response."""


class DataError(TourError, ValueError):
    """Report rows reference unknown queries or inconsistent data."""
