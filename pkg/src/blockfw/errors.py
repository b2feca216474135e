"""Exception types raised across the package."""


class BlockFWError(ValueError):
    """Base class for invalid inputs to blockfw routines."""


class PartitionError(BlockFWError):
    pass


class DimensionError(BlockFWError):
    pass


class DecompositionError(BlockFWError):
    pass


class CertificateError(BlockFWError):
    pass


class ProgramError(BlockFWError):
    pass


class NumericError(ArithmeticError):
    """Non-finite data or a numerical breakdown."""


class ParseError(BlockFWError):
    """Malformed input file. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
