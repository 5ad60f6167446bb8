"""Exception hierarchy.

Class names double as the error names reported by the command line tool, so
they are kept short and without the usual ``Error`` suffix.
"""


class CMMError(Exception):
    """Base class for every error raised by this package."""


# input validation ----------------------------------------------------------

class DataError(CMMError, ValueError):
    """Malformed rankings, allocations or tables."""


class EmptyInput(DataError):
    pass


class DuplicateLabel(DataError):
    pass


class OutOfRangeLabel(DataError):
    pass


class SizeMismatch(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class PartialDataNotAllowed(DataError):
    pass


class SingleCluster(DataError):
    pass


class EmptyStage(DataError):
    pass


# file parsing --------------------------------------------------------------

class ParseError(DataError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class InconsistentWidth(ParseError):
    pass


class InvalidLabel(ParseError):
    pass


class FullyMissingRow(ParseError):
    pass


# numerics ------------------------------------------------------------------

class NumericError(CMMError, ArithmeticError):
    """Estimation or enumeration could not produce a value."""


class TooLargeForEnumeration(NumericError):
    pass


class DegenerateWeights(NumericError):
    pass


class ZeroMeanDistance(NumericError):
    pass


class NonConvergence(NumericError):
    def __init__(self, msg: str, last_value: float | None = None):
        super().__init__(msg)
        self.last_value = last_value
