"""Exception hierarchy.

Two roots matter to callers: :class:`ValidationError` for bad arguments or
configuration, and :class:`DataError` for input data that cannot be used.
The CLI maps them to exit codes 1 and 2.
"""


class FxTweetError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(FxTweetError, ValueError):
    pass


class DataError(FxTweetError, ValueError):
    pass


# ingest
class NotNumeric(DataError):
    pass


class NoPlacement(DataError):
    pass


class Ambiguous(DataError):
    pass


class EmptyInput(DataError):
    pass


class NonMonotonicCloses(DataError):
    pass


class AllTokensUnparseable(DataError):
    pass


class MissingColumn(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line, message, path=None):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: {message}")


# distfit
class TooFewSamples(DataError):
    pass


class DegenerateSamples(DataError):
    pass


class InvalidParams(ValidationError):
    pass


class NoObservationsForDay(DataError):
    pass


# models / eval
class NonPositiveValue(DataError):
    pass


class TooShort(DataError):
    pass


class MissingExogenous(ValidationError):
    pass


class RankDeficient(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class DivergedLoss(DataError):
    pass


class ShapeMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class Empty(ValidationError):
    pass


# stats
class TooFewPoints(ValidationError):
    pass


# synthetic data
class InvalidSpec(ValidationError):
    pass
