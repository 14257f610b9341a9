"""Exception types raised across the package.

Data problems derive from ``DataError`` (CLI exit status 2); misuse of the
API derives from ``UsageError`` (exit status 1).
"""


class TabIntentError(Exception):
    pass


class DataError(TabIntentError, ValueError):
    pass


class UsageError(TabIntentError, ValueError):
    pass


class EmptyInput(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class NotNumeric(DataError):
    pass


class EmptyRecordSet(DataError):
    pass


class UnknownPair(DataError, KeyError):
    pass


class FocusTypeMismatch(DataError):
    pass


class InvalidAxis(DataError, IndexError):
    pass


class DimensionMismatch(UsageError):
    pass


class ShapeMismatch(UsageError):
    pass


class EmptyTable(DataError):
    pass


class CorpusTooSmall(DataError):
    pass


class UntrainedModel(UsageError):
    pass


class NoNumericField(DataError):
    pass


class KeyMismatch(DataError, KeyError):
    pass


class InvalidSpec(UsageError):
    pass
