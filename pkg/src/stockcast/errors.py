"""Exception hierarchy.

Every error raised by the package derives from :class:`StockcastError`.  The
CLI maps the three families below onto process exit codes: data problems
(exit 2), training divergence (exit 3) and model-file problems (exit 2).
"""

from __future__ import annotations


class StockcastError(Exception):
    """Base class for all package errors."""


class DataError(StockcastError):
    """Input data is unusable."""


class MissingColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"missing required column {column!r}")
        self.column = column


class UnparsableField(DataError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}: cannot parse {column}={value!r}")
        self.row = row
        self.column = column
        self.value = value


class DuplicateBar(DataError):
    def __init__(self, symbol: str, date, row: int):
        super().__init__(f"row {row}: duplicate bar for {symbol} on {date}")
        self.symbol = symbol
        self.date = date
        self.row = row


class BadBar(DataError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class EmptyInput(DataError):
    def __init__(self):
        super().__init__("input contains no data rows")


class UnknownSymbol(DataError):
    def __init__(self, symbol: str):
        super().__init__(f"unknown symbol {symbol!r}")
        self.symbol = symbol


class SeriesTooShort(DataError):
    def __init__(self, length: int, time_steps: int):
        super().__init__(
            f"series has {length} rows; at least {time_steps + 1} needed for "
            f"a {time_steps}-step window"
        )
        self.length = length
        self.time_steps = time_steps


class DegenerateFeature(DataError):
    def __init__(self, feature: str):
        super().__init__(f"feature {feature!r} is constant over the fit range")
        self.feature = feature


class EmptyPartition(DataError):
    def __init__(self, partition: str):
        super().__init__(f"{partition} partition is empty")
        self.partition = partition


class LengthMismatch(StockcastError, ValueError):
    def __init__(self, a: int, b: int):
        super().__init__(f"length mismatch: {a} != {b}")


class Diverged(StockcastError):
    """Training produced a non-finite activation or gradient.

    ``report`` carries the partial history when raised from the trainer.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NonFiniteActivation(Diverged):
    pass


class NonFiniteGradient(Diverged):
    pass


class AllConfigsDiverged(Diverged):
    pass


class NonPositiveBaseline(StockcastError, ValueError):
    def __init__(self, value: float):
        super().__init__(f"baseline RMSE must be positive, got {value!r}")


class ModelFileError(StockcastError):
    """A model file could not be read back."""


class IoFailure(ModelFileError):
    pass


class UnknownVersion(ModelFileError):
    pass


class ShapeMismatch(ModelFileError):
    pass


class CorruptNumber(ModelFileError):
    pass


class EmptySeries(StockcastError, ValueError):
    pass


class MixedDomain(StockcastError, ValueError):
    pass
