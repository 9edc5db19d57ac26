"""NYSE ``prices.csv`` ingestion.

The file carries one row per (date, symbol) with columns ``date, symbol, open,
close, low, high, volume``.  Prices are taken as-is: split events inside the
dataset are not adjusted.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, TextIO

import numpy as np

from .errors import (
    BadBar,
    DuplicateBar,
    EmptyInput,
    MissingColumn,
    UnknownSymbol,
    UnparsableField,
)
from .rng import SplitMix64

REQUIRED_COLUMNS = ("date", "symbol", "open", "close", "low", "high", "volume")
PRICE_FEATURES = ("open", "close", "low", "high", "volume")


@dataclass(frozen=True)
class PriceBar:
    date: dt.date
    open: float
    close: float
    low: float
    high: float
    volume: float


@dataclass(frozen=True)
class SymbolSeries:
    symbol: str
    bars: tuple[PriceBar, ...]

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(b, name) for b in self.bars], dtype=np.float64)

    def matrix(self, features: Iterable[str] = PRICE_FEATURES) -> np.ndarray:
        """Raw feature matrix of shape [L, len(features)]."""
        return np.column_stack([self.column(f) for f in features])


@dataclass(frozen=True)
class PriceTable:
    series: dict[str, SymbolSeries] = field(default_factory=dict)

    @property
    def census(self) -> int:
        return len(self.series)

    @property
    def row_count(self) -> int:
        return sum(len(s) for s in self.series.values())


def _parse_date(text: str, row: int) -> dt.date:
    # ISO date prefix only; some exports append a time component.
    try:
        return dt.date.fromisoformat(text.strip()[:10])
    except ValueError:
        raise UnparsableField(row, "date", text) from None


def _parse_number(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise UnparsableField(row, column, text) from None
    if not math.isfinite(value):
        raise UnparsableField(row, column, text)
    return value


def _check_bar(bar: PriceBar, row: int) -> None:
    for name in ("open", "close", "low", "high"):
        if getattr(bar, name) <= 0:
            raise BadBar(row, f"{name} must be positive, got {getattr(bar, name)}")
    if bar.volume < 0:
        raise BadBar(row, f"volume must be non-negative, got {bar.volume}")
    if bar.low > min(bar.open, bar.close):
        raise BadBar(row, f"low {bar.low} above min(open, close)")
    if bar.high < max(bar.open, bar.close):
        raise BadBar(row, f"high {bar.high} below max(open, close)")


def parse_prices(source: BinaryIO | TextIO | bytes | str) -> PriceTable:
    """Parse a ``prices.csv`` stream into a :class:`PriceTable`.

    ``source`` may be a binary or text file object, raw bytes, or a text
    string holding the CSV.  Row numbers in errors count the header as row 1.
    Rows for each symbol are sorted by date regardless of file order.
    """
    if isinstance(source, bytes):
        text: TextIO = io.StringIO(source.decode("utf-8-sig"))
    elif isinstance(source, str):
        text = io.StringIO(source)
    elif isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8-sig", newline="")

    reader = csv.reader(text)
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise EmptyInput() from None
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise MissingColumn(col)
    idx = {col: header.index(col) for col in REQUIRED_COLUMNS}

    grouped: dict[str, dict[dt.date, PriceBar]] = {}
    for row_no, record in enumerate(reader, start=2):
        if not record or all(not cell.strip() for cell in record):
            continue
        if len(record) < len(header):
            raise UnparsableField(row_no, header[len(record)], "")
        symbol = record[idx["symbol"]].strip()
        if not symbol:
            raise UnparsableField(row_no, "symbol", record[idx["symbol"]])
        date = _parse_date(record[idx["date"]], row_no)
        values = {
            col: _parse_number(record[idx[col]], row_no, col)
            for col in PRICE_FEATURES
        }
        bar = PriceBar(date=date, **values)
        _check_bar(bar, row_no)
        bars = grouped.setdefault(symbol, {})
        if date in bars:
            raise DuplicateBar(symbol, date, row_no)
        bars[date] = bar

    if not grouped:
        raise EmptyInput()
    return PriceTable(
        {
            sym: SymbolSeries(sym, tuple(bars[d] for d in sorted(bars)))
            for sym, bars in sorted(grouped.items())
        }
    )


def read_prices(path) -> PriceTable:
    with open(path, "rb") as fh:
        return parse_prices(fh)


def list_symbols(table: PriceTable) -> list[str]:
    return sorted(table.series)


def pick_random_symbol(table: PriceTable, seed: int) -> str:
    """Choose a symbol: first SplitMix64 output of ``seed`` modulo the census,
    indexed into the sorted symbol list."""
    symbols = list_symbols(table)
    return symbols[SplitMix64(seed).below(len(symbols))]


def select_symbol(table: PriceTable, symbol: str) -> SymbolSeries:
    try:
        return table.series[symbol]
    except KeyError:
        raise UnknownSymbol(symbol) from None
