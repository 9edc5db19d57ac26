import io
import random

import pytest

from stockcast.errors import BadBar, DuplicateBar, EmptyInput, MissingColumn, UnknownSymbol, UnparsableField
from stockcast.marketdata import list_symbols, parse_prices, pick_random_symbol, select_symbol

from conftest import HEADER, ramp_csv


def test_single_row():
    table = parse_prices(HEADER + "2016-01-05,WLTW,123.43,125.84,122.31,126.25,2163600\n")
    assert table.census == 1
    bar = select_symbol(table, "WLTW").bars[0]
    assert (bar.open, bar.close, bar.low, bar.high, bar.volume) == (123.43, 125.84, 122.31, 126.25, 2163600.0)
    assert bar.date.isoformat() == "2016-01-05"


def test_binary_stream_and_column_order():
    text = "volume,high,low,close,open,symbol,date,extra\n2163600,126.25,122.31,125.84,123.43,WLTW,2016-01-05 00:00:00,x\n"
    table = parse_prices(io.BytesIO(text.encode()))
    bar = select_symbol(table, "WLTW").bars[0]
    assert bar.close == 125.84 and bar.date.isoformat() == "2016-01-05"


def test_header_only_is_empty():
    with pytest.raises(EmptyInput):
        parse_prices(HEADER)
    with pytest.raises(EmptyInput):
        parse_prices("")


def test_duplicate_bar():
    rows = "2015-03-02,AAPL,1,1,1,1,1\n"
    with pytest.raises(DuplicateBar) as ei:
        parse_prices(HEADER + rows + rows)
    assert ei.value.row == 3


def test_missing_column_named():
    with pytest.raises(MissingColumn) as ei:
        parse_prices("date,symbol,open,close,low,high\n2015-03-02,A,1,1,1,1\n")
    assert ei.value.column == "volume"


def test_unparsable_field_reports_row_and_column():
    with pytest.raises(UnparsableField) as ei:
        parse_prices(HEADER + "2015-03-02,A,1,1,1,1,1\n2015-03-03,A,1,abc,1,1,1\n")
    assert (ei.value.row, ei.value.column) == (3, "close")
    with pytest.raises(UnparsableField):
        parse_prices(HEADER + "03/02/2015,A,1,1,1,1,1\n")


@pytest.mark.parametrize(
    "row",
    [
        "2015-03-02,A,10,11,10.5,12,5",  # low above open
        "2015-03-02,A,10,11,9,10.5,5",  # high below close
        "2015-03-02,A,0,1,0,1,5",  # non-positive price
        "2015-03-02,A,1,1,1,1,-5",  # negative volume
    ],
)
def test_bad_bar_rejected(row):
    with pytest.raises(BadBar) as ei:
        parse_prices(HEADER + row + "\n")
    assert ei.value.row == 2


def test_list_symbols_sorted():
    table = parse_prices(HEADER + "2015-03-02,B,1,1,1,1,1\n2015-03-02,A,1,1,1,1,1\n2015-03-03,B,1,1,1,1,1\n")
    assert list_symbols(table) == ["A", "B"]
    assert table.census == 2


def test_rows_sorted_and_parse_order_insensitive():
    lines = ramp_csv(n=10).strip().split("\n")
    header, body = lines[0], lines[1:]
    shuffled = body[:]
    random.Random(3).shuffle(shuffled)
    a = parse_prices("\n".join([header] + body))
    b = parse_prices("\n".join([header] + shuffled))
    assert a == b
    dates = b.series["RAMP"].dates
    assert dates == sorted(dates) and len(dates) == 10


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        select_symbol(parse_prices(ramp_csv()), "ZZZZ")


def _census_table(n):
    rows = "".join(f"2015-03-02,S{k:03d},1,1,1,1,1\n" for k in range(n))
    return parse_prices(HEADER + rows)


def test_pick_random_symbol_single_and_deterministic():
    assert pick_random_symbol(_census_table(1), 123456) == "S000"
    t = _census_table(37)
    assert pick_random_symbol(t, 9) == pick_random_symbol(t, 9)


def test_pick_random_symbol_501_seed_42():
    # first SplitMix64 output for seed 42 is 13679457532755275413, mod 501 = 73
    assert pick_random_symbol(_census_table(501), 42) == "S073"
