import datetime as dt
import sys

import numpy as np
import pytest

from stockcast import synthetic
from stockcast.marketdata import parse_prices, select_symbol

HEADER = "date,symbol,open,close,low,high,volume\n"


def ramp_csv(symbol="RAMP", n=30, start=dt.date(2012, 1, 2)):
    """Strictly increasing OHLCV rows: close = 10 + k."""
    lines = [HEADER.strip()]
    for k, d in enumerate(synthetic.business_days(start, n)):
        c = 10.0 + k
        lines.append(f"{d},{symbol},{c - 0.5},{c},{c - 1.0},{c + 1.0},{1000 + 10 * k}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def ramp_series():
    return select_symbol(parse_prices(ramp_csv()), "RAMP")


@pytest.fixture(scope="session")
def sine_csv():
    return synthetic.sine_prices_csv("SINE", n=500)


@pytest.fixture(scope="session")
def sine_series(sine_csv):
    return select_symbol(parse_prices(sine_csv), "SINE")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
