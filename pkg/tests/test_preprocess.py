import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stockcast.errors import DegenerateFeature, EmptyPartition, SeriesTooShort
from stockcast.marketdata import parse_prices, select_symbol
from stockcast.preprocess import (
    WindowSpec,
    build_windows,
    fit_scaler,
    inverse_target,
    partition_sizes,
    prepare,
    split_windows,
    transform,
)
from stockcast.synthetic import business_days

from conftest import HEADER, ramp_csv


def brute_force_windows(values, close_col, T):
    """Reference enumerator: plain nested loops over every window."""
    X, y, idx = [], [], []
    for k in range(len(values) - T):
        X.append([[values[k + t][f] for f in range(len(values[0]))] for t in range(T)])
        y.append(values[k + T][close_col])
        idx.append(k + T)
    return np.array(X), np.array(y), np.array(idx)


def series_from_closes(closes, volumes=None):
    lines = [HEADER.strip()]
    days = business_days(dt.date(2012, 1, 2), len(closes))
    for k, c in enumerate(closes):
        v = volumes[k] if volumes is not None else 1000 + k
        lines.append(f"{days[k]},X,{c},{c},{c},{c},{v}")
    return select_symbol(parse_prices("\n".join(lines)), "X")


def test_fit_scaler_midpoint():
    s = series_from_closes([10, 20, 30])
    p = fit_scaler(s, 3)
    j = p.target_index
    assert (p.minimum[j], p.maximum[j]) == (10, 30)
    assert transform(p, s).values[1, j] == 0.5


def test_degenerate_volume():
    with pytest.raises(DegenerateFeature) as ei:
        fit_scaler(series_from_closes([10, 20, 30], volumes=[5, 5, 5]), 3)
    assert ei.value.feature == "volume"


def test_out_of_range_value_not_clipped():
    # fit on first 3 rows (close 10..30), row 4 close 50 -> (50-10)/20 = 2.0
    s = series_from_closes([10, 20, 30, 15, 50])
    p = fit_scaler(s, 3)
    scaled = transform(p, s).values[:, p.target_index]
    assert scaled.tolist() == [0.0, 0.5, 1.0, 0.25, 2.0]


def test_scaler_ignores_rows_after_train_end():
    a = series_from_closes([10, 20, 30, 40, 50])
    b = series_from_closes([10, 20, 30, 4000, 0.5])
    pa, pb = fit_scaler(a, 3), fit_scaler(b, 3)
    assert np.array_equal(pa.minimum, pb.minimum) and np.array_equal(pa.maximum, pb.maximum)


def test_transform_endpoints_exact(ramp_series):
    p = fit_scaler(ramp_series, 20)
    raw = ramp_series.matrix()[:20]
    scaled = transform(p, ramp_series).values[:20]
    for f in range(5):
        assert scaled[raw[:, f].argmin(), f] == 0.0
        assert scaled[raw[:, f].argmax(), f] == 1.0


def test_inverse_target_examples(ramp_series):
    s = series_from_closes([10, 20, 30])
    p = fit_scaler(s, 3)
    assert inverse_target(p, 0.0) == 10 and inverse_target(p, 1.0) == 30 and inverse_target(p, 0.5) == 20


@settings(max_examples=50)
@given(st.floats(min_value=-1e4, max_value=1e4, allow_nan=False))
def test_round_trip_property(v):
    s = series_from_closes([10, 20, 30])
    p = fit_scaler(s, 3)
    j = p.target_index
    back = inverse_target(p, (v - p.minimum[j]) / p.span[j])
    assert abs(back - v) <= 1e-12 * max(1.0, abs(v))


def test_minimal_window(ramp_series):
    s = select_symbol(parse_prices(ramp_csv(n=26)), "RAMP")
    ds = build_windows(transform(fit_scaler(s, 26), s), WindowSpec(25))
    assert ds.X.shape == (1, 25, 5)


def test_too_short():
    s = select_symbol(parse_prices(ramp_csv(n=25)), "RAMP")
    with pytest.raises(SeriesTooShort):
        build_windows(transform(fit_scaler(s, 25), s), WindowSpec(25))


def test_windows_match_brute_force(ramp_series):
    scaled = transform(fit_scaler(ramp_series, 30), ramp_series)
    ds = build_windows(scaled, WindowSpec(3))
    X, y, idx = brute_force_windows(scaled.values.tolist(), 1, 3)
    assert len(ds) == 27
    assert np.array_equal(ds.X, X) and np.array_equal(ds.y, y) and np.array_equal(ds.target_row_index, idx)
    assert ds.y[0] == scaled.values[3, 1]


def test_cv_feature_subset(ramp_series):
    spec = WindowSpec(4, ("close", "volume"))
    p = prepare(ramp_series, spec)
    assert p.split.train.X.shape[1:] == (4, 2)


def test_partition_arithmetic():
    assert partition_sizes(100, 0.2, 0.30) == (56, 24, 20)


def test_split_is_chronological():
    n = 100
    ds = build_windows(
        transform(fit_scaler(series_from_closes(list(range(1, 104))), 103), series_from_closes(list(range(1, 104)))),
        WindowSpec(3),
    )
    assert len(ds) == n
    sp = split_windows(ds, 0.2, 0.30)
    assert (len(sp.train), len(sp.validation), len(sp.test)) == (56, 24, 20)
    assert sp.train.target_row_index.max() < sp.validation.target_row_index.min()
    assert sp.validation.target_row_index.max() < sp.test.target_row_index.min()
    assert len(sp.validation) == round(0.30 * (len(sp.train) + len(sp.validation)))


def test_empty_validation_only_on_request():
    s = series_from_closes(list(range(1, 40)))
    ds = build_windows(transform(fit_scaler(s, 39), s), WindowSpec(3))
    with pytest.raises(EmptyPartition) as ei:
        split_windows(ds, 0.2, 0.0)
    assert ei.value.partition == "validation"
    sp = split_windows(ds, 0.2, 0.0, require_validation=False)
    assert len(sp.validation) == 0


def test_prepare_fits_on_training_rows_only(ramp_series):
    spec = WindowSpec(3)
    p = prepare(ramp_series, spec, 0.2, 0.3)
    n_train = len(p.split.train)
    assert p.scaler.fit_end == 3 + n_train
    assert p.split.train.target_row_index.max() == 3 + n_train - 1
