"""Min-max scaling, sliding windows and chronological splits.

The scaler is fitted on the training segment only, so nothing about the
validation or test rows leaks into the normalisation.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFeature, EmptyPartition, SeriesTooShort
from .marketdata import PRICE_FEATURES, SymbolSeries

FEATURE_SETS = {
    "ohlcv": PRICE_FEATURES,
    "cv": ("close", "volume"),
}
TARGET_FEATURE = "close"


@dataclass(frozen=True)
class ScalerParams:
    features: tuple[str, ...]
    minimum: np.ndarray
    maximum: np.ndarray
    fit_start: int
    fit_end: int

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    @property
    def target_index(self) -> int:
        return self.features.index(TARGET_FEATURE)

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "minimum": [float(v) for v in self.minimum],
            "maximum": [float(v) for v in self.maximum],
            "fit_range": [self.fit_start, self.fit_end],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(
            features=tuple(d["features"]),
            minimum=np.asarray(d["minimum"], dtype=np.float64),
            maximum=np.asarray(d["maximum"], dtype=np.float64),
            fit_start=int(d["fit_range"][0]),
            fit_end=int(d["fit_range"][1]),
        )


@dataclass(frozen=True)
class ScaledSeries:
    symbol: str
    dates: tuple[dt.date, ...]
    features: tuple[str, ...]
    values: np.ndarray  # [L, D]

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class WindowSpec:
    time_steps: int = 25
    features: tuple[str, ...] = PRICE_FEATURES

    def __post_init__(self):
        if self.time_steps < 1:
            raise ValueError("time_steps must be >= 1")
        if not self.features:
            raise ValueError("at least one feature required")
        if TARGET_FEATURE not in self.features:
            raise ValueError("feature set must include close")

    @property
    def input_dim(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class WindowedDataset:
    X: np.ndarray  # [N, T, D]
    y: np.ndarray  # [N]
    target_row_index: np.ndarray  # [N]
    dates: tuple[dt.date, ...] = ()  # date of each target row, if known

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx, dtype=np.int64)
        dates = tuple(self.dates[i] for i in idx) if self.dates else ()
        return WindowedDataset(self.X[idx], self.y[idx], self.target_row_index[idx], dates)


@dataclass(frozen=True)
class SplitDataset:
    train: WindowedDataset
    validation: WindowedDataset
    test: WindowedDataset
    test_fraction: float
    val_fraction: float


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def partition_sizes(n: int, test_fraction: float, val_fraction: float) -> tuple[int, int, int]:
    """(train, validation, test) sample counts for ``n`` windows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError(f"val_fraction must be in [0, 1), got {val_fraction}")
    n_test = round_half_up(n * test_fraction)
    rest = n - n_test
    n_val = round_half_up(rest * val_fraction)
    return rest - n_val, n_val, n_test


def fit_scaler(
    series: SymbolSeries, train_end: int, features=PRICE_FEATURES
) -> ScalerParams:
    """Per-feature min/max over rows ``[0, train_end)``."""
    if train_end < 2 or train_end > len(series):
        raise ValueError(f"train_end must be in [2, {len(series)}], got {train_end}")
    raw = series.matrix(features)[:train_end]
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    for f, a, b in zip(features, lo, hi):
        if not b > a:
            raise DegenerateFeature(f)
    return ScalerParams(tuple(features), lo, hi, 0, train_end)


def transform(params: ScalerParams, series: SymbolSeries) -> ScaledSeries:
    # Values outside the fit range are deliberately left unclipped.
    raw = series.matrix(params.features)
    scaled = (raw - params.minimum) / params.span
    return ScaledSeries(series.symbol, tuple(series.dates), params.features, scaled)


def transform_values(params: ScalerParams, raw: np.ndarray) -> np.ndarray:
    return (np.asarray(raw, dtype=np.float64) - params.minimum) / params.span


def inverse_target(params: ScalerParams, scaled_close):
    """Map scaled close values back to price units."""
    j = params.target_index
    return np.asarray(scaled_close) * params.span[j] + params.minimum[j]


def build_windows(scaled: ScaledSeries, spec: WindowSpec) -> WindowedDataset:
    """Sliding windows: ``X[k]`` holds rows ``k..k+T-1``, ``y[k]`` is the
    scaled close of row ``k+T``."""
    T = spec.time_steps
    L = len(scaled)
    if L < T + 1:
        raise SeriesTooShort(L, T)
    cols = [scaled.features.index(f) for f in spec.features]
    values = scaled.values[:, cols]
    n = L - T
    gather = np.arange(T)[None, :] + np.arange(n)[:, None]
    X = values[gather]
    target_rows = np.arange(T, L, dtype=np.int64)
    y = scaled.values[target_rows, scaled.features.index(TARGET_FEATURE)].copy()
    dates = tuple(scaled.dates[i] for i in target_rows) if scaled.dates else ()
    return WindowedDataset(X, y, target_rows, dates)


def split_windows(
    ds: WindowedDataset,
    test_fraction: float = 0.2,
    val_fraction: float = 0.30,
    require_validation: bool = True,
) -> SplitDataset:
    """Chronological train / validation / test split without shuffling."""
    n_train, n_val, n_test = partition_sizes(len(ds), test_fraction, val_fraction)
    if n_train <= 0:
        raise EmptyPartition("train")
    if n_test <= 0:
        raise EmptyPartition("test")
    if n_val <= 0 and require_validation:
        raise EmptyPartition("validation")
    order = np.argsort(ds.target_row_index, kind="stable")
    return SplitDataset(
        train=ds.subset(order[:n_train]),
        validation=ds.subset(order[n_train : n_train + n_val]),
        test=ds.subset(order[n_train + n_val :]),
        test_fraction=test_fraction,
        val_fraction=val_fraction,
    )


@dataclass(frozen=True)
class Prepared:
    split: SplitDataset
    scaler: ScalerParams
    scaled: ScaledSeries
    windows: WindowedDataset


def prepare(
    series: SymbolSeries,
    spec: WindowSpec,
    test_fraction: float = 0.2,
    val_fraction: float = 0.30,
    require_validation: bool = True,
) -> Prepared:
    """Fit the scaler on the rows the training windows touch, then window and
    split the whole series."""
    L = len(series)
    T = spec.time_steps
    if L < T + 1:
        raise SeriesTooShort(L, T)
    n_train, _, _ = partition_sizes(L - T, test_fraction, val_fraction)
    if n_train <= 0:
        raise EmptyPartition("train")
    scaler = fit_scaler(series, T + n_train, spec.features)
    scaled = transform(scaler, series)
    windows = build_windows(scaled, spec)
    split = split_windows(windows, test_fraction, val_fraction, require_validation)
    return Prepared(split, scaler, scaled, windows)
