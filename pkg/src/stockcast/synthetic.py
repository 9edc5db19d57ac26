"""Synthetic ``prices.csv`` generators for tests and offline demos."""

from __future__ import annotations

import datetime as dt

import numpy as np

from .rng import SplitMix64


def _gaussian(rng: SplitMix64, n: int) -> np.ndarray:
    # Box-Muller on SplitMix64 uniforms
    u1 = 1.0 - rng.uniform(n)
    u2 = rng.uniform(n)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def business_days(start: dt.date, n: int) -> list[dt.date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def bars_from_close(close: np.ndarray, seed: int, wick: float = 0.05) -> np.ndarray:
    """OHLCV rows around a close path: open is the previous close, wicks are
    half-normal, volume is positive noise.  Returns [L, 5] in
    (open, close, low, high, volume) order."""
    rng = SplitMix64(seed)
    close = np.round(close, 6)
    L = close.shape[0]
    open_ = np.concatenate([[close[0]], close[:-1]])
    spread = np.abs(_gaussian(rng, 2 * L)).reshape(2, L) * wick * np.abs(close).mean() / 10.0
    # floor/ceil to the 6 decimals written out, so containment survives
    low = np.floor((np.minimum(open_, close) - spread[0]) * 1e6) / 1e6
    high = np.ceil((np.maximum(open_, close) + spread[1]) * 1e6) / 1e6
    volume = np.round(1e6 * (1.0 + 0.5 * rng.uniform(L)))
    return np.column_stack([open_, close, low, high, volume])


def sine_close(n: int = 500, amplitude: float = 10.0, level: float = 100.0,
               period: float = 50.0, noise: float = 0.02, seed: int = 7) -> np.ndarray:
    """``level + amplitude*sin(2πt/period)`` plus Gaussian noise with
    σ = ``noise * amplitude``."""
    t = np.arange(n, dtype=np.float64)
    eps = _gaussian(SplitMix64(seed), n) * noise * amplitude
    return level + amplitude * np.sin(2.0 * np.pi * t / period) + eps


def random_walk_close(n: int = 1200, level: float = 50.0, vol: float = 0.015,
                      drift: float = 0.0003, seed: int = 11) -> np.ndarray:
    r = _gaussian(SplitMix64(seed), n) * vol + drift
    return level * np.exp(np.cumsum(r))


def to_csv(symbol_rows: dict[str, np.ndarray], start: dt.date = dt.date(2010, 1, 4)) -> str:
    """Render ``{symbol: [L, 5] OHLCV}`` as ``prices.csv`` text."""
    lines = ["date,symbol,open,close,low,high,volume"]
    for symbol, rows in symbol_rows.items():
        for d, (o, c, lo, hi, v) in zip(business_days(start, rows.shape[0]), rows):
            lines.append(f"{d.isoformat()},{symbol},{o:.6f},{c:.6f},{lo:.6f},{hi:.6f},{v:.1f}")
    return "\n".join(lines) + "\n"


def sine_prices_csv(symbol: str = "SINE", n: int = 500, seed: int = 7, **kw) -> str:
    return to_csv({symbol: bars_from_close(sine_close(n, seed=seed, **kw), seed + 1)})
