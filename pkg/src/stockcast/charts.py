"""Dependency-free SVG line charts.

Output is a pure function of the inputs: same data, same bytes.  Coordinates
are printed with two decimals.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from .errors import EmptySeries, MixedDomain

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
TICKS = 6


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence
    y: Sequence[float]


@dataclass(frozen=True)
class Marker:
    x: object
    y: float
    label: str = ""


@dataclass(frozen=True)
class ChartConfig:
    width: int = 900
    height: int = 420
    margin: int = 70
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    palette: tuple[str, ...] = PALETTE

    def __post_init__(self):
        if self.width <= 2 * self.margin or self.height <= 2 * self.margin:
            raise ValueError("canvas must exceed twice the margin in both directions")


def _is_date(v) -> bool:
    return isinstance(v, dt.date)


def _domain(series: Sequence[Series]) -> str:
    kinds = set()
    for s in series:
        if len(s.x) == 0 or len(s.y) == 0:
            raise EmptySeries(f"series {s.label!r} is empty")
        if len(s.x) != len(s.y):
            raise ValueError(f"series {s.label!r}: {len(s.x)} x values vs {len(s.y)} y values")
        kinds.update("date" if _is_date(v) else "number" for v in s.x)
    if len(kinds) > 1:
        raise MixedDomain("series mix date and numeric x values")
    return kinds.pop()


def _num(v) -> float:
    return float(v.toordinal()) if _is_date(v) else float(v)


def padded_bounds(values: Sequence[float]) -> tuple[float, float]:
    """Data bounds widened by 5% each side; a constant widens to ±1 first."""
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _nice(x: float) -> float:
    exp = math.floor(math.log10(x))
    frac = x / 10**exp
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if frac <= m:
            return m * 10**exp
    return 10.0 * 10**exp


def nice_ticks(lo: float, hi: float, count: int = TICKS, integer: bool = False) -> list[float]:
    """Round-number ticks inside ``[lo, hi]``, about ``count`` of them."""
    step = _nice((hi - lo) / (count - 1))
    if integer:
        step = max(1.0, math.ceil(step))
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _fmt_tick(v: float, step: float) -> str:
    if step >= 1 and abs(v - round(v)) < 1e-9:
        return str(int(round(v)))
    digits = max(0, -int(math.floor(math.log10(step))) + 1)
    return f"{v:.{digits}f}"


class _Svg:
    def __init__(self):
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=12, extra="") -> None:
        self.add(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'
        )

    def line(self, x1, y1, x2, y2, stroke="#333333", width=1) -> None:
        self.add(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" stroke-width="{width}"/>')


def render_line_chart(series: Sequence[Series], cfg: ChartConfig = ChartConfig(), markers: Sequence[Marker] = ()) -> str:
    """Render one polyline per series with axes, ticks, legend and title."""
    if not series:
        raise EmptySeries("at least one series required")
    domain = _domain(series)
    xs = [_num(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y]
    x0, x1 = padded_bounds(xs)
    y0, y1 = padded_bounds(ys)

    W, H, m = cfg.width, cfg.height, cfg.margin
    left, top = m, m * 0.6
    pw, ph = W - 1.6 * m, H - 1.6 * m - (30 if domain == "date" else 0)
    bottom = top + ph

    def px(v) -> float:
        return left + (_num(v) - x0) / (x1 - x0) * pw

    def py(v) -> float:
        return bottom - (float(v) - y0) / (y1 - y0) * ph

    svg = _Svg()
    svg.add(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif">'
    )
    svg.add(f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>')
    if cfg.title:
        svg.text(W / 2, top / 2 + 6, cfg.title, size=16)

    # axes
    svg.line(left, bottom, left + pw, bottom)
    svg.line(left, top, left, bottom)

    yt = nice_ticks(y0, y1)
    ystep = yt[1] - yt[0] if len(yt) > 1 else 1.0
    for v in yt:
        y = py(v)
        svg.line(left - 5, y, left, y)
        svg.line(left, y, left + pw, y, stroke="#e5e5e5")
        svg.text(left - 8, y + 4, _fmt_tick(v, ystep), anchor="end", size=11)

    xt = nice_ticks(x0, x1, integer=True)
    xstep = xt[1] - xt[0] if len(xt) > 1 else 1.0
    for v in xt:
        x = left + (v - x0) / (x1 - x0) * pw
        svg.line(x, bottom, x, bottom + 5)
        if domain == "date":
            label = dt.date.fromordinal(int(round(v))).isoformat()
            svg.text(x, bottom + 16, label, anchor="end", size=11, extra=f' transform="rotate(-45 {x:.2f} {bottom + 16:.2f})"')
        else:
            svg.text(x, bottom + 18, _fmt_tick(v, xstep), size=11)

    if cfg.x_label:
        svg.text(left + pw / 2, H - 8, cfg.x_label, size=12)
    if cfg.y_label:
        yc = top + ph / 2
        svg.text(16, yc, cfg.y_label, size=12, extra=f' transform="rotate(-90 16 {yc:.2f})"')

    for k, s in enumerate(series):
        colour = cfg.palette[k % len(cfg.palette)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s.x, s.y))
        svg.add(
            f'<polyline data-series={quoteattr(s.label)} fill="none" stroke="{colour}" '
            f'stroke-width="1.5" points="{pts}"/>'
        )

    for mk in markers:
        svg.add(
            f'<circle class="marker" cx="{px(mk.x):.2f}" cy="{py(mk.y):.2f}" r="4" '
            f'fill="none" stroke="#000000" stroke-width="1.5"/>'
        )
        if mk.label:
            svg.text(px(mk.x) + 6, py(mk.y) - 6, mk.label, anchor="start", size=11)

    # legend, top-right inside the plot
    lx = left + pw - 150
    for k, s in enumerate(series):
        ly = top + 14 + 18 * k
        svg.line(lx, ly, lx + 24, ly, stroke=cfg.palette[k % len(cfg.palette)], width=2)
        svg.text(lx + 30, ly + 4, s.label, anchor="start", size=12)

    svg.add("</svg>")
    return "\n".join(svg.parts) + "\n"


# ------------------------------------------------------------ figure helpers

PRICE_TITLES = {
    "open": "Tracking the Opening Price",
    "close": "Tracking the Closing Price",
    "low": "Tracking the Low Price",
    "high": "Tracking the High Price",
}


def render_price_chart(series, column: str) -> str:
    """Price of one OHLC column over time for a :class:`SymbolSeries`."""
    cfg = ChartConfig(
        title=f"{series.symbol}: {PRICE_TITLES[column]}", x_label="Date", y_label=f"{column.capitalize()} price"
    )
    return render_line_chart([Series(column, series.dates, [getattr(b, column) for b in series.bars])], cfg)


def render_history(report, metric: str = "loss") -> str:
    """Train and validation curves over epochs with the best epoch marked."""
    if not report.history:
        raise EmptySeries("history is empty")
    if metric not in ("loss", "rmse"):
        raise ValueError("metric must be 'loss' or 'rmse'")
    epochs = [r.epoch for r in report.history]
    train = [getattr(r, f"train_{metric}") for r in report.history]
    val = [getattr(r, f"val_{metric}") for r in report.history]
    best = min(range(len(val)), key=val.__getitem__)
    name = "Loss (MSE)" if metric == "loss" else "RMSE"
    title = "Training and Validation Loss" if metric == "loss" else "Training and Validation RMSE over Epochs"
    cfg = ChartConfig(title=title, x_label="Epoch", y_label=name)
    return render_line_chart(
        [Series("train", epochs, train), Series("validation", epochs, val)],
        cfg,
        markers=[Marker(epochs[best], val[best], f"best epoch {epochs[best]}")],
    )


def render_prediction_overlay(pairs, units: str = "scaled") -> str:
    """Real vs predicted close over the target dates."""
    if len(pairs) == 0:
        raise EmptySeries("no prediction pairs")
    if units == "scaled":
        real, pred, ylab = pairs.scaled_actual, pairs.scaled_predicted, "Close (scaled)"
    elif units == "price":
        real, pred, ylab = pairs.actual, pairs.predicted, "Close price"
    else:
        raise ValueError("units must be 'scaled' or 'price'")
    x = list(pairs.dates) if pairs.dates else [int(i) for i in pairs.target_row_index]
    cfg = ChartConfig(title="Model Prediction vs Real Data", x_label="Date" if pairs.dates else "Row", y_label=ylab)
    return render_line_chart([Series("real", x, list(real)), Series("predicted", x, list(pred))], cfg)
