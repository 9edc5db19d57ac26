import datetime as dt
import os
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from stockcast.charts import (
    ChartConfig,
    Marker,
    Series,
    nice_ticks,
    padded_bounds,
    render_history,
    render_line_chart,
    render_prediction_overlay,
)
from stockcast.errors import EmptySeries, MixedDomain
from stockcast.synthetic import business_days
from stockcast.trainer import EpochRecord, PredictionSeries, TrainReport

GOLDEN = Path(__file__).parent / "golden"
SVG_NS = "{http://www.w3.org/2000/svg}"


def polylines(svg):
    root = ET.fromstring(svg)
    assert root.tag == SVG_NS + "svg" and root.get("viewBox")
    return {p.get("data-series"): [tuple(map(float, pt.split(","))) for pt in p.get("points").split()]
            for p in root.iter(SVG_NS + "polyline")}


def fixture_report():
    vals = [0.5, 0.3, 0.2, 0.25, 0.22, 0.3]
    return TrainReport(
        history=[EpochRecord(i + 1, v * 0.9, v, (v * 0.9) ** 0.5, v ** 0.5, v) for i, v in enumerate(vals)],
        best_epoch=3, stopped_epoch=6, stop_reason="early_stop",
    )


def fixture_pairs():
    dates = tuple(business_days(dt.date(2016, 1, 4), 12))
    actual = np.linspace(0.2, 0.8, 12)
    pred = actual + 0.03 * np.sin(np.arange(12))
    return PredictionSeries(np.arange(25, 37), dates, actual, pred, 50 + 100 * actual, 50 + 100 * pred)


def test_point_counts_match_data():
    svg = render_line_chart([Series("a", list(range(7)), [1, 3, 2, 5, 4, 6, 5]), Series("b", [0, 1], [0, 1])])
    pl = polylines(svg)
    assert len(pl["a"]) == 7 and len(pl["b"]) == 2


def test_deterministic():
    s = [Series("a", [1, 2, 3], [0.1, 0.4, 0.2])]
    assert render_line_chart(s) == render_line_chart(s)


def test_constant_series_is_horizontal_mid_plot():
    svg = render_line_chart([Series("flat", [0, 1, 2, 3], [5.0] * 4)])
    ys = {y for _, y in polylines(svg)["flat"]}
    assert len(ys) == 1
    cfg = ChartConfig()
    top = cfg.margin * 0.6
    bottom = top + cfg.height - 1.6 * cfg.margin
    assert ys.pop() == pytest.approx((top + bottom) / 2, abs=0.01)


def test_mapping_monotone():
    x = list(range(20))
    y = list(np.cumsum(np.abs(np.sin(np.arange(20))) + 0.1))
    pts = polylines(render_line_chart([Series("up", x, y)]))["up"]
    assert all(a[0] < b[0] for a, b in zip(pts, pts[1:]))
    assert all(a[1] > b[1] for a, b in zip(pts, pts[1:]))  # svg y grows downward


def test_errors():
    with pytest.raises(EmptySeries):
        render_line_chart([])
    with pytest.raises(EmptySeries):
        render_line_chart([Series("e", [], [])])
    d = business_days(dt.date(2016, 1, 4), 2)
    with pytest.raises(MixedDomain):
        render_line_chart([Series("a", d, [1, 2]), Series("b", [1, 2], [1, 2])])


def test_bounds_and_ticks():
    assert padded_bounds([3.0, 3.0]) == (pytest.approx(1.9), pytest.approx(4.1))
    ticks = nice_ticks(0.0, 1.0)
    assert ticks[0] == 0.0 and ticks[-1] == 1.0 and 5 <= len(ticks) <= 7
    assert all(t == int(t) for t in nice_ticks(0.5, 3.7, integer=True))


def test_history_marker_at_best_epoch():
    svg = render_history(fixture_report(), "loss")
    root = ET.fromstring(svg)
    circle = next(root.iter(SVG_NS + "circle"))
    val = polylines(svg)["validation"]
    assert (float(circle.get("cx")), float(circle.get("cy"))) == val[2]
    assert "best epoch 3" in svg


def test_overlay_perfect_prediction_coincides():
    p = fixture_pairs()
    perfect = PredictionSeries(p.target_row_index, p.dates, p.scaled_actual, p.scaled_actual.copy(),
                               p.actual, p.actual.copy())
    pl = polylines(render_prediction_overlay(perfect))
    assert pl["real"] == pl["predicted"]


def test_overlay_price_units_use_inverse_values():
    p = fixture_pairs()
    # the price mode is an affine image of the scaled mode, so the polylines coincide
    scaled = polylines(render_prediction_overlay(p, "scaled"))
    price = polylines(render_prediction_overlay(p, "price"))
    for k in scaled:
        assert np.allclose(scaled[k], price[k], atol=0.02)
    text = render_prediction_overlay(p, "price")
    assert "Close price" in text


def test_date_axis_labels_are_iso_dates():
    svg = render_prediction_overlay(fixture_pairs())
    assert re.search(r">2016-01-\d\d</text>", svg)


GOLDEN_CASES = {
    "history_loss.svg": lambda: render_history(fixture_report(), "loss"),
    "history_rmse.svg": lambda: render_history(fixture_report(), "rmse"),
    "prediction_overlay.svg": lambda: render_prediction_overlay(fixture_pairs()),
    "line_numeric.svg": lambda: render_line_chart(
        [Series("a", [0, 1, 2, 3, 4], [1.0, 0.5, 0.75, 0.25, 0.6])],
        ChartConfig(title="A & B <fixture>", x_label="x", y_label="y"),
        markers=[Marker(3, 0.25, "min")],
    ),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_bytes(name):
    """Regenerate with STOCKCAST_REGEN_GOLDEN=1 after an intended rendering change."""
    out = GOLDEN_CASES[name]()
    path = GOLDEN / name
    if os.environ.get("STOCKCAST_REGEN_GOLDEN"):
        path.write_text(out, encoding="utf-8")
    assert out == path.read_text(encoding="utf-8")
