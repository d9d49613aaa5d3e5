"""Minimal standalone SVG charts: scatter with fitted line, bars, and paired pies."""
import enum
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

WIDTH = 640
HEIGHT = 400
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 70}
PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
           "#9c755f", "#bab0ac")


class ChartKind(str, enum.Enum):
    SCATTER_WITH_TREND_LINE = "ScatterWithTrendLine"
    BAR = "Bar"
    PIE_COMPARISON = "PieComparison"


@dataclass(frozen=True)
class ChartDoc:
    kind: ChartKind
    title: str
    series: dict = field(compare=False)
    rendered: str = ""


def _n(x):
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _label(x):
    if isinstance(x, float):
        return format(x, ".4g")
    return str(x)


def _svg(title):
    root = ET.Element("svg", {"xmlns": "http://www.w3.org/2000/svg", "width": str(WIDTH),
                              "height": str(HEIGHT), "viewBox": f"0 0 {WIDTH} {HEIGHT}"})
    ET.SubElement(root, "title").text = title
    ET.SubElement(root, "rect", {"class": "background", "x": "0", "y": "0", "width": str(WIDTH),
                                 "height": str(HEIGHT), "fill": "#ffffff"})
    ET.SubElement(root, "text", {"class": "title", "x": _n(WIDTH / 2), "y": "24", "text-anchor": "middle",
                                 "font-size": "15", "font-family": "sans-serif"}).text = title
    return root


def _text(parent, x, y, s, anchor="middle", size=11, cls="label", rotate=None):
    attrs = {"class": cls, "x": _n(x), "y": _n(y), "text-anchor": anchor, "font-size": str(size),
             "font-family": "sans-serif"}
    if rotate is not None:
        attrs["transform"] = f"rotate({rotate} {_n(x)} {_n(y)})"
    ET.SubElement(parent, "text", attrs).text = s


def _axes(root, x_title, y_title):
    x0, y0 = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    x1, y1 = WIDTH - MARGIN["right"], MARGIN["top"]
    # axes are paths so that <line> elements are reserved for data
    ET.SubElement(root, "path", {"class": "axis", "d": f"M{x0} {y1} L{x0} {y0} L{x1} {y0}",
                                 "stroke": "#333333", "fill": "none"})
    _text(root, (x0 + x1) / 2, HEIGHT - 12, x_title, cls="axis-title", size=12)
    _text(root, 16, (y0 + y1) / 2, y_title, cls="axis-title", size=12, rotate=-90)


def _plot_box():
    return MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]


def _to_string(root):
    return ET.tostring(root, encoding="unicode")


def least_squares(xs, ys):
    """Ordinary least-squares slope and intercept."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        return 0.0, my
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def scatter_with_trend(title, keys, values, x_title="", y_title="", numeric_x=True):
    """Scatter plot of ``(key, value)`` with an OLS line.

    Numeric keys sit on a numeric axis; other keys are spaced evenly and
    labelled.
    """
    xs = [float(k) for k in keys] if numeric_x else list(range(len(keys)))
    slope, intercept = least_squares(xs, values)
    root = _svg(title)
    _axes(root, x_title, y_title)
    left, right, top, bottom = _plot_box()
    pad_x = (max(xs) - min(xs)) * 0.05 or 0.5
    fit_lo = intercept + slope * min(xs)
    fit_hi = intercept + slope * max(xs)
    lo = min(list(values) + [fit_lo, fit_hi])
    hi = max(list(values) + [fit_lo, fit_hi])
    pad_y = (hi - lo) * 0.08 or 1.0
    sx = _scale(min(xs) - pad_x, max(xs) + pad_x, left, right)
    sy = _scale(lo - pad_y, hi + pad_y, bottom, top)
    _text(root, left - 6, bottom, _label(lo - pad_y), anchor="end", cls="tick")
    _text(root, left - 6, top + 4, _label(hi + pad_y), anchor="end", cls="tick")
    points = ET.SubElement(root, "g", {"class": "points"})
    for k, x, y in zip(keys, xs, values):
        ET.SubElement(points, "circle", {"class": "point", "cx": _n(sx(x)), "cy": _n(sy(y)), "r": "4",
                                         "fill": PALETTE[0]})
        _text(root, sx(x), bottom + 16, _label(k), cls="tick", size=10)
    ET.SubElement(root, "line", {"class": "trend", "x1": _n(sx(min(xs))), "y1": _n(sy(fit_lo)),
                                 "x2": _n(sx(max(xs))), "y2": _n(sy(fit_hi)), "stroke": PALETTE[2],
                                 "stroke-width": "2"})
    series = {"keys": list(keys), "values": list(values), "slope": slope, "intercept": intercept}
    return ChartDoc(ChartKind.SCATTER_WITH_TREND_LINE, title, series, _to_string(root))


def bar_chart(title, keys, values, x_title="", y_title="", value_labels=None):
    """Vertical bars on a linear scale that always includes zero."""
    root = _svg(title)
    _axes(root, x_title, y_title)
    left, right, top, bottom = _plot_box()
    lo = min(0.0, min(values))
    hi = max(0.0, max(values))
    sy = _scale(lo, hi, bottom, top)
    zero = sy(0.0)
    slot = (right - left) / len(values)
    width = slot * 0.7
    _text(root, left - 6, bottom, _label(lo), anchor="end", cls="tick")
    _text(root, left - 6, top + 4, _label(hi), anchor="end", cls="tick")
    bars = ET.SubElement(root, "g", {"class": "bars"})
    for i, (k, v) in enumerate(zip(keys, values)):
        x = left + slot * i + (slot - width) / 2
        y = sy(v)
        ET.SubElement(bars, "rect", {"class": "bar", "x": _n(x), "y": _n(min(y, zero)), "width": _n(width),
                                     "height": _n(abs(zero - y)), "fill": PALETTE[i % len(PALETTE)],
                                     "data-key": str(k), "data-value": repr(v)})
        _text(root, x + width / 2, bottom + 16, _label(k), cls="tick", size=10)
        if value_labels is not None:
            _text(root, x + width / 2, min(y, zero) - 4, value_labels[i], cls="value", size=10)
    series = {"keys": list(keys), "values": list(values)}
    if value_labels is not None:
        series["labels"] = list(value_labels)
    return ChartDoc(ChartKind.BAR, title, series, _to_string(root))


def _wedge(cx, cy, r, a0, a1):
    x0, y0 = cx + r * math.sin(a0), cy - r * math.cos(a0)
    x1, y1 = cx + r * math.sin(a1), cy - r * math.cos(a1)
    large = 1 if a1 - a0 > math.pi else 0
    return f"M{_n(cx)} {_n(cy)} L{_n(x0)} {_n(y0)} A{_n(r)} {_n(r)} 0 {large} 1 {_n(x1)} {_n(y1)} Z"


def pie_comparison(title, keys, before, after, before_title="before", after_title="after"):
    """Two pies sharing one colour per key, left ``before`` and right ``after``."""
    root = _svg(title)
    r = 110
    cy = 200
    for idx, (label, probs) in enumerate(((before_title, before), (after_title, after))):
        cx = WIDTH * (0.25 + 0.5 * idx)
        g = ET.SubElement(root, "g", {"class": "pie", "data-label": label})
        _text(g, cx, cy + r + 24, label, size=12, cls="pie-title")
        angle = 0.0
        for i, (k, p) in enumerate(zip(keys, probs)):
            if p <= 0:
                continue
            colour = PALETTE[i % len(PALETTE)]
            if p >= 1.0 - 1e-12:
                ET.SubElement(g, "circle", {"class": "slice", "cx": _n(cx), "cy": _n(cy), "r": str(r),
                                            "fill": colour, "data-key": str(k)})
                continue
            end = angle + 2 * math.pi * p
            ET.SubElement(g, "path", {"class": "slice", "d": _wedge(cx, cy, r, angle, end), "fill": colour,
                                      "data-key": str(k), "data-share": f"{p:.4f}"})
            angle = end
    legend = ET.SubElement(root, "g", {"class": "legend"})
    for i, k in enumerate(keys[:12]):
        y = 50 + 16 * i
        ET.SubElement(legend, "rect", {"x": str(WIDTH - 120), "y": str(y - 9), "width": "10", "height": "10",
                                       "fill": PALETTE[i % len(PALETTE)]})
        _text(legend, WIDTH - 104, y, _label(k), anchor="start", size=10)
    series = {"keys": list(keys), "before": list(before), "after": list(after)}
    return ChartDoc(ChartKind.PIE_COMPARISON, title, series, _to_string(root))
