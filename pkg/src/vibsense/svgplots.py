"""Tiny deterministic SVG writers (no plotting toolkit needed).

Every function returns a complete SVG document as a string; byte-identical
output for identical input is part of the contract, so nothing here touches
clocks, ids, or dict iteration order beyond insertion order.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_FONT = "font-family='monospace' font-size='11'"
_TITLE_FONT = "font-family='monospace' font-size='13'"
PALETTE = ("#1f628e", "#d1495b", "#66a182", "#edae49", "#8d6a9f", "#00798c")


def _fmt(x: float) -> str:
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions on a 1/2/5 ladder covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        step = mult * mag
        if span / step <= target:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Canvas:
    """Maps data coordinates into a margined plot box and collects elements."""

    def __init__(self, width, height, x_range, y_range, margin=(55, 15, 30, 45)):
        self.width = width
        self.height = height
        self.ml, self.mr, self.mt, self.mb = margin
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi <= self.y_lo:
            self.y_hi = self.y_lo + 1.0
        self.parts: list[str] = []

    def x(self, v: float) -> float:
        frac = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return self.ml + frac * (self.width - self.ml - self.mr)

    def y(self, v: float) -> float:
        frac = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return self.height - self.mb - frac * (self.height - self.mt - self.mb)

    def add(self, element: str):
        self.parts.append(element)

    def axes(self, x_label: str = "", y_label: str = ""):
        x0, x1 = self.ml, self.width - self.mr
        y0, y1 = self.height - self.mb, self.mt
        self.add(
            f"<rect x='{_fmt(x0)}' y='{_fmt(y1)}' width='{_fmt(x1 - x0)}' "
            f"height='{_fmt(y0 - y1)}' fill='none' stroke='#333'/>"
        )
        for t in _ticks(self.x_lo, self.x_hi):
            px = self.x(t)
            self.add(f"<line x1='{_fmt(px)}' y1='{_fmt(y0)}' x2='{_fmt(px)}' y2='{_fmt(y0 + 4)}' stroke='#333'/>")
            self.add(
                f"<text x='{_fmt(px)}' y='{_fmt(y0 + 16)}' {_FONT} text-anchor='middle'>{_fmt(t)}</text>"
            )
        for t in _ticks(self.y_lo, self.y_hi):
            py = self.y(t)
            self.add(f"<line x1='{_fmt(x0 - 4)}' y1='{_fmt(py)}' x2='{_fmt(x0)}' y2='{_fmt(py)}' stroke='#333'/>")
            self.add(
                f"<text x='{_fmt(x0 - 7)}' y='{_fmt(py + 4)}' {_FONT} text-anchor='end'>{_fmt(t)}</text>"
            )
        if x_label:
            self.add(
                f"<text x='{_fmt((x0 + x1) / 2)}' y='{_fmt(self.height - 6)}' {_FONT} "
                f"text-anchor='middle'>{escape(x_label)}</text>"
            )
        if y_label:
            cx, cy = 14, (y0 + y1) / 2
            self.add(
                f"<text x='{_fmt(cx)}' y='{_fmt(cy)}' {_FONT} text-anchor='middle' "
                f"transform='rotate(-90 {_fmt(cx)} {_fmt(cy)})'>{escape(y_label)}</text>"
            )

    def title(self, text: str):
        if text:
            self.add(
                f"<text x='{_fmt(self.width / 2)}' y='16' {_TITLE_FONT} "
                f"text-anchor='middle'>{escape(text)}</text>"
            )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f"<svg xmlns='http://www.w3.org/2000/svg' width='{self.width}' "
            f"height='{self.height}' viewBox='0 0 {self.width} {self.height}'>\n"
            f"<rect width='{self.width}' height='{self.height}' fill='white'/>\n"
            f"{body}\n</svg>\n"
        )


def _pad_range(values) -> tuple[float, float]:
    lo = float(min(values))
    hi = float(max(values))
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.05
    return lo - pad, hi + pad


def line_chart(series, title="", x_label="", y_label="", width=640, height=400) -> str:
    """Polyline chart. ``series`` is a list of (name, xs, ys) triples."""
    if not series:
        raise ValueError("need at least one series")
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    if not all_x:
        raise ValueError("series are empty")
    canvas = _Canvas(width, height, _pad_range(all_x), _pad_range(all_y))
    canvas.title(title)
    canvas.axes(x_label, y_label)
    for idx, (name, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{_fmt(canvas.x(x))},{_fmt(canvas.y(y))}" for x, y in zip(xs, ys))
        canvas.add(f"<polyline points='{pts}' fill='none' stroke='{color}' stroke-width='1.5'/>")
        for x, y in zip(xs, ys):
            canvas.add(
                f"<circle cx='{_fmt(canvas.x(x))}' cy='{_fmt(canvas.y(y))}' r='2.5' fill='{color}'/>"
            )
        if name:
            ly = canvas.mt + 14 + 14 * idx
            lx = width - canvas.mr - 8
            canvas.add(
                f"<text x='{_fmt(lx)}' y='{_fmt(ly)}' {_FONT} text-anchor='end' "
                f"fill='{color}'>{escape(str(name))}</text>"
            )
    return canvas.render()


def scatter_chart(
    xs, ys, line=None, title="", x_label="", y_label="", width=640, height=400
) -> str:
    """Scatter of (xs, ys) with an optional (slope, intercept) overlay line."""
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if not xs or len(xs) != len(ys):
        raise ValueError("xs and ys must be equal-length and non-empty")
    y_extent = list(ys)
    if line is not None:
        slope, intercept = line
        y_extent += [slope * min(xs) + intercept, slope * max(xs) + intercept]
    canvas = _Canvas(width, height, _pad_range(xs), _pad_range(y_extent))
    canvas.title(title)
    canvas.axes(x_label, y_label)
    if line is not None:
        x_a, x_b = min(xs), max(xs)
        canvas.add(
            f"<line x1='{_fmt(canvas.x(x_a))}' y1='{_fmt(canvas.y(slope * x_a + intercept))}' "
            f"x2='{_fmt(canvas.x(x_b))}' y2='{_fmt(canvas.y(slope * x_b + intercept))}' "
            f"stroke='{PALETTE[1]}' stroke-width='1.5'/>"
        )
    for x, y in zip(xs, ys):
        canvas.add(
            f"<circle cx='{_fmt(canvas.x(x))}' cy='{_fmt(canvas.y(y))}' r='3' "
            f"fill='{PALETTE[0]}' fill-opacity='0.8'/>"
        )
    return canvas.render()


def heatmap(matrix, row_labels, col_labels, title="", width=None, height=None) -> str:
    """Annotated matrix heatmap (e.g. a confusion matrix)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n_rows, n_cols = m.shape
    if len(row_labels) != n_rows or len(col_labels) != n_cols:
        raise ValueError("label counts must match matrix shape")
    cell = 56
    ml, mt = 130, 60
    width = width or ml + cell * n_cols + 20
    height = height or mt + cell * n_rows + 40
    top = m.max() if m.size and m.max() > 0 else 1.0

    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}' "
        f"viewBox='0 0 {width} {height}'>",
        f"<rect width='{width}' height='{height}' fill='white'/>",
    ]
    if title:
        parts.append(
            f"<text x='{_fmt(width / 2)}' y='20' {_TITLE_FONT} "
            f"text-anchor='middle'>{escape(title)}</text>"
        )
    for j, label in enumerate(col_labels):
        cx = ml + cell * j + cell / 2
        parts.append(
            f"<text x='{_fmt(cx)}' y='{_fmt(mt - 8)}' {_FONT} text-anchor='middle'>"
            f"{escape(str(label))}</text>"
        )
    for i, label in enumerate(row_labels):
        cy = mt + cell * i + cell / 2 + 4
        parts.append(
            f"<text x='{_fmt(ml - 8)}' y='{_fmt(cy)}' {_FONT} text-anchor='end'>"
            f"{escape(str(label))}</text>"
        )
    for i in range(n_rows):
        for j in range(n_cols):
            frac = m[i, j] / top
            # white -> deep blue ramp
            r = round(255 - 204 * frac)
            g = round(255 - 157 * frac)
            b = round(255 - 113 * frac)
            x0, y0 = ml + cell * j, mt + cell * i
            parts.append(
                f"<rect x='{x0}' y='{y0}' width='{cell}' height='{cell}' "
                f"fill='rgb({r},{g},{b})' stroke='#999'/>"
            )
            text_fill = "#fff" if frac > 0.55 else "#111"
            parts.append(
                f"<text x='{_fmt(x0 + cell / 2)}' y='{_fmt(y0 + cell / 2 + 4)}' {_FONT} "
                f"text-anchor='middle' fill='{text_fill}'>{_fmt(m[i, j])}</text>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(svg: str, path) -> None:
    with open(path, "w") as fh:
        fh.write(svg)
