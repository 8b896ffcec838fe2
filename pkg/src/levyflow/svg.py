"""Minimal deterministic SVG line plots (axes, ticks, polylines, legend)."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import RenderError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


class Axes(str, enum.Enum):
    LINLIN = "linlin"
    LOGLOG = "loglog"
    SEMILOGY = "semilogy"

    @property
    def log_x(self) -> bool:
        return self is Axes.LOGLOG

    @property
    def log_y(self) -> bool:
        return self is not Axes.LINLIN


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: str = "line"  # line | dashed | points


@dataclass
class Panel:
    series: Sequence[Series]
    axes: Axes = Axes.LINLIN
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _nice_step(span: float, target: int = 5) -> float:
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if raw <= m * mag * (1 + 1e-9):
            return m * mag
    return 10.0 * mag


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    return f"{v:.6g}"


def _axis(lo: float, hi: float, log: bool):
    """Return (lo, hi, [(position, label)]) in transformed units."""
    if log:
        a, b = math.floor(lo + 1e-9), math.ceil(hi - 1e-9)
        if b <= a:
            a, b = a - 1, b + 1
        every = max(1, int(math.ceil((b - a) / 8)))
        ticks = [(float(k), f"1e{k}") for k in range(a, b + 1) if (k - a) % every == 0]
        return float(a), float(b), ticks
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    step = _nice_step(hi - lo)
    a = math.floor(lo / step + 1e-9) * step
    b = math.ceil(hi / step - 1e-9) * step
    n = int(round((b - a) / step))
    ticks = [(a + i * step, _tick_label(round(a + i * step, 12))) for i in range(n + 1)]
    return a, b, ticks


def _validate(panel: Panel) -> list[tuple[Series, np.ndarray, np.ndarray]]:
    if not panel.series:
        raise RenderError("nothing to plot: no series given")
    axes = Axes(panel.axes)
    out = []
    for s in panel.series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or x.size == 0:
            raise RenderError(f"series {s.label!r}: x and y must be equal-length non-empty 1-D arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise RenderError(f"series {s.label!r}: non-finite values")
        if axes.log_x and np.any(x <= 0):
            raise RenderError(f"series {s.label!r}: nonpositive x value on a log axis")
        if axes.log_y and np.any(y <= 0):
            raise RenderError(f"series {s.label!r}: nonpositive y value on a log axis")
        out.append((s, np.log10(x) if axes.log_x else x, np.log10(y) if axes.log_y else y))
    return out


def _panel_body(panel: Panel, ox: float, oy: float, width: float, height: float) -> list[str]:
    data = _validate(panel)
    axes = Axes(panel.axes)
    xs = np.concatenate([d[1] for d in data])
    ys = np.concatenate([d[2] for d in data])
    x0, x1, xt = _axis(float(xs.min()), float(xs.max()), axes.log_x)
    y0, y1, yt = _axis(float(ys.min()), float(ys.max()), axes.log_y)
    left, right, top, bottom = ox + 64.0, ox + width - 16.0, oy + 32.0, oy + height - 48.0

    def px(v):
        return left + (v - x0) / (x1 - x0) * (right - left)

    def py(v):
        return bottom - (v - y0) / (y1 - y0) * (bottom - top)

    out = [f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(right - left)}" height="{_f(bottom - top)}" fill="none" stroke="#000"/>']
    for v, lab in xt:
        p = px(v)
        out.append(f'<line x1="{_f(p)}" y1="{_f(bottom)}" x2="{_f(p)}" y2="{_f(bottom + 5)}" stroke="#000"/>')
        out.append(f'<line x1="{_f(p)}" y1="{_f(top)}" x2="{_f(p)}" y2="{_f(bottom)}" stroke="#ddd"/>')
        out.append(f'<text x="{_f(p)}" y="{_f(bottom + 18)}" text-anchor="middle">{escape(lab)}</text>')
    for v, lab in yt:
        p = py(v)
        out.append(f'<line x1="{_f(left - 5)}" y1="{_f(p)}" x2="{_f(left)}" y2="{_f(p)}" stroke="#000"/>')
        out.append(f'<line x1="{_f(left)}" y1="{_f(p)}" x2="{_f(right)}" y2="{_f(p)}" stroke="#ddd"/>')
        out.append(f'<text x="{_f(left - 8)}" y="{_f(p + 4)}" text-anchor="end">{escape(lab)}</text>')
    if panel.title:
        out.append(f'<text x="{_f((left + right) / 2)}" y="{_f(oy + 20)}" text-anchor="middle" font-weight="bold">{escape(panel.title)}</text>')
    if panel.xlabel:
        out.append(f'<text x="{_f((left + right) / 2)}" y="{_f(bottom + 38)}" text-anchor="middle">{escape(panel.xlabel)}</text>')
    if panel.ylabel:
        cx, cy = ox + 14.0, (top + bottom) / 2
        out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" text-anchor="middle" transform="rotate(-90 {_f(cx)} {_f(cy)})">{escape(panel.ylabel)}</text>')
    for i, (s, x, y) in enumerate(data):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(x, y)]
        if s.style == "points":
            out.extend(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="2.5" fill="{color}"/>' for a, b in pts)
        else:
            dash = ' stroke-dasharray="6,4"' if s.style == "dashed" else ""
            coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = top + 16.0 + 16.0 * i
        out.append(f'<line x1="{_f(left + 10)}" y1="{_f(ly - 4)}" x2="{_f(left + 30)}" y2="{_f(ly - 4)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_f(left + 36)}" y="{_f(ly)}">{escape(s.label)}</text>')
    return out


def emit_svg_panels(panels: Sequence[Panel], panel_width: float = 560.0, panel_height: float = 420.0) -> str:
    """Panels side by side in one self-contained document."""
    if not panels:
        raise RenderError("nothing to plot: no panels given")
    width = panel_width * len(panels)
    body = []
    for i, panel in enumerate(panels):
        body.extend(_panel_body(panel, i * panel_width, 0.0, panel_width, panel_height))
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(panel_height)}" '
        f'viewBox="0 0 {_f(width)} {_f(panel_height)}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{_f(width)}" height="{_f(panel_height)}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def emit_svg(series: Sequence[Series], axes: Axes | str = Axes.LINLIN, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    return emit_svg_panels([Panel(list(series), Axes(axes), title, xlabel, ylabel)])
