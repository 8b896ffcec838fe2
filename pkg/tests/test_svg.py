import re

import numpy as np
import pytest

from levyflow.errors import RenderError
from levyflow.svg import Axes, Panel, Series, emit_svg, emit_svg_panels


def polyline_points(svg):
    m = re.search(r'<polyline points="([^"]+)"', svg)
    return np.array([[float(v) for v in p.split(",")] for p in m.group(1).split()])


def test_loglog_unit_slope_is_diagonal():
    x = np.geomspace(1e-2, 1e2, 9)
    svg = emit_svg([Series("y=x", x, x)], Axes.LOGLOG)
    pts = polyline_points(svg)
    dx, dy = np.diff(pts[:, 0]), np.diff(pts[:, 1])
    assert np.allclose(dx, dx[0], atol=0.02)
    # square data range on a non-square plot area: slope in pixels is height/width ratio
    assert np.allclose(dy / dx, dy[0] / dx[0], atol=1e-3)
    assert dy[0] < 0
    assert "1e-2" in svg and "1e2" in svg


def test_semilogy_and_linear_ticks():
    svg = emit_svg([Series("exp", [0, 1, 2, 3], [1, 10, 100, 1000])], "semilogy", "t", "x", "y")
    pts = polyline_points(svg)
    assert np.allclose(np.diff(pts[:, 1]), np.diff(pts[:, 1])[0], atol=0.02)
    assert ">t<" in svg and ">x<" in svg and ">y<" in svg


def test_deterministic_output():
    s = [Series("a", [0, 1, 2], [3, 1, 2]), Series("b", [0, 2], [0, 1], style="dashed"), Series("c", [1], [1], style="points")]
    assert emit_svg(s) == emit_svg(s)
    out = emit_svg(s)
    assert out.startswith("<svg") and out.endswith("</svg>\n")
    assert "stroke-dasharray" in out and "<circle" in out


@pytest.mark.parametrize("series, axes", [
    (Series("neg", [1, 2], [1, -1]), Axes.LOGLOG),
    (Series("zero-x", [0, 2], [1, 1]), Axes.LOGLOG),
    (Series("nan", [1, 2], [1, np.nan]), Axes.LINLIN),
    (Series("ragged", [1, 2, 3], [1, 2]), Axes.LINLIN),
])
def test_render_errors_name_series(series, axes):
    with pytest.raises(RenderError, match=series.label):
        emit_svg([series], axes)


def test_empty_inputs():
    with pytest.raises(RenderError):
        emit_svg([])
    with pytest.raises(RenderError):
        emit_svg_panels([])


def test_two_panels_side_by_side():
    p1 = Panel([Series("a", [0, 1], [0, 1])], Axes.LINLIN, "lin")
    p2 = Panel([Series("a", [0, 1], [1, 10])], Axes.SEMILOGY, "log")
    svg = emit_svg_panels([p1, p2], 500, 400)
    assert 'width="1000.00"' in svg
    xs = [polyline_points(chunk)[:, 0].min() for chunk in svg.split("<polyline")[1:] for chunk in ["<polyline" + chunk]]
    assert xs[0] < 500 < xs[1]


def test_constant_series_renders():
    svg = emit_svg([Series("flat", [0, 1, 2], [5, 5, 5])])
    assert np.all(np.isfinite(polyline_points(svg)))
