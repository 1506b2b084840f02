import re

import pytest

from gasket_martin.kernel import ChainParams
from gasket_martin.render import gasket_svg, ramp


def circles(svg):
    return [(float(x), float(y), float(h)) for x, y, h in
            re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)" [^>]*data-h="([-\d.]+)"', svg)]


def test_depth_zero():
    svg = gasket_svg(ChainParams(1 / 3), 0)
    assert svg.count("<polygon") == 1
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    # q1 top, q2 bottom left, q3 bottom right in SVG coordinates (y down, margin 10, scale 600)
    assert pts == ["310.000,10.000", "10.000,529.615", "610.000,529.615"]


def test_depth_one_q1_corner_maximal():
    svg = gasket_svg(ChainParams(0.3), 1, i=1)
    assert svg.count("<polygon") == 3
    cs = circles(svg)
    top = min(cs, key=lambda c: c[1])
    assert top[2] == max(c[2] for c in cs)
    assert abs(top[2] - 3) < 1e-9


def test_triangle_count_and_determinism():
    params = ChainParams(0.25)
    a = gasket_svg(params, 3, i=2)
    assert a.count("<polygon") == 27
    assert gasket_svg(params, 3, i=2) == a


def test_limits():
    with pytest.raises(ValueError):
        gasket_svg(ChainParams(0.25), 9)
    with pytest.raises(ValueError):
        gasket_svg(ChainParams(0.25), 1, i=4)


def test_ramp():
    assert ramp(0) == "#2c7bb6"
    assert ramp(1.5) == "#ffffbf"
    assert ramp(3) == "#d7191c"
    assert ramp(-1) == ramp(0) and ramp(10) == ramp(3)
