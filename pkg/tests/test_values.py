from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from dopecheck.values import INF, Grid, fmt, is_inf, min_positive_gap, quantize, to_value


def test_to_value_is_exact_for_decimal_strings():
    assert to_value("0.1") == F(1, 10)
    assert to_value(0.1) == F(1, 10)
    assert to_value(3) == F(3)
    assert to_value("inf") is INF and to_value("∞") is INF
    with pytest.raises(ValueError):
        to_value(float("nan"))


@pytest.mark.parametrize("x, text", [
    (F(1, 10), "0.1"), (F(3), "3"), (F(-1, 4), "-0.25"), (F(1, 3), "1/3"), (INF, "inf"), (F(1, 160), "0.00625"),
])
def test_fmt_frozen(x, text):
    assert fmt(x) == text


def test_grid_points_with_open_lower_end():
    g = Grid(0, 2, "0.1", lo_open=True)
    assert len(g) == 20
    assert g.points[0] == F(1, 10) and g.points[-1] == 2
    assert F(1, 10) in g and 0 not in g and F(1, 20) not in g
    assert g.index(F(1)) == 9


def test_grid_snap_and_outward():
    g = Grid(0, 1, "0.25")
    assert g.snap(F(3, 10)) == F(1, 4)
    assert g.snap(F(3, 8)) == F(1, 2)  # ties go up
    assert g.snap(F(-5)) == 0 and g.snap(F(7)) == 1
    assert g.outward(F(3, 10), F(6, 10)) == (F(1, 4), F(1, 2), F(3, 4))
    assert g.outward(F(1, 4), F(1, 4)) == (F(1, 4),)


def test_grid_json_round_trip_and_bracket():
    g = Grid(0, 2, "0.5", lo_open=True)
    assert Grid.from_json(g.to_json()) == g
    assert g.bracket() == "(0, 2] step 0.5"
    with pytest.raises(ValueError):
        Grid(0, 1, 0)


def test_quantize_and_gaps():
    assert quantize(F(1, 3), F(1, 100)) == F(33, 100)
    assert quantize(F(-1, 200), F(1, 100)) == F(-1, 100)
    assert min_positive_gap([F(0), F(1, 2), F(3, 4)]) == F(1, 4)
    assert min_positive_gap([F(1)]) is None
    assert is_inf(INF) and not is_inf(F(10**9))


@given(st.integers(-50, 50), st.integers(1, 8), st.fractions(-20, 20))
def test_outward_covers_the_interval(lo, step, x):
    g = Grid(lo, lo + 40, F(1, step))
    pts = g.outward(x, x + F(1, 3))
    inside = [p for p in g.points if x <= p <= x + F(1, 3)]
    assert set(inside) <= set(pts)
    if g.points[0] <= x <= g.points[-1]:
        assert pts and pts[0] <= x
