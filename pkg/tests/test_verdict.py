from fractions import Fraction as F

from dopecheck.values import INF
from dopecheck.verdict import EXIT_CODES, clean, combine, doped, jsonable, unknown


def test_exit_codes():
    assert EXIT_CODES == {"clean": 0, "doped": 1, "unknown": 2}
    assert (clean().exit_code, doped({}).exit_code, unknown("x").exit_code) == (0, 1, 2)


def test_combine_prefers_doped_then_unknown():
    c, d, u = clean(), doped({"w": 1}), unknown("why")
    assert combine(c, u, d) is d
    assert combine(c, u) is u
    assert combine(c, clean()) is c
    assert combine().clean


def test_json_shape():
    v = doped({"i": F(1, 10)}, [{"i": F(1, 10)}, {"i": F(1, 5)}], seconds=0.5, tuples=3)
    assert v.to_json() == {"verdict": "doped", "witness": {"i": "0.1"},
                           "stats": {"seconds": 0.5, "tuples": 3}, "witness_count": 2}
    assert unknown("budget").to_json() == {"verdict": "unknown", "reason": "budget"}
    assert str(unknown("budget")) == "UNKNOWN (budget)"


def test_jsonable_values():
    assert jsonable({"a": (F(1, 4), INF), "b": frozenset({F(2), F(1)}), "c": True}) == {
        "a": ["0.25", "inf"], "b": ["1", "2"], "c": True}
