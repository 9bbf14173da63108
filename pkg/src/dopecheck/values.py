"""Exact scalar values and discretized grids.

Every verdict-relevant number is an exact rational (``fractions.Fraction``)
whose literals live on a decimal scale.  The distinguished value
``INF`` (``math.inf``) compares correctly against any ``Fraction``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Union

INF = math.inf
DEFAULT_SCALE = Fraction(1, 10**6)

Value = Union[Fraction, float]  # float only ever means INF
Number = Union[int, str, float, Fraction]


def to_value(x: Number) -> Value:
    """Convert a literal to a ``Value``.

    Strings are parsed exactly (``"0.1"`` is 1/10, not the nearest double);
    ``"inf"``/``"∞"`` and float infinity give ``INF``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if math.isinf(x) and x > 0:
            return INF
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"not a valid value: {x!r}")
        return Fraction(repr(x))
    s = str(x).strip()
    if s.lower() in ("inf", "+inf", "infinity", "∞"):
        return INF
    return Fraction(s)


def is_inf(x: Value) -> bool:
    return isinstance(x, float) and math.isinf(x)


def quantize(x: Fraction, scale: Fraction = DEFAULT_SCALE) -> Fraction:
    """Round ``x`` to the nearest multiple of ``scale`` (ties away from zero)."""
    q = x / scale
    n = math.floor(abs(q) + Fraction(1, 2))
    return (n if q >= 0 else -n) * scale


def fmt(x: Value) -> str:
    """Render a value as a short exact string: decimal when finite, else p/q."""
    if is_inf(x):
        return "inf"
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    scaled = x * 10**digits
    sign = "-" if scaled < 0 else ""
    n = abs(scaled.numerator)
    whole, frac = divmod(n, 10**digits)
    return f"{sign}{whole}.{str(frac).rjust(digits, '0').rstrip('0')}"


@dataclass(frozen=True)
class Grid:
    """Finite arithmetic grid ``lo + k*step`` inside an interval.

    ``lo_open``/``hi_open`` exclude the corresponding endpoint, so
    ``Grid(0, 2, 0.1, lo_open=True)`` is ``{0.1, 0.2, ..., 2}``.
    """

    lo: Fraction
    hi: Fraction
    step: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        for name in ("lo", "hi", "step"):
            object.__setattr__(self, name, to_value(getattr(self, name)))
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if self.hi < self.lo:
            raise ValueError("grid upper bound below lower bound")

    @cached_property
    def points(self) -> tuple[Fraction, ...]:
        n = math.floor((self.hi - self.lo) / self.step)
        pts = [self.lo + k * self.step for k in range(n + 1)]
        if self.lo_open and pts and pts[0] == self.lo:
            pts = pts[1:]
        if self.hi_open and pts and pts[-1] == self.hi:
            pts = pts[:-1]
        return tuple(pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, x) -> bool:
        return self.index(x) is not None

    def index(self, x) -> int | None:
        if is_inf(x):
            return None
        x = Fraction(x)
        k = (x - self.lo) / self.step
        if k.denominator != 1:
            return None
        pts = self.points
        if not pts:
            return None
        i = int(k) - (1 if self.lo_open else 0)
        if 0 <= i < len(pts) and pts[i] == x:
            return i
        return None

    def snap(self, x: Fraction) -> Fraction:
        """Nearest grid point (ties go up), clamped to the grid's extent."""
        pts = self.points
        if not pts:
            raise ValueError("empty grid")
        if x <= pts[0]:
            return pts[0]
        if x >= pts[-1]:
            return pts[-1]
        k = math.floor((x - pts[0]) / self.step + Fraction(1, 2))
        return pts[0] + k * self.step

    def within(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, ...]:
        """Grid points in the closed interval ``[lo, hi]``."""
        return tuple(p for p in self.points if lo <= p <= hi)

    def outward(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, ...]:
        """Grid points of ``[lo, hi]`` after snapping both ends outward.

        The lower end moves down and the upper end moves up to the lattice,
        so the result over-approximates the interval and is never empty when
        the interval meets the grid's extent.
        """
        base = self.lo
        lo_s = base + math.floor((lo - base) / self.step) * self.step
        hi_s = base + math.ceil((hi - base) / self.step) * self.step
        return self.within(lo_s, hi_s)

    def bracket(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{fmt(self.lo)}, {fmt(self.hi)}{right} step {fmt(self.step)}"

    def to_json(self) -> dict:
        d = {"lo": fmt(self.lo), "hi": fmt(self.hi), "step": fmt(self.step)}
        if self.lo_open:
            d["lo_open"] = True
        if self.hi_open:
            d["hi_open"] = True
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Grid":
        return cls(d["lo"], d["hi"], d["step"], d.get("lo_open", False), d.get("hi_open", False))


def min_positive_gap(points: Iterable[Fraction]) -> Fraction | None:
    pts = sorted(set(points))
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    return min(gaps) if gaps else None
