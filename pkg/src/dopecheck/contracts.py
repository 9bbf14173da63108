"""Contracts: parameters of interest, standard inputs, distances and bounds.

A contract is plain data.  Predicates (``pintrs``, ``stdin``, ``comm``) are
kept as source text and compiled by the checker that consumes them: the
sequential checkers read them as boolean expressions of the program
language, the reactive checkers read ``stdin`` as a temporal formula.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .values import DEFAULT_SCALE, INF, Value, fmt, is_inf, to_value


class ContractError(ValueError):
    pass


def _scalar(x):
    if isinstance(x, tuple):
        if len(x) != 1:
            raise ContractError(f"custom table distance needs scalar values, got {x!r}")
        return x[0]
    return x


def _absdiff(a, b) -> Value:
    if isinstance(a, tuple):
        if len(a) != len(b):
            raise ContractError("valuations of different arity")
        return max((abs(x - y) for x, y in zip(a, b)), default=Fraction(0))
    return abs(a - b)


@dataclass(frozen=True)
class Distance:
    """A commutative distance with ``d(a, a) = 0``.

    ``kind`` is one of:

    * ``absdiff`` -- ``|a - b|``; on valuations the maximum over components.
    * ``discrete`` -- ``0`` on equal arguments, ``threshold`` otherwise.
    * ``custom`` -- symmetric lookup ``table`` of ``(a, b, d)`` rows.
    * ``past_forgetful`` -- on finite traces, ``base`` applied to the last
      elements.
    * ``dnew`` -- the three-valued prefix distance built by
      :func:`lift_input_distance_dnew`.
    """

    kind: str
    threshold: Value | None = None
    table: tuple = ()
    base: "Distance | None" = None
    kappa_in: Value | None = None
    stdin: Callable[[Sequence], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("absdiff", "discrete", "custom", "past_forgetful", "dnew"):
            raise ContractError(f"unknown distance kind {self.kind!r}")
        if self.kind == "discrete" and self.threshold is None:
            raise ContractError("discrete distance needs a threshold")
        if self.kind in ("past_forgetful", "dnew") and self.base is None:
            raise ContractError(f"{self.kind} distance needs a base distance")

    @property
    def is_trace_distance(self) -> bool:
        return self.kind in ("past_forgetful", "dnew")

    @property
    def point(self) -> "Distance":
        """The element distance underlying a trace distance."""
        return self.base.point if self.is_trace_distance else self

    def __call__(self, a, b, *, standard: tuple[bool, bool] | None = None) -> Value:
        if self.kind == "absdiff":
            return _absdiff(a, b)
        if self.kind == "discrete":
            return Fraction(0) if a == b else self.threshold
        if self.kind == "custom":
            a, b = _scalar(a), _scalar(b)
            if a == b:
                return Fraction(0)
            for x, y, d in self.table:
                if (x, y) == (a, b) or (x, y) == (b, a):
                    return d
            raise ContractError(f"custom distance has no entry for ({fmt(a)}, {fmt(b)})")
        if self.kind == "past_forgetful":
            if not a and not b:
                return Fraction(0)
            if not a or not b:
                return INF
            return self.base(a[-1], b[-1])
        return self._dnew(a, b, standard)

    def _dnew(self, i, j, standard):
        i, j = tuple(i), tuple(j)
        if i == j:
            return Fraction(0)
        if standard is None:
            if self.stdin is None:
                raise ContractError("dnew distance needs stdin membership")
            standard = (bool(self.stdin(i)), bool(self.stdin(j)))
        if len(i) != len(j):
            return Fraction(2)
        within = all(self.base(i[: k + 1], j[: k + 1]) <= self.kappa_in for k in range(len(i)))
        if (standard[0] or standard[1]) and within:
            return Fraction(1)
        return Fraction(2)

    def to_json(self) -> dict:
        if self.kind == "absdiff":
            return {"kind": "absdiff"}
        if self.kind == "discrete":
            return {"kind": "discrete", "threshold": fmt(self.threshold)}
        if self.kind == "custom":
            return {"kind": "custom", "table": [[fmt(x), fmt(y), fmt(d)] for x, y, d in self.table]}
        if self.kind == "past_forgetful":
            return {"kind": "past_forgetful", "base": self.base.to_json()}
        raise ContractError("dnew distances are derived and not serialisable")

    @classmethod
    def from_json(cls, d: dict) -> "Distance":
        kind = d["kind"]
        if kind == "absdiff":
            return ABSDIFF
        if kind == "discrete":
            return cls("discrete", threshold=to_value(d["threshold"]))
        if kind == "custom":
            rows = tuple((to_value(x), to_value(y), to_value(v)) for x, y, v in d["table"])
            return cls("custom", table=rows)
        if kind == "past_forgetful":
            return cls("past_forgetful", base=cls.from_json(d["base"]))
        raise ContractError(f"unknown distance kind {kind!r}")


ABSDIFF = Distance("absdiff")


def past_forgetful(base: Distance = ABSDIFF) -> Distance:
    return Distance("past_forgetful", base=base)


def lift_input_distance_dnew(base: Distance, kappa_in: Value, stdin: Callable[[Sequence], bool]) -> Distance:
    """Three-valued prefix distance used to embed robust into f-cleanness.

    ``0`` on equal prefixes; ``1`` when one side is standard, the prefixes
    differ and every shorter prefix pair is within ``kappa_in`` under
    ``base``; ``2`` otherwise.  ``base`` must accept finite traces.
    """
    if is_inf(kappa_in):
        raise ContractError("kappa_in must be finite")
    return Distance("dnew", base=base, kappa_in=kappa_in, stdin=stdin)


@dataclass(frozen=True)
class BoundFn:
    """Bounding function from input distance to allowed output distance.

    ``custom`` tables are step functions: the value at the greatest key not
    above ``x`` (the smallest key's value below the table).
    """

    kind: str
    kappa_in: Value | None = None
    kappa_out: Value | None = None
    slope: Value | None = None
    offset: Value | None = None
    value: Value | None = None
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("threshold", "affine", "const", "custom"):
            raise ContractError(f"unknown bound kind {self.kind!r}")
        if self.kind == "custom" and not self.table:
            raise ContractError("custom bound needs a nonempty table")

    def __call__(self, x: Value) -> Value:
        if self.kind == "threshold":
            return self.kappa_out if x <= self.kappa_in else INF
        if is_inf(x):
            return INF if self.kind != "const" else self.value
        if self.kind == "affine":
            return self.slope * x + self.offset
        if self.kind == "const":
            return self.value
        best = self.table[0][1]
        for key, val in self.table:
            if key <= x:
                best = val
        return best

    def to_json(self) -> dict:
        if self.kind == "threshold":
            return {"kind": "threshold", "kappa_in": fmt(self.kappa_in), "kappa_out": fmt(self.kappa_out)}
        if self.kind == "affine":
            return {"kind": "affine", "slope": fmt(self.slope), "offset": fmt(self.offset)}
        if self.kind == "const":
            return {"kind": "const", "value": fmt(self.value)}
        return {"kind": "custom", "table": [[fmt(k), fmt(v)] for k, v in self.table]}

    @classmethod
    def from_json(cls, d: dict) -> "BoundFn":
        kind = d["kind"]
        if kind == "threshold":
            return threshold(to_value(d["kappa_in"]), to_value(d["kappa_out"]))
        if kind == "affine":
            return affine(to_value(d["slope"]), to_value(d["offset"]))
        if kind == "const":
            return cls("const", value=to_value(d["value"]))
        if kind == "custom":
            rows = tuple(sorted((to_value(k), to_value(v)) for k, v in d["table"]))
            return cls("custom", table=rows)
        raise ContractError(f"unknown bound kind {kind!r}")

    def render(self, arg: str) -> str:
        if self.kind == "affine":
            return f"{fmt(self.slope)}*{arg} + {fmt(self.offset)}"
        if self.kind == "const":
            return fmt(self.value)
        return f"f({arg})"


def threshold(kappa_in: Value, kappa_out: Value) -> BoundFn:
    return BoundFn("threshold", kappa_in=to_value(kappa_in), kappa_out=to_value(kappa_out))


def affine(slope, offset=0) -> BoundFn:
    return BoundFn("affine", slope=to_value(slope), offset=to_value(offset))


def constant(value) -> BoundFn:
    return BoundFn("const", value=to_value(value))


@dataclass(frozen=True)
class Contract:
    """What a program promises: see the module docstring for the predicates."""

    stdin: str = "true"
    pintrs: Any = None  # None (all), expression text, or tuple of valuations
    comm: str | None = None
    d_in: Distance = ABSDIFF
    d_out: Distance = ABSDIFF
    kappa_in: Value = INF
    kappa_out: Value = INF
    f: BoundFn | None = None
    scale: Fraction = DEFAULT_SCALE

    def bound(self) -> BoundFn:
        if self.f is None:
            raise ContractError("contract has no bounding function f")
        return self.f

    def replace(self, **changes) -> "Contract":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return Contract(**data)

    def to_json(self) -> dict:
        pintrs = self.pintrs
        if isinstance(pintrs, tuple):
            pintrs = [{k: fmt(v) for k, v in row} for row in pintrs]
        return {
            "pintrs": pintrs,
            "stdin": self.stdin,
            "comm": self.comm,
            "d_in": self.d_in.to_json(),
            "d_out": self.d_out.to_json(),
            "kappa_in": fmt(self.kappa_in),
            "kappa_out": fmt(self.kappa_out),
            "f": self.f.to_json() if self.f is not None else None,
            "scale": fmt(self.scale),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Contract":
        unknown = set(d) - {"pintrs", "stdin", "comm", "d_in", "d_out", "kappa_in", "kappa_out", "f", "scale"}
        if unknown:
            raise ContractError(f"unknown contract fields: {sorted(unknown)}")
        pintrs = d.get("pintrs")
        if isinstance(pintrs, list):
            pintrs = tuple(tuple(sorted((k, to_value(v)) for k, v in row.items())) for row in pintrs)
        f = d.get("f")
        c = cls(
            stdin=d.get("stdin") or "true",
            pintrs=pintrs,
            comm=d.get("comm"),
            d_in=Distance.from_json(d.get("d_in", {"kind": "absdiff"})),
            d_out=Distance.from_json(d.get("d_out", {"kind": "absdiff"})),
            kappa_in=to_value(d.get("kappa_in", "inf")),
            kappa_out=to_value(d.get("kappa_out", "inf")),
            f=BoundFn.from_json(f) if f else None,
            scale=to_value(d.get("scale", "0.000001")),
        )
        c.check_scale()
        return c

    def numbers(self) -> list[Value]:
        """Every finite numeric literal the contract carries."""
        out = [self.kappa_in, self.kappa_out]
        if isinstance(self.pintrs, tuple):
            out += [v for row in self.pintrs for _, v in row]
        for dist in (self.d_in, self.d_out):
            while dist is not None:
                out += [x for x in (dist.threshold,) if x is not None] + [x for row in dist.table for x in row]
                dist = dist.base
        if self.f is not None:
            f = self.f
            out += [x for x in (f.kappa_in, f.kappa_out, f.slope, f.offset, f.value) if x is not None]
            out += [x for row in f.table for x in row]
        return [x for x in out if not is_inf(x)]

    def check_scale(self) -> None:
        """Reject literals that do not lie on the contract's decimal scale."""
        if self.scale <= 0:
            raise ContractError("scale must be positive")
        off = [x for x in self.numbers() if (x / self.scale).denominator != 1]
        if off:
            raise ContractError(f"values {[fmt(x) for x in off]} are finer than scale {fmt(self.scale)}")


def load_contract(path: str | Path) -> Contract:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}: invalid JSON: {exc}") from exc
    return Contract.from_json(data)


def dump_contract(contract: Contract, path: str | Path | None = None) -> str:
    text = json.dumps(contract.to_json(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def directed_hausdorff(d: Callable, A: Iterable, B: Iterable) -> Value:
    A, B = list(A), list(B)
    if not A:
        return Fraction(0)
    if not B:
        return INF
    return max(min(d(a, b) for b in B) for a in A)


def hausdorff(d: Callable, A: Iterable, B: Iterable) -> Value:
    """Hausdorff lifting of ``d`` to finite sets.

    Both sets empty gives 0; exactly one empty gives ``INF``.
    """
    A, B = list(A), list(B)
    if not A and not B:
        return Fraction(0)
    if not A or not B:
        return INF
    return max(directed_hausdorff(d, A, B), directed_hausdorff(lambda x, y: d(y, x), B, A))


def hausdorff_two_clause(d: Callable, A: Iterable, B: Iterable, bound: Value) -> bool:
    """Every element of each set has a partner in the other within ``bound``.

    An infinite bound is always met, matching ``hausdorff(...) <= INF``.
    """
    if is_inf(bound):
        return True
    A, B = list(A), list(B)
    left = all(any(d(a, b) <= bound for b in B) for a in A)
    right = all(any(d(a, b) <= bound for a in A) for b in B)
    return left and right
