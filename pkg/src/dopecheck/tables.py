"""The emission-control verdict matrix: every program, NOx step and instance.

Each row names one check on one reactive model together with the verdict
it is expected to produce.  Models are built once per (program, NOx step)
and shared between rows.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .casestudy import EcuConfig, build_react_aec, build_react_ec, react_contract
from .hypercheck import ModelView, check_negation_instance, check_strengthened
from .values import fmt, to_value

NOX_STEPS = (Fraction(1, 20), Fraction(1, 160))
PROPERTIES = ("robust", "fclean")
# (a, b) pairs for the refutation instances on the doped model
INSTANCES = ((Fraction(1, 10), Fraction(2)), (Fraction(1), Fraction(2)))
ORIENTATIONS = ("a", "b")
EXPECTED_LABEL = {"clean": "clean", "doped": "violated", "unknown": "unknown"}


@dataclass(frozen=True)
class Row:
    prop: str
    program: str
    nox_step: Fraction
    mode: str  # "strengthen" or "negation"
    a: Fraction | None = None
    b: Fraction | None = None
    orientation: str | None = None
    expected: str = "clean"

    @property
    def instance(self) -> str:
        if self.mode == "strengthen":
            return "strengthened"
        return f"negation.{self.orientation} a={fmt(self.a)} b={fmt(self.b)}"


@dataclass
class RowResult:
    row: Row
    outcome: str
    seconds: float
    states: int
    transitions: int
    build_seconds: float = 0.0
    reason: str | None = None
    witness: dict | None = field(default=None, repr=False)

    @property
    def matches(self) -> bool:
        return self.outcome == self.row.expected

    def to_json(self) -> dict:
        r = self.row
        return {
            "property": r.prop, "program": r.program, "nox_step": fmt(r.nox_step), "instance": r.instance,
            "mode": r.mode, "a": None if r.a is None else fmt(r.a), "b": None if r.b is None else fmt(r.b),
            "orientation": r.orientation, "states": self.states, "transitions": self.transitions,
            "verdict": self.outcome, "expected": r.expected, "match": self.matches,
            "seconds": round(self.seconds, 3),
            "build_seconds": round(self.build_seconds, 3), "reason": self.reason,
        }


def matrix(props: Iterable[str] = PROPERTIES, programs: Iterable[str] = ("ec", "aec"),
           nox_steps: Iterable = NOX_STEPS) -> list[Row]:
    """Strengthened check on ``ec``; every refutation instance on ``aec``."""
    rows = []
    programs = tuple(programs)
    for prop in props:
        for step in nox_steps:
            step = to_value(step)
            if "ec" in programs:
                rows.append(Row(prop, "ec", step, "strengthen", expected="clean"))
            if "aec" in programs:
                for a, b in INSTANCES:
                    for o in ORIENTATIONS:
                        rows.append(Row(prop, "aec", step, "negation", a, b, o, expected="doped"))
    return rows


class ModelCache:
    def __init__(self):
        self._views: dict = {}

    def view(self, program: str, nox_step: Fraction) -> tuple[ModelView, float]:
        key = (program, nox_step)
        if key not in self._views:
            t0 = time.perf_counter()
            cfg = EcuConfig(nox_step=nox_step)
            ts = (build_react_ec if program == "ec" else build_react_aec)(cfg)
            self._views[key] = (ModelView(ts, react_contract(cfg)), time.perf_counter() - t0)
        return self._views[key]


def run_row(row: Row, cache: ModelCache | None = None) -> RowResult:
    cache = cache or ModelCache()
    view, build = cache.view(row.program, row.nox_step)
    t0 = time.perf_counter()
    if row.mode == "strengthen":
        v = check_strengthened(view, prop=row.prop)
    else:
        v = check_negation_instance(view, None, row.a, row.b, row.prop, orientations=(row.orientation,))
    return RowResult(row, v.outcome, time.perf_counter() - t0, view.ts.n, view.ts.transitions,
                     build, v.reason, v.witness)


def run_matrix(rows: Iterable[Row]) -> list[RowResult]:
    cache = ModelCache()
    return [run_row(r, cache) for r in rows]


def render(results: list[RowResult]) -> str:
    head = ("property", "program", "NOx step", "instance", "states", "transitions", "verdict", "expected",
            "time [s]", "")
    body = []
    for res in results:
        r = res.row
        body.append((r.prop, r.program, fmt(r.nox_step), r.instance, str(res.states), str(res.transitions),
                     EXPECTED_LABEL[res.outcome], EXPECTED_LABEL[r.expected], f"{res.seconds:.2f}",
                     "" if res.matches else "MISMATCH"))
    widths = [max(len(x[k]) for x in [head, *body]) for k in range(len(head))]
    line = lambda cols: "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()  # noqa: E731
    return "\n".join([line(head), line(tuple("-" * w for w in widths)), *map(line, body)])
