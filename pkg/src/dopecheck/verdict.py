"""Verdicts shared by all checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .values import fmt

CLEAN, DOPED, UNKNOWN = "clean", "doped", "unknown"
EXIT_CODES = {CLEAN: 0, DOPED: 1, UNKNOWN: 2}


def jsonable(x: Any) -> Any:
    """Convert values, tuples and nested containers to JSON-friendly data.

    Exact values become decimal strings; plain counters and timings stay numbers.
    """
    from fractions import Fraction

    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float) and math.isfinite(x):
        return x
    if isinstance(x, (Fraction, float)):
        return fmt(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [jsonable(v) for v in x]
        return sorted(items, key=str) if isinstance(x, (set, frozenset)) else items
    return str(x)


@dataclass(frozen=True)
class Verdict:
    """``clean``, ``doped`` with a replayable witness, or ``unknown`` with a reason."""

    outcome: str
    witness: dict | None = None
    reason: str | None = None
    stats: dict = field(default_factory=dict)
    witnesses: tuple = ()  # every violation found, when collected

    @property
    def clean(self) -> bool:
        return self.outcome == CLEAN

    @property
    def doped(self) -> bool:
        return self.outcome == DOPED

    @property
    def unknown(self) -> bool:
        return self.outcome == UNKNOWN

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]

    def to_json(self) -> dict:
        out: dict = {"verdict": self.outcome}
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.reason:
            out["reason"] = self.reason
        if self.stats:
            out["stats"] = jsonable(self.stats)
        if self.witnesses:
            out["witness_count"] = len(self.witnesses)
        return out

    def __str__(self) -> str:
        text = self.outcome.upper()
        if self.reason:
            text += f" ({self.reason})"
        return text


def clean(**stats) -> Verdict:
    return Verdict(CLEAN, stats=stats)


def doped(witness: dict, witnesses=(), **stats) -> Verdict:
    return Verdict(DOPED, witness=witness, witnesses=tuple(witnesses), stats=stats)


def unknown(reason: str, witness: dict | None = None, **stats) -> Verdict:
    return Verdict(UNKNOWN, witness=witness, reason=reason, stats=stats)


def combine(*verdicts: Verdict) -> Verdict:
    """Conjunction: the first doped verdict, else the first unknown, else clean."""
    for want in (DOPED, UNKNOWN):
        for v in verdicts:
            if v.outcome == want:
                return v
    return verdicts[0] if verdicts else clean()
