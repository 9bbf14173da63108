"""Set-valued big-step semantics by exhaustive path enumeration.

``evaluate`` explores every resolution of the nondeterministic assignments
and collects the reachable output valuations.  A path that revisits a loop
configuration provably diverges and contributes ``BOTTOM``; a path that runs
out of its step budget also contributes ``BOTTOM`` but marks the result as
``exhausted`` because divergence was not proven.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..values import Value, fmt
from .ast import (
    Assign,
    EvalError,
    If,
    NondetAssign,
    Program,
    Seq,
    Skip,
    Stmt,
    While,
)

DEFAULT_BUDGET = 100_000


class _Bottom:
    """Nontermination marker; sorts after every output valuation."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOTTOM"

    def __str__(self):
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True)
class EvalResult:
    outputs: frozenset  # output tuples in declaration order, maybe BOTTOM
    exhausted: bool = False
    warnings: tuple[str, ...] = ()
    steps: int = 0

    @property
    def diverges(self) -> bool:
        return BOTTOM in self.outputs

    @property
    def values(self) -> frozenset:
        """The terminating outputs only."""
        return frozenset(o for o in self.outputs if o is not BOTTOM)

    def sorted(self) -> list:
        return sorted(self.values) + ([BOTTOM] if self.diverges else [])


def _where(s: Stmt) -> str:
    pos = getattr(s, "pos", None)
    return f"{pos[0]}:{pos[1]}: " if pos else ""


def initial_env(prog: Program, params: Mapping[str, Value], inputs: Mapping[str, Value]) -> dict:
    env: dict = dict(prog.consts)
    for d in prog.decls:
        source = params if d.role == "param" else inputs if d.role == "input" else None
        if source is None:
            env[d.name] = 0
            continue
        if d.name not in source:
            raise EvalError(f"no value given for {d.role} {d.name!r}")
        env[d.name] = source[d.name]
    return env


def evaluate(
    prog: Program,
    params: Mapping[str, Value] | None = None,
    inputs: Mapping[str, Value] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> EvalResult:
    """All output valuations of ``prog`` on one parameter/input valuation."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    env0 = initial_env(prog, params or {}, inputs or {})
    names = prog.names
    outs = prog.outputs
    grids = {d.name: d.grid for d in prog.decls}
    results: set = set()
    warnings: list[str] = []
    exhausted = False
    total = 0
    # work items: (continuation stack with the next statement last, env, steps, seen loop configs)
    work = [([prog.body], env0, 0, set())]
    while work:
        cont, env, steps, seen = work.pop()
        while True:
            if not cont:
                results.add(tuple(env[o] for o in outs))
                break
            if steps >= budget:
                results.add(BOTTOM)
                exhausted = True
                break
            s = cont.pop()
            if isinstance(s, Seq):
                cont.append(s.second)
                cont.append(s.first)
                continue
            steps += 1
            total += 1
            try:
                if isinstance(s, Skip):
                    continue
                if isinstance(s, Assign):
                    v = s.expr.ev(env)
                    g = grids[s.var]
                    if g is not None and v not in g:
                        snapped = g.snap(v)
                        warnings.append(f"{_where(s)}{s.var} := {fmt(v)} is off its domain; snapped to {fmt(snapped)}")
                        v = snapped
                    env[s.var] = v
                    continue
                if isinstance(s, If):
                    c = s.cond.ev(env)
                    cont.append(s.then if c else s.else_)
                    continue
                if isinstance(s, While):
                    key = (tuple(map(id, cont)), tuple(env[n] for n in names))
                    if key in seen:
                        results.add(BOTTOM)
                        break
                    seen.add(key)
                    if s.cond.ev(env):
                        cont.append(s)
                        cont.append(s.body)
                    continue
                if isinstance(s, NondetAssign):
                    lo, hi = s.lo.ev(env), s.hi.ev(env)
                    if lo > hi:
                        raise EvalError(f"empty range [{fmt(lo)}, {fmt(hi)}]")
                    choices = grids[s.var].outward(lo, hi)
                    if not choices:
                        raise EvalError(f"range [{fmt(lo)}, {fmt(hi)}] misses the domain of {s.var}")
                    for v in choices[1:]:
                        branch = dict(env)
                        branch[s.var] = v
                        work.append((list(cont), branch, steps, set(seen)))
                    env[s.var] = choices[0]
                    continue
            except EvalError as exc:
                raise EvalError(f"{_where(s)}{exc}") from None
            raise TypeError(f"unknown statement {s!r}")
    return EvalResult(frozenset(results), exhausted, tuple(dict.fromkeys(warnings)), total)
