"""Linear temporal logic: formulas, parsing, progression and lasso evaluation.

Atoms are opaque: an ``Atom`` carries a unique ``name`` and an optional
``payload`` that the consumer knows how to evaluate (a state predicate over
decoded signals, a trace-indexed comparison, ...).  Progression rewrites a
formula against one letter of the trace; after simplification a safety
formula has finitely many residuals, which makes progression a
deterministic monitor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence


class UnsupportedFragment(ValueError):
    def __init__(self, operator: str, message: str | None = None):
        self.operator = operator
        super().__init__(message or f"operator {operator} is outside the safety fragment")


class LTL:
    __slots__ = ()

    def __and__(self, other):
        return land(self, other)

    def __or__(self, other):
        return lor(self, other)

    def __invert__(self):
        return lnot(self)

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(LTL):
    value: bool


@dataclass(frozen=True)
class Atom(LTL):
    name: str
    payload: object = field(default=None, compare=False, hash=False)


@dataclass(frozen=True)
class Not(LTL):
    arg: LTL


@dataclass(frozen=True)
class And(LTL):
    args: tuple[LTL, ...]


@dataclass(frozen=True)
class Or(LTL):
    args: tuple[LTL, ...]


@dataclass(frozen=True)
class Next(LTL):
    arg: LTL


@dataclass(frozen=True)
class Globally(LTL):
    arg: LTL


@dataclass(frozen=True)
class Finally(LTL):
    arg: LTL


@dataclass(frozen=True)
class Until(LTL):
    left: LTL
    right: LTL


@dataclass(frozen=True)
class WeakUntil(LTL):
    left: LTL
    right: LTL


TRUE, FALSE = Const(True), Const(False)


def _key(f: LTL) -> str:
    return render(f)


def land(*parts: LTL) -> LTL:
    flat: dict[LTL, None] = {}
    for p in parts:
        if p == FALSE:
            return FALSE
        if p == TRUE:
            continue
        for q in p.args if isinstance(p, And) else (p,):
            flat[q] = None
    items = sorted(flat, key=_key)
    for q in items:
        if lnot(q) in flat:
            return FALSE
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(tuple(items))


def lor(*parts: LTL) -> LTL:
    flat: dict[LTL, None] = {}
    for p in parts:
        if p == TRUE:
            return TRUE
        if p == FALSE:
            continue
        for q in p.args if isinstance(p, Or) else (p,):
            flat[q] = None
    items = sorted(flat, key=_key)
    for q in items:
        if lnot(q) in flat:
            return TRUE
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(tuple(items))


def lnot(p: LTL) -> LTL:
    if isinstance(p, Const):
        return Const(not p.value)
    if isinstance(p, Not):
        return p.arg
    return Not(p)


def implies(a: LTL, b: LTL) -> LTL:
    return lor(lnot(a), b)


def G(p: LTL) -> LTL:
    return p if isinstance(p, Const) else Globally(p)


def F(p: LTL) -> LTL:
    return p if isinstance(p, Const) else Finally(p)


def X(p: LTL) -> LTL:
    return p if isinstance(p, Const) else Next(p)


def U(a: LTL, b: LTL) -> LTL:
    return Until(a, b)


def W(a: LTL, b: LTL) -> LTL:
    if b == TRUE or a == TRUE:
        return TRUE
    if b == FALSE:
        return G(a)
    return WeakUntil(a, b)


_PREC = {Or: 2, And: 3}


def render(f: LTL, prec: int = 0) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + render(f.arg, 9)
    if isinstance(f, (And, Or)):
        op = " && " if isinstance(f, And) else " || "
        mine = _PREC[type(f)]
        text = op.join(render(a, mine + 1) for a in f.args)
        return f"({text})" if mine < prec else text
    if isinstance(f, (Next, Globally, Finally)):
        name = {Next: "X", Globally: "G", Finally: "F"}[type(f)]
        return f"{name}({render(f.arg)})"
    if isinstance(f, (Until, WeakUntil)):
        name = "U" if isinstance(f, Until) else "W"
        text = f"{render(f.left, 5)} {name} {render(f.right, 5)}"
        return f"({text})" if prec > 4 else text
    raise TypeError(f)


def atoms(f: LTL) -> tuple[Atom, ...]:
    seen: dict[str, Atom] = {}

    def go(g):
        if isinstance(g, Atom):
            seen.setdefault(g.name, g)
        elif isinstance(g, (Not, Next, Globally, Finally)):
            go(g.arg)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                go(a)
        elif isinstance(g, (Until, WeakUntil)):
            go(g.left)
            go(g.right)

    go(f)
    return tuple(seen[k] for k in sorted(seen))


# --- fragments ---------------------------------------------------------------


def is_state_formula(f: LTL) -> bool:
    if isinstance(f, (Const, Atom)):
        return True
    if isinstance(f, Not):
        return is_state_formula(f.arg)
    if isinstance(f, (And, Or)):
        return all(is_state_formula(a) for a in f.args)
    return False


def check_safety(f: LTL, positive: bool = True) -> None:
    """Raise ``UnsupportedFragment`` unless ``f`` is syntactically safe.

    Safe formulas are built from state formulas with ``&&``, ``||``, ``X``,
    ``G`` and ``W``; negation is allowed on state formulas, and a negated
    ``F``/``U`` counts as ``G``/``W``.
    """
    if is_state_formula(f):
        return
    if isinstance(f, Not):
        return check_safety(f.arg, not positive)
    if isinstance(f, (And, Or)):
        for a in f.args:
            check_safety(a, positive)
        return
    if isinstance(f, Next):
        return check_safety(f.arg, positive)
    if isinstance(f, Globally if positive else Finally):
        return check_safety(f.arg, positive)
    if isinstance(f, WeakUntil if positive else Until):
        check_safety(f.left, positive)
        check_safety(f.right, positive)
        return
    name = {Globally: "G", Finally: "F", Until: "U", WeakUntil: "W"}[type(f)]
    raise UnsupportedFragment(name if positive else f"!{name}")


# --- progression -------------------------------------------------------------


def progress(f: LTL, val: Callable[[Atom], bool]) -> LTL:
    """The obligation left for the suffix after reading one letter."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return TRUE if val(f) else FALSE
    if isinstance(f, Not):
        return lnot(progress(f.arg, val))
    if isinstance(f, And):
        return land(*(progress(a, val) for a in f.args))
    if isinstance(f, Or):
        return lor(*(progress(a, val) for a in f.args))
    if isinstance(f, Next):
        return f.arg
    if isinstance(f, Globally):
        return land(progress(f.arg, val), f)
    if isinstance(f, Finally):
        return lor(progress(f.arg, val), f)
    if isinstance(f, (Until, WeakUntil)):
        return lor(progress(f.right, val), land(progress(f.left, val), f))
    raise TypeError(f)


class Monitor:
    """Deterministic monitor obtained by progression, with cached steps.

    ``step(state, letter)`` takes ``letter`` as a frozenset of the names of
    true atoms.  ``FALSE`` is the rejecting sink.
    """

    def __init__(self, formula: LTL):
        check_safety(formula)
        self.formula = formula
        self.atoms = atoms(formula)
        self._cache: dict = {}

    @property
    def initial(self) -> LTL:
        return self.formula

    def step(self, state: LTL, letter: frozenset) -> LTL:
        key = (state, letter)
        nxt = self._cache.get(key)
        if nxt is None:
            nxt = progress(state, lambda a: a.name in letter)
            self._cache[key] = nxt
        return nxt

    @staticmethod
    def is_bad(state: LTL) -> bool:
        return state == FALSE

    def explore(self, letters: Sequence[frozenset]) -> tuple[list[LTL], dict]:
        """All residuals reachable over ``letters`` and the transition table."""
        states = [self.initial]
        index = {self.initial: 0}
        table: dict = {}
        k = 0
        while k < len(states):
            s = states[k]
            for letter in letters:
                t = self.step(s, letter)
                if t not in index:
                    index[t] = len(states)
                    states.append(t)
                table[(index[s], letter)] = index[t]
            k += 1
        return states, table

    def live_states(self, letters: Sequence[frozenset]) -> set[LTL]:
        """Residuals from which some infinite word avoids the bad sink."""
        states, table = self.explore(letters)
        live = {i for i, s in enumerate(states) if not self.is_bad(s)}
        changed = True
        while changed:
            changed = False
            for i in list(live):
                if not any(table[(i, a)] in live for a in letters):
                    live.discard(i)
                    changed = True
        return {states[i] for i in live}


# --- exact evaluation on lassos ----------------------------------------------


def evaluate_lasso(f: LTL, n: int, loop_start: int, val: Callable[[Atom, int], bool]) -> list[bool]:
    """Truth of ``f`` at every position of a lasso with ``n`` positions.

    Position ``n - 1`` is followed by ``loop_start``.  Fixpoints are computed
    by iterating around the loop: least for ``U``/``F``, greatest for
    ``W``/``G``.
    """
    if not 0 <= loop_start < n:
        raise ValueError("loop start outside the lasso")
    nxt = [i + 1 if i + 1 < n else loop_start for i in range(n)]
    memo: dict = {}

    def fix(step, init):
        v = [init] * n
        while True:
            new = [step(i, v) for i in range(n)]
            if new == v:
                return v
            v = new

    def go(g: LTL) -> list[bool]:
        if g in memo:
            return memo[g]
        if isinstance(g, Const):
            r = [g.value] * n
        elif isinstance(g, Atom):
            r = [bool(val(g, i)) for i in range(n)]
        elif isinstance(g, Not):
            r = [not x for x in go(g.arg)]
        elif isinstance(g, And):
            cols = [go(a) for a in g.args]
            r = [all(c[i] for c in cols) for i in range(n)]
        elif isinstance(g, Or):
            cols = [go(a) for a in g.args]
            r = [any(c[i] for c in cols) for i in range(n)]
        elif isinstance(g, Next):
            a = go(g.arg)
            r = [a[nxt[i]] for i in range(n)]
        elif isinstance(g, Globally):
            a = go(g.arg)
            r = fix(lambda i, v: a[i] and v[nxt[i]], True)
        elif isinstance(g, Finally):
            a = go(g.arg)
            r = fix(lambda i, v: a[i] or v[nxt[i]], False)
        elif isinstance(g, Until):
            a, b = go(g.left), go(g.right)
            r = fix(lambda i, v: b[i] or (a[i] and v[nxt[i]]), False)
        elif isinstance(g, WeakUntil):
            a, b = go(g.left), go(g.right)
            r = fix(lambda i, v: b[i] or (a[i] and v[nxt[i]]), True)
        else:
            raise TypeError(g)
        memo[g] = r
        return r

    return go(f)


def holds_on_lasso(f: LTL, n: int, loop_start: int, val: Callable[[Atom, int], bool]) -> bool:
    return evaluate_lasso(f, n, loop_start, val)[0]


# --- parsing -----------------------------------------------------------------

_TEMPORAL = {"G", "F", "X"}
_BINARY = {"U", "W"}


def parse_ltl(text: str) -> LTL:
    """Parse LTL whose atoms are predicates of the program language.

    ``G``, ``F``, ``X`` are prefix operators; ``U`` and ``W`` are
    right-associative infix operators binding tighter than ``&&``.  An atom
    is any comparison or interval test, e.g. ``G(t in (0, 1])``.  Each atom
    becomes an ``Atom`` whose payload is the predicate expression.
    """
    from ..seqlang.ast import Var
    from ..seqlang.parser import ParseError, _Parser

    p = _Parser(text)

    def is_name(t, names):
        return t.kind == "name" and t.text in names

    def imp():
        left = disj()
        if p.accept("=>"):
            return implies(left, imp())
        return left

    def disj():
        e = conj()
        while p.at("||", "or"):
            p.take()
            e = lor(e, conj())
        return e

    def conj():
        e = until()
        while p.at("&&", "and"):
            p.take()
            e = land(e, until())
        return e

    def until():
        left = unary()
        if is_name(p.tok, _BINARY):
            op = p.take().text
            right = until()
            return U(left, right) if op == "U" else W(left, right)
        return left

    def unary():
        t = p.tok
        if p.at("!", "not"):
            p.take()
            return lnot(unary())
        if is_name(t, _TEMPORAL):
            nxt = p.toks[p.i + 1]
            if nxt.kind in ("op", "kw") and nxt.text in ("(", "!", "not", "true", "false") or is_name(nxt, _TEMPORAL) \
                    or nxt.kind == "name":
                p.take()
                arg = unary()
                return {"G": G, "F": F, "X": X}[t.text](arg)
        if p.at("true"):
            save = p.i
            p.take()
            if not p.at("==", "!=", "<", "<=", ">", ">=", "in"):
                return TRUE
            p.i = save
        if p.at("false"):
            save = p.i
            p.take()
            if not p.at("==", "!=", "<", "<=", ">", ">=", "in"):
                return FALSE
            p.i = save
        if p.at("("):
            save = p.i
            p.take()
            try:
                inner = imp()
                p.expect(")")
                if not p.at("==", "!=", "<", "<=", ">", ">=", "in", "+", "-", "*", "/", "^"):
                    return inner
            except ParseError:
                pass
            p.i = save
        expr = p.comparison()
        if isinstance(expr, Var):
            return Atom(expr.name, expr)
        return Atom(expr.render(), expr)

    f = imp()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return f
