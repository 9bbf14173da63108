"""Expression, predicate and statement trees of the program language.

Expressions double as the predicate language of the wp engine, so boolean
nodes evaluate in Kleene three-valued logic: ``None`` means unknown.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from ..values import Grid, Value, fmt, is_inf


class EvalError(Exception):
    """Run-time failure: division by zero, undefined variable, bad range."""


# precedence levels used by render()
P_IMP, P_OR, P_AND, P_NOT, P_CMP, P_ADD, P_MUL, P_UNARY, P_POW, P_ATOM = range(1, 11)


class Expr:
    __slots__ = ()

    def ev(self, env: Mapping[str, Value]):
        raise NotImplementedError

    def free_vars(self) -> frozenset[str]:
        return frozenset().union(*(c.free_vars() for c in self.children()))

    def children(self) -> tuple["Expr", ...]:
        return ()

    def subst(self, m: Mapping[str, "Expr"]) -> "Expr":
        raise NotImplementedError

    def render(self, prec: int = 0) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.render()


def _wrap(text: str, mine: int, outer: int) -> str:
    return f"({text})" if mine < outer else text


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: Value

    def ev(self, env):
        return self.value

    def free_vars(self):
        return frozenset()

    def subst(self, m):
        return self

    def render(self, prec=0):
        text = fmt(self.value)
        return f"({text})" if text.startswith("-") and prec > P_ADD else text


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str

    def ev(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise EvalError(f"undefined variable {self.name!r}") from None

    def free_vars(self):
        return frozenset((self.name,))

    def subst(self, m):
        return m.get(self.name, self)

    def render(self, prec=0):
        return self.name


@dataclass(frozen=True, slots=True)
class Sym(Expr):
    """Named constant (``Y``, ``kappa_o``...) bound at evaluation time."""

    name: str

    def ev(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise EvalError(f"unbound symbol {self.name!r}") from None

    def free_vars(self):
        return frozenset()

    def subst(self, m):
        return self

    def render(self, prec=0):
        return self.name


@dataclass(frozen=True, slots=True)
class BoolLit(Expr):
    value: bool

    def ev(self, env):
        return self.value

    def free_vars(self):
        return frozenset()

    def subst(self, m):
        return self

    def render(self, prec=0):
        return "true" if self.value else "false"


@dataclass(frozen=True, slots=True)
class Unknown(Expr):
    """Three-valued 'unknown': marks a loop unrolling that ran out."""

    def ev(self, env):
        return None

    def free_vars(self):
        return frozenset()

    def subst(self, m):
        return self

    def render(self, prec=0):
        return "unknown"


TRUE, FALSE, UNKNOWN = BoolLit(True), BoolLit(False), Unknown()


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr

    def ev(self, env):
        return -self.arg.ev(env)

    def children(self):
        return (self.arg,)

    def subst(self, m):
        return Neg(self.arg.subst(m))

    def render(self, prec=0):
        inner = self.arg.render(P_UNARY)
        if isinstance(self.arg, Num):
            inner = f"({inner})"
        return _wrap("-" + inner, P_UNARY, prec)


_ARITH: dict[str, Callable] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def ev(self, env):
        a, b = self.left.ev(env), self.right.ev(env)
        if self.op == "/":
            if b == 0:
                raise EvalError(f"division by zero in {self.render()}")
            return a / b
        return _ARITH[self.op](a, b)

    def children(self):
        return (self.left, self.right)

    def subst(self, m):
        return BinOp(self.op, self.left.subst(m), self.right.subst(m))

    def render(self, prec=0):
        mine = P_ADD if self.op in "+-" else P_MUL
        text = f"{self.left.render(mine)} {self.op} {self.right.render(mine + 1)}"
        return _wrap(text, mine, prec)


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exp: int

    def ev(self, env):
        b = self.base.ev(env)
        if self.exp < 0 and b == 0:
            raise EvalError(f"zero to a negative power in {self.render()}")
        return b**self.exp

    def children(self):
        return (self.base,)

    def subst(self, m):
        return Pow(self.base.subst(m), self.exp)

    def render(self, prec=0):
        exp = str(self.exp) if self.exp >= 0 else f"({self.exp})"
        return _wrap(f"{self.base.render(P_POW + 1)}^{exp}", P_POW, prec)


_CALLS: dict[str, Callable] = {"abs": abs, "min": min, "max": max}


@dataclass(frozen=True, slots=True)
class Call(Expr):
    fn: str
    args: tuple[Expr, ...]

    def ev(self, env):
        return _CALLS[self.fn](*(a.ev(env) for a in self.args))

    def children(self):
        return self.args

    def subst(self, m):
        return Call(self.fn, tuple(a.subst(m) for a in self.args))

    def render(self, prec=0):
        return f"{self.fn}({', '.join(a.render() for a in self.args)})"


_CMP: dict[str, Callable] = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True, slots=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr

    def ev(self, env):
        return _CMP[self.op](self.left.ev(env), self.right.ev(env))

    def children(self):
        return (self.left, self.right)

    def subst(self, m):
        return Cmp(self.op, self.left.subst(m), self.right.subst(m))

    def render(self, prec=0):
        return _wrap(f"{self.left.render(P_ADD)} {self.op} {self.right.render(P_ADD)}", P_CMP, prec)


@dataclass(frozen=True, slots=True)
class InInterval(Expr):
    arg: Expr
    lo: Expr
    hi: Expr
    lo_closed: bool = True
    hi_closed: bool = True

    def ev(self, env):
        x, lo, hi = self.arg.ev(env), self.lo.ev(env), self.hi.ev(env)
        above = x >= lo if self.lo_closed else x > lo
        below = x <= hi if self.hi_closed else x < hi
        return above and below

    def children(self):
        return (self.arg, self.lo, self.hi)

    def subst(self, m):
        return InInterval(self.arg.subst(m), self.lo.subst(m), self.hi.subst(m), self.lo_closed, self.hi_closed)

    def render(self, prec=0):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        text = f"{self.arg.render(P_ADD)} in {left}{self.lo.render(P_ADD)}, {self.hi.render(P_ADD)}{right}"
        return _wrap(text, P_CMP, prec)


@dataclass(frozen=True, slots=True)
class Not(Expr):
    arg: Expr

    def ev(self, env):
        v = self.arg.ev(env)
        return None if v is None else not v

    def children(self):
        return (self.arg,)

    def subst(self, m):
        return Not(self.arg.subst(m))

    def render(self, prec=0):
        return _wrap("!" + self.arg.render(P_NOT), P_NOT, prec)


@dataclass(frozen=True, slots=True)
class And(Expr):
    left: Expr
    right: Expr

    def ev(self, env):
        a = self.left.ev(env)
        if a is False:
            return False
        b = self.right.ev(env)
        if b is False:
            return False
        return None if a is None or b is None else True

    def children(self):
        return (self.left, self.right)

    def subst(self, m):
        return And(self.left.subst(m), self.right.subst(m))

    def render(self, prec=0):
        return _wrap(f"{self.left.render(P_AND)} && {self.right.render(P_AND + 1)}", P_AND, prec)


@dataclass(frozen=True, slots=True)
class Or(Expr):
    left: Expr
    right: Expr

    def ev(self, env):
        a = self.left.ev(env)
        if a is True:
            return True
        b = self.right.ev(env)
        if b is True:
            return True
        return None if a is None or b is None else False

    def children(self):
        return (self.left, self.right)

    def subst(self, m):
        return Or(self.left.subst(m), self.right.subst(m))

    def render(self, prec=0):
        return _wrap(f"{self.left.render(P_OR)} || {self.right.render(P_OR + 1)}", P_OR, prec)


@dataclass(frozen=True, slots=True)
class Implies(Expr):
    left: Expr
    right: Expr

    def ev(self, env):
        a = self.left.ev(env)
        if a is False:
            return True
        b = self.right.ev(env)
        if b is True:
            return True
        return None if a is None or b is None else False

    def children(self):
        return (self.left, self.right)

    def subst(self, m):
        return Implies(self.left.subst(m), self.right.subst(m))

    def render(self, prec=0):
        return _wrap(f"{self.left.render(P_IMP + 1)} => {self.right.render(P_IMP)}", P_IMP, prec)


def snap_value(x: Value, grid: Grid | None) -> Value:
    if grid is None or is_inf(x):
        return x
    return grid.snap(x)


@dataclass(frozen=True, slots=True)
class Snap(Expr):
    """Value of ``arg`` moved to the nearest point of ``grid``."""

    arg: Expr
    grid: Grid

    def ev(self, env):
        return self.grid.snap(self.arg.ev(env))

    def children(self):
        return (self.arg,)

    def subst(self, m):
        return Snap(self.arg.subst(m), self.grid)

    def render(self, prec=0):
        return f"snap[{self.grid.bracket()}]({self.arg.render()})"


@dataclass(frozen=True, slots=True)
class DistTerm(Expr):
    """``name(left, right)`` evaluated with a contract distance."""

    name: str
    dist: object = field(compare=False)
    left: tuple[Expr, ...] = ()
    right: tuple[Expr, ...] = ()

    def ev(self, env):
        a = tuple(e.ev(env) for e in self.left)
        b = tuple(e.ev(env) for e in self.right)
        return self.dist(a, b)

    def children(self):
        return self.left + self.right

    def subst(self, m):
        return DistTerm(self.name, self.dist, tuple(e.subst(m) for e in self.left), tuple(e.subst(m) for e in self.right))

    def render(self, prec=0):
        a = ", ".join(e.render() for e in self.left)
        b = ", ".join(e.render() for e in self.right)
        if len(self.left) > 1:
            a, b = f"({a})", f"({b})"
        return f"{self.name}({a}, {b})"


@dataclass(frozen=True, slots=True)
class BoundTerm(Expr):
    """Contract bounding function applied to ``arg``."""

    name: str
    fn: object = field(compare=False)
    arg: Expr = None

    def ev(self, env):
        return self.fn(self.arg.ev(env))

    def children(self):
        return (self.arg,)

    def subst(self, m):
        return BoundTerm(self.name, self.fn, self.arg.subst(m))

    def render(self, prec=0):
        return f"{self.name}({self.arg.render()})"


# smart constructors with constant folding; the wp engine leans on these to
# keep formulas readable


def conj(*parts: Expr) -> Expr:
    out = TRUE
    for p in parts:
        if p == FALSE or out == FALSE:
            return FALSE
        if p == TRUE:
            continue
        out = p if out == TRUE else And(out, p)
    return out


def disj(*parts: Expr) -> Expr:
    out = FALSE
    for p in parts:
        if p == TRUE or out == TRUE:
            return TRUE
        if p == FALSE:
            continue
        out = p if out == FALSE else Or(out, p)
    return out


def neg(p: Expr) -> Expr:
    if isinstance(p, BoolLit):
        return BoolLit(not p.value)
    if isinstance(p, Not):
        return p.arg
    return Not(p)


def implies(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    if b == FALSE:
        return neg(a)
    return Implies(a, b)


# --- statements -------------------------------------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Stmt):
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Assign(Stmt):
    var: str
    expr: Expr
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class NondetAssign(Stmt):
    var: str
    lo: Expr
    hi: Expr
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt

    @staticmethod
    def of(*stmts: Stmt) -> Stmt:
        """Right-nested sequence; a lone statement is returned as is."""
        flat: list[Stmt] = []
        for s in stmts:
            flat.extend(s.flatten() if isinstance(s, Seq) else [s])
        if not flat:
            return Skip()
        out = flat[-1]
        for s in reversed(flat[:-1]):
            out = Seq(s, out)
        return out

    def flatten(self) -> list[Stmt]:
        out: list[Stmt] = []
        node: Stmt = self
        while isinstance(node, Seq):
            out.extend(node.first.flatten() if isinstance(node.first, Seq) else [node.first])
            node = node.second
        out.append(node)
        return out


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    else_: Stmt
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Stmt
    pos: tuple[int, int] | None = field(default=None, compare=False)


def stmt_children(s: Stmt) -> tuple[Stmt, ...]:
    if isinstance(s, Seq):
        return (s.first, s.second)
    if isinstance(s, If):
        return (s.then, s.else_)
    if isinstance(s, While):
        return (s.body,)
    return ()


def walk(s: Stmt):
    yield s
    for c in stmt_children(s):
        yield from walk(c)


def stmt_exprs(s: Stmt) -> tuple[Expr, ...]:
    if isinstance(s, Assign):
        return (s.expr,)
    if isinstance(s, NondetAssign):
        return (s.lo, s.hi)
    if isinstance(s, (If, While)):
        return (s.cond,)
    return ()


def assigned_vars(s: Stmt) -> set[str]:
    return {n.var for n in walk(s) if isinstance(n, (Assign, NondetAssign))}


def rename_stmt(s: Stmt, ren: Mapping[str, str]) -> Stmt:
    m = {k: Var(v) for k, v in ren.items()}
    if isinstance(s, Assign):
        return Assign(ren.get(s.var, s.var), s.expr.subst(m), s.pos)
    if isinstance(s, NondetAssign):
        return NondetAssign(ren.get(s.var, s.var), s.lo.subst(m), s.hi.subst(m), s.pos)
    if isinstance(s, Seq):
        return Seq(rename_stmt(s.first, ren), rename_stmt(s.second, ren))
    if isinstance(s, If):
        return If(s.cond.subst(m), rename_stmt(s.then, ren), rename_stmt(s.else_, ren), s.pos)
    if isinstance(s, While):
        return While(s.cond.subst(m), rename_stmt(s.body, ren), s.pos)
    return s


ROLES = ("param", "input", "output", "var")


@dataclass(frozen=True)
class Decl:
    name: str
    role: str
    grid: Grid | None = None
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Program:
    """Declarations plus a body.  Locals and outputs start at 0."""

    decls: tuple[Decl, ...]
    body: Stmt
    consts: tuple[tuple[str, Fraction], ...] = ()

    def by_role(self, role: str) -> tuple[Decl, ...]:
        return tuple(d for d in self.decls if d.role == role)

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.by_role("param"))

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.by_role("input"))

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.by_role("output"))

    @property
    def locals(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.by_role("var"))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.decls)

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def grid(self, name: str) -> Grid | None:
        return self.decl(name).grid

    @property
    def deterministic(self) -> bool:
        return not any(isinstance(n, NondetAssign) for n in walk(self.body))

    @property
    def loop_free(self) -> bool:
        return not any(isinstance(n, While) for n in walk(self.body))


def is_finite_number(x) -> bool:
    return not (isinstance(x, float) and (math.isinf(x) or math.isnan(x)))


@dataclass(frozen=True, slots=True)
class Let(Expr):
    """Delayed substitution ``body[expr/var]``.

    The wp engine uses it under loops, where eager substitution would copy
    the postcondition once per branch and unrolling step.
    """

    var: str
    expr: Expr
    body: Expr

    def ev(self, env):
        inner = dict(env)
        inner[self.var] = self.expr.ev(env)
        return self.body.ev(inner)

    def free_vars(self):
        return (self.body.free_vars() - {self.var}) | self.expr.free_vars()

    def children(self):
        return (self.expr, self.body)

    def subst(self, m):
        raise TypeError("substitute into the expanded formula instead")

    def render(self, prec=0):
        return f"({self.body.render()})[{self.expr.render()}/{self.var}]"
