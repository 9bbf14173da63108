"""Weakest preconditions, self-composition and grid validity checking.

``wp`` follows the textbook equations for assignment, conditional and
sequence.  A loop is unrolled ``unroll`` times: the last unrolling leaves an
``unknown`` leaf where the guard still holds, so evaluating the result in
three-valued logic yields true/false exactly when the loop exits in time and
``None`` otherwise.

Verification conditions are decided by evaluating them on every point of the
parameter/input grids of both program copies.  Locals and outputs start at 0,
as in the evaluator.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .contracts import Contract
from .seqlang.ast import (
    FALSE,
    TRUE,
    UNKNOWN,
    And,
    Assign,
    BoundTerm,
    Cmp,
    DistTerm,
    EvalError,
    Expr,
    If,
    Let,
    NondetAssign,
    Num,
    Program,
    Seq,
    Skip,
    Snap,
    Stmt,
    Sym,
    Var,
    While,
    conj,
    disj,
    implies,
    neg,
    rename_stmt,
    walk,
)
from .seqlang.parser import parse_expr
from .values import Grid, Value, fmt, is_inf
from .verdict import Verdict, clean, doped, unknown

DEFAULT_UNROLL = 64


class UnsupportedConstruct(Exception):
    pass


def substitute(q: Expr, var: str, e: Expr) -> Expr:
    """``q[e/var]``.  Predicates have no binders, so nothing can be captured."""
    return q.subst({var: e})


def _has_loop(s: Stmt) -> bool:
    return any(isinstance(n, While) for n in walk(s))


def wp(s: Stmt, q: Expr, unroll: int = DEFAULT_UNROLL, grids: Mapping[str, Grid | None] | None = None,
       lazy: bool | None = None) -> Expr:
    """Weakest precondition of ``s`` for postcondition ``q``.

    ``grids`` maps variables to their domains; assignments to a variable with
    a domain substitute the snapped value, mirroring the evaluator.  With
    ``lazy`` (the default for programs with loops) substitutions are kept as
    ``Let`` nodes so shared subformulas stay shared.
    """
    grids = grids or {}
    if lazy is None:
        lazy = _has_loop(s)
    if unroll < 0:
        raise ValueError("unroll bound must be nonnegative")

    def go(s: Stmt, q: Expr) -> Expr:
        if isinstance(s, Skip):
            return q
        if isinstance(s, Assign):
            g = grids.get(s.var)
            e = Snap(s.expr, g) if g is not None else s.expr
            if q in (TRUE, FALSE):
                return q
            return Let(s.var, e, q) if lazy else substitute(q, s.var, e)
        if isinstance(s, Seq):
            return go(s.first, go(s.second, q))
        if isinstance(s, If):
            return conj(implies(s.cond, go(s.then, q)), implies(neg(s.cond), go(s.else_, q)))
        if isinstance(s, While):
            exit_q = conj(neg(s.cond), q)
            h = disj(exit_q, conj(s.cond, UNKNOWN))
            for _ in range(unroll):
                h = disj(conj(s.cond, go(s.body, h)), exit_q)
            return h
        if isinstance(s, NondetAssign):
            raise UnsupportedConstruct(
                f"nondeterministic assignment to {s.var!r} is outside the deterministic fragment handled by wp"
            )
        raise TypeError(f"unknown statement {s!r}")

    return go(s, q)


# --- self-composition ------------------------------------------------------


@dataclass(frozen=True)
class SelfComposition:
    """A program next to a copy whose variables are all primed."""

    prog: Program
    renaming: tuple[tuple[str, str], ...]
    copy: Stmt

    @classmethod
    def of(cls, prog: Program) -> "SelfComposition":
        taken = set(prog.names) | {n for n, _ in prog.consts}
        ren = {}
        for n in prog.names:
            fresh = n + "'"
            while fresh in taken:
                fresh += "'"
            taken.add(fresh)
            ren[n] = fresh
        return cls(prog, tuple(ren.items()), rename_stmt(prog.body, ren))

    @property
    def ren(self) -> dict[str, str]:
        return dict(self.renaming)

    def primed(self, names: Iterable[str]) -> tuple[str, ...]:
        r = self.ren
        return tuple(r[n] for n in names)

    def prime(self, e: Expr) -> Expr:
        return e.subst({k: Var(v) for k, v in self.renaming})

    @property
    def grids(self) -> dict[str, Grid | None]:
        g = {d.name: d.grid for d in self.prog.decls}
        g.update({self.ren[d.name]: d.grid for d in self.prog.decls})
        return g

    @property
    def composed(self) -> Stmt:
        return Seq(self.prog.body, self.copy)

    @property
    def reversed(self) -> Stmt:
        return Seq(self.copy, self.prog.body)


def _vars(names) -> tuple[Expr, ...]:
    return tuple(Var(n) for n in names)


def _pred(text, prog: Program) -> Expr:
    if text is None or str(text).strip() in ("", "true"):
        return TRUE
    return parse_expr(str(text), dict(prog.consts))


def _pintrs(c: Contract, prog: Program) -> Expr:
    if isinstance(c.pintrs, tuple):
        return disj(*(conj(*(Cmp("==", Var(k), Num(v)) for k, v in row)) for row in c.pintrs))
    return _pred(c.pintrs, prog)


@dataclass(frozen=True)
class VC:
    """A named verification condition with the symbol values it needs."""

    label: str
    formula: Expr
    symbols: tuple[tuple[str, Value], ...] = ()

    def render(self) -> str:
        head = ", ".join(f"{k} = {fmt(v)}" for k, v in self.symbols)
        return (f"# {self.label}" + (f"  [{head}]" if head else "") + "\n" + self.formula.render() + "\n")


def _copies(prog: Program):
    sc = SelfComposition.of(prog)
    xi, xi2 = _vars(prog.inputs), _vars(sc.primed(prog.inputs))
    xo, xo2 = _vars(prog.outputs), _vars(sc.primed(prog.outputs))
    return sc, xi, xi2, xo, xo2


def _check_det(prog: Program):
    if not prog.deterministic:
        raise UnsupportedConstruct("wp-based checking needs a deterministic program (no ':in' statements)")


def vc_clean(prog: Program, c: Contract, unroll: int = DEFAULT_UNROLL) -> VC:
    _check_det(prog)
    sc, xi, xi2, xo, xo2 = _copies(prog)
    pre = conj(_pintrs(c, prog), _pred(c.stdin, prog))
    same_in = conj(*(Cmp("==", a, b) for a, b in zip(xi, xi2)))
    same_out = conj(*(Cmp("==", a, b) for a, b in zip(xo, xo2)))
    g = sc.grids
    ante = conj(pre, sc.prime(pre), same_in, wp(prog.body, TRUE, unroll, g))
    return VC("clean", implies(ante, wp(sc.composed, same_out, unroll, g)))


def _two_sided(prog: Program, c: Contract, closeness: Expr, bound: Expr, unroll: int, label: str, symbols) -> VC:
    sc, xi, xi2, xo, xo2 = _copies(prog)
    g = sc.grids
    dout = Cmp("<=", DistTerm("d_out", c.d_out, xo, xo2), bound)
    pre = conj(_pintrs(c, prog), _pred(c.stdin, prog), sc.prime(_pintrs(c, prog)), closeness)
    first = implies(wp(prog.body, TRUE, unroll, g), wp(sc.composed, dout, unroll, g))
    second = implies(wp(sc.copy, TRUE, unroll, g), wp(sc.reversed, dout, unroll, g))
    return VC(label, implies(pre, conj(first, second)), symbols)


def vc_robustly_clean(prog: Program, c: Contract, unroll: int = DEFAULT_UNROLL) -> tuple[VC, VC]:
    """The two conjuncts (one per composition order) as separate conditions."""
    _check_det(prog)
    sc, xi, xi2, xo, xo2 = _copies(prog)
    g = sc.grids
    close = Cmp("<=", DistTerm("d_in", c.d_in, xi, xi2), Sym("kappa_i"))
    dout = Cmp("<=", DistTerm("d_out", c.d_out, xo, xo2), Sym("kappa_o"))
    pre = conj(_pintrs(c, prog), _pred(c.stdin, prog), sc.prime(_pintrs(c, prog)), close)
    syms = (("kappa_i", c.kappa_in), ("kappa_o", c.kappa_out))
    first = implies(pre, implies(wp(prog.body, TRUE, unroll, g), wp(sc.composed, dout, unroll, g)))
    second = implies(pre, implies(wp(sc.copy, TRUE, unroll, g), wp(sc.reversed, dout, unroll, g)))
    return VC("robust/1", first, syms), VC("robust/2", second, syms)


def realized_input_distances(prog: Program, c: Contract) -> list[Value]:
    pts = [tuple(combo) for combo in itertools.product(*(prog.grid(n).points for n in prog.inputs))]
    return sorted({c.d_in(a, b) for a in pts for b in pts})


def vc_f_clean(prog: Program, c: Contract, unroll: int = DEFAULT_UNROLL) -> list[VC]:
    """One condition per value ``Y`` in the image of ``f`` over realised input distances."""
    _check_det(prog)
    f = c.bound()
    sc, xi, xi2, xo, xo2 = _copies(prog)
    ys = sorted(set(f(d) for d in realized_input_distances(prog, c)))
    fy = Cmp("==", BoundTerm("f", f, DistTerm("d_in", c.d_in, xi, xi2)), Sym("Y"))
    out = []
    for y in ys:
        if is_inf(y):
            continue  # an infinite bound is always met
        out.append(_two_sided(prog, c, fy, Sym("Y"), unroll, f"fclean[Y={fmt(y)}]", (("Y", y),)))
    return out


# --- validity ----------------------------------------------------------------


@dataclass
class Validity:
    status: str  # valid | counterexample | unknown
    state: dict | None = None
    states: list = field(default_factory=list)
    checked: int = 0


def check_validity(q: Expr, domain: Mapping[str, Iterable[Value]], fixed: Mapping[str, Value] | None = None,
                   collect: bool = False) -> Validity:
    """Evaluate ``q`` on every point of ``domain`` (in the given variable order).

    A run-time error (such as division by zero on a reachable path) is
    raised as ``EvalError`` naming the state, not reported as unknown.
    """
    names = list(domain)
    pools = [list(domain[n]) for n in names]
    base = dict(fixed or {})
    first_unknown = None
    found: list[dict] = []
    checked = 0
    for combo in itertools.product(*pools):
        env = dict(base)
        env.update(zip(names, combo))
        checked += 1
        try:
            v = q.ev(env)
        except EvalError as exc:
            at = ", ".join(f"{n}={fmt(x)}" for n, x in zip(names, combo))
            raise EvalError(f"{exc} (at {at})") from None
        if v is None:
            if first_unknown is None:
                first_unknown = dict(zip(names, combo))
            continue
        if not v:
            found.append(dict(zip(names, combo)))
            if not collect:
                break
    if found:
        return Validity("counterexample", found[0], found, checked)
    if first_unknown is not None:
        return Validity("unknown", first_unknown, [], checked)
    return Validity("valid", None, [], checked)


def vc_domain(prog: Program) -> tuple[dict, dict]:
    """Enumeration domain (params and inputs of both copies) and fixed values."""
    sc = SelfComposition.of(prog)
    ren = sc.ren
    domain: dict = {}
    for names in (prog.params, prog.inputs):
        for n in names:
            domain[n] = prog.grid(n).points
    for names in (prog.params, prog.inputs):
        for n in names:
            domain[ren[n]] = prog.grid(n).points
    fixed: dict = dict(prog.consts)
    for n in prog.outputs + prog.locals:
        fixed[n] = Fraction(0)
        fixed[ren[n]] = Fraction(0)
    return domain, fixed


def check_vcs(prog: Program, vcs: list[VC], collect: bool = False) -> Verdict:
    t0 = time.perf_counter()
    domain, fixed = vc_domain(prog)
    cex: list[dict] = []
    first_unknown = None
    checked = 0
    for vc in vcs:
        res = check_validity(vc.formula, domain, {**fixed, **dict(vc.symbols)}, collect)
        checked += res.checked
        if res.status == "counterexample":
            for s in res.states:
                cex.append({"condition": vc.label, **dict(vc.symbols), **s})
            if not collect:
                break
        elif res.status == "unknown" and first_unknown is None:
            first_unknown = {"condition": vc.label, **res.state}
    stats = {"conditions": len(vcs), "states": checked, "seconds": round(time.perf_counter() - t0, 6)}
    if cex:
        return doped(cex[0], cex, **stats)
    if first_unknown is not None:
        return unknown("loop unrolling bound reached", first_unknown, **stats)
    return clean(**stats)


def build_vcs(prog: Program, c: Contract, prop: str, unroll: int = DEFAULT_UNROLL) -> list[VC]:
    if prop == "clean":
        return [vc_clean(prog, c, unroll)]
    if prop == "robust":
        return list(vc_robustly_clean(prog, c, unroll))
    if prop == "fclean":
        return vc_f_clean(prog, c, unroll)
    raise ValueError(f"unknown property {prop!r}")


def check_wp(prog: Program, c: Contract, prop: str, unroll: int = DEFAULT_UNROLL, collect: bool = False) -> Verdict:
    return check_vcs(prog, build_vcs(prog, c, prop, unroll), collect)
