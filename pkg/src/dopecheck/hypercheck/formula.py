"""Trace-quantified formulas over a transition system and a contract.

Bodies are LTL formulas whose atoms carry a :class:`Cmp` payload: a
comparison between the decoded parameter/input/output parts of one or
two quantified traces.  :class:`ModelView` tabulates everything the
checkers need (value ids per state, distance tables, StdIn letters) so that
atoms can be evaluated both on single state tuples and vectorised over
whole state spaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from ..contracts import Contract, ContractError, Distance
from ..reactive.ltl import (
    FALSE, LTL, TRUE, And, Atom, Const, Globally, Monitor, Next, Not, Or, WeakUntil, Until, Finally,
    G, W, evaluate_lasso, implies, is_state_formula, land, lnot, lor, parse_ltl,
)
from ..reactive.ts import Lasso, TransitionSystem
from ..seqlang.ast import EvalError, Expr
from ..seqlang.parser import parse_expr
from ..values import INF, Value, fmt, is_inf



# --- atoms ----------------------------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    """Comparison atom.

    ``kind``:

    * ``eq`` -- ``role`` parts of traces ``u`` and ``v`` are equal;
    * ``din_le`` / ``din_gt`` -- input distance of ``u`` and ``v`` at most /
      above ``kappa_in``;
    * ``dout_le`` -- output distance at most ``kappa_out``;
    * ``fbound`` -- output distance at most ``f`` of the input distance;
    * ``pred`` -- state predicate ``expr`` (over signals) on trace ``u``;
    * ``is`` -- the ``role`` part of ``u`` equals ``value``;
    * ``prop`` -- proposition ``text`` holds on ``u``;
    * ``pintrs`` -- the parameter of ``u`` is of interest.
    """

    kind: str
    u: str
    v: str | None = None
    role: str | None = None
    expr: Expr | None = field(default=None, compare=False)
    text: str | None = None
    value: object = None

    def render(self) -> str:
        u, v = self.u, self.v
        if self.kind == "eq":
            return f"{self.role}_{u} = {self.role}_{v}"
        if self.kind == "din_le":
            return f"d_in(i_{u}, i_{v}) <= kappa_i"
        if self.kind == "din_gt":
            return f"d_in(i_{u}, i_{v}) > kappa_i"
        if self.kind == "dout_le":
            return f"d_out(o_{u}, o_{v}) <= kappa_o"
        if self.kind == "fbound":
            return f"d_out(o_{u}, o_{v}) <= f(d_in(i_{u}, i_{v}))"
        if self.kind == "pred":
            return f"({self.text})_{u}"
        if self.kind == "is":
            shown = ", ".join(fmt(x) for x in self.value) if isinstance(self.value, tuple) else str(self.value)
            return f"{self.role}_{u} = {shown}"
        if self.kind == "prop":
            return f"{self.text}_{u}"
        if self.kind == "pintrs":
            return f"PIntrs_{u}"
        raise ValueError(self.kind)

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.u,) if self.v is None else (self.u, self.v)


def atom(kind: str, u: str, v: str | None = None, **kw) -> Atom:
    c = Cmp(kind, u, v, **kw)
    return Atom(c.render(), c)


def eq(role, u, v):
    return atom("eq", u, v, role=role)


def dout_le(u, v):
    return atom("dout_le", u, v)


def din_gt(u, v):
    return atom("din_gt", u, v)


def din_le(u, v):
    return atom("din_le", u, v)


def fbound(u, v):
    return atom("fbound", u, v)


def is_value(role: str, u: str, value) -> Atom:
    return atom("is", u, role=role, value=value)


def map_atoms(f: LTL, fn) -> LTL:
    """Rebuild ``f`` with every atom replaced by ``fn(atom)``."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return lnot(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return land(*(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return lor(*(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Next):
        return Next(map_atoms(f.arg, fn))
    if isinstance(f, Globally):
        return G(map_atoms(f.arg, fn))
    if isinstance(f, Finally):
        return Finally(map_atoms(f.arg, fn))
    if isinstance(f, Until):
        return Until(map_atoms(f.left, fn), map_atoms(f.right, fn))
    if isinstance(f, WeakUntil):
        return W(map_atoms(f.left, fn), map_atoms(f.right, fn))
    raise TypeError(f)


def indexed(f: LTL, var: str) -> LTL:
    """``f`` over plain state predicates, relativised to trace ``var``."""
    def fn(a: Atom) -> Atom:
        if isinstance(a.payload, Cmp):
            raise ValueError("formula is already trace-indexed")
        if isinstance(a.payload, Expr):
            return atom("pred", var, expr=a.payload, text=a.name)
        return atom("prop", var, text=a.name)
    return map_atoms(f, fn)


def cmp_atoms(f: LTL) -> list[Cmp]:
    from ..reactive.ltl import atoms
    return [a.payload for a in atoms(f)]


# --- formulas --------------------------------------------------------------------


@dataclass(frozen=True)
class HyperFormula:
    prefix: tuple[tuple[str, str], ...]  # ("A"|"E", var)
    body: LTL
    label: str = ""

    def __post_init__(self):
        if len(self.prefix) > 3:
            raise ValueError("at most three trace quantifiers are supported")
        bound = {v for _, v in self.prefix}
        for c in cmp_atoms(self.body):
            missing = set(c.vars) - bound
            if missing:
                raise ValueError(f"trace variable {sorted(missing)[0]} is not quantified")

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.prefix)

    @property
    def quantifiers(self) -> str:
        return "".join(q for q, _ in self.prefix)

    def render(self) -> str:
        q = " ".join(("forall " if k == "A" else "exists ") + v for k, v in self.prefix)
        return f"{q}. {self.body}"

    __str__ = render


# --- model view ----------------------------------------------------------------


def reactive_stdin(c: Contract) -> LTL:
    """StdIn as an LTL formula; a plain state predicate means ``G`` of it."""
    f = parse_ltl(c.stdin) if c.stdin and c.stdin.strip() != "true" else TRUE
    if f != TRUE and is_state_formula(f):
        f = G(f)
    return f


class ModelView:
    """Per-state tables of a transition system under a contract."""

    def __init__(self, ts: TransitionSystem, contract: Contract):
        self.ts = ts
        self.contract = contract
        self.n = ts.n
        self.succ = ts.succ
        self.S = np.zeros((ts.n, ts.n), dtype=bool)
        for s, ts_ in enumerate(ts.succ):
            self.S[s, list(ts_)] = True
        self.init = np.zeros(ts.n, dtype=bool)
        self.init[list(ts.init)] = True
        self.values: dict[str, list] = {}
        self.ids: dict[str, np.ndarray] = {}
        for role in "pio":
            vals = [ts.value(s, role) for s in range(ts.n)]
            distinct = sorted(set(vals), key=_sort_key)
            index = {v: k for k, v in enumerate(distinct)}
            self.values[role] = distinct
            self.ids[role] = np.array([index[v] for v in vals], dtype=np.int64)
        self.env = [ts.decode(ts.labels[s]) for s in range(ts.n)]
        self.stdin = reactive_stdin(contract)
        self.pintrs_expr = parse_expr(contract.pintrs) if isinstance(contract.pintrs, str) else None

    # -- contract pieces ---------------------------------------------------------
    @property
    def d_in(self) -> Distance:
        d = self.contract.d_in
        return d.point if d.kind != "dnew" else d.base.point

    @property
    def d_out(self) -> Distance:
        return self.contract.d_out.point

    @cached_property
    def din_table(self) -> list[list[Value]]:
        vals = self.values["i"]
        return [[self.d_in(_num(a), _num(b)) for b in vals] for a in vals]

    @cached_property
    def dout_table(self) -> list[list[Value]]:
        vals = self.values["o"]
        return [[self.d_out(_num(a), _num(b)) for b in vals] for a in vals]

    @cached_property
    def din_le_arr(self) -> np.ndarray:
        k = self.contract.kappa_in
        return np.array([[d <= k for d in row] for row in self.din_table], dtype=bool).reshape(
            len(self.values["i"]), len(self.values["i"]))

    @cached_property
    def dout_le_arr(self) -> np.ndarray:
        k = self.contract.kappa_out
        return np.array([[d <= k for d in row] for row in self.dout_table], dtype=bool).reshape(
            len(self.values["o"]), len(self.values["o"]))

    @cached_property
    def _scaled(self):
        """Exact integer images of the output distances and of the f-limits.

        Every finite value is multiplied by a common denominator; infinity
        becomes a sentinel above every finite value.
        """
        f = self.contract.bound()
        lims = [[f(d) for d in row] for row in self.din_table]
        finite = [x for row in self.dout_table + lims for x in row if not is_inf(x)]
        den = 1
        for x in finite:
            den = math.lcm(den, Fraction(x).denominator)
        top = max((abs(x) * den for x in finite), default=0) + 1

        def scale(x, inf):
            return inf if is_inf(x) else int(Fraction(x) * den)
        dtype = np.int64 if top < 2 ** 60 else object
        dout = np.array([[scale(d, top + 1) for d in row] for row in self.dout_table], dtype=dtype)
        lim = np.array([[scale(x, top + 2) for x in row] for row in lims], dtype=dtype)
        return dout.reshape(len(self.values["o"]), -1), lim.reshape(len(self.values["i"]), -1)

    def fbound_ok(self, ia, ib, oa, ob):
        """d_out(oa, ob) <= f(d_in(ia, ib)) on value ids (scalars or arrays)."""
        dout, lim = self._scaled
        return dout[oa, ob] <= lim[ia, ib]

    def pintrs(self, s: int) -> bool:
        c = self.contract.pintrs
        if c is None:
            return True
        if isinstance(c, tuple):
            sigs = self.ts.signals_of("p")
            row = tuple(sorted((sig.name, sig.decode(self.ts.labels[s])) for sig in sigs))
            return row in c
        return self._pred(self.pintrs_expr, s)

    def _pred(self, expr: Expr, s: int) -> bool:
        try:
            v = expr.ev(self.env[s])
        except (EvalError, KeyError, ZeroDivisionError) as exc:
            raise ContractError(f"cannot evaluate {expr.render()} on state {s}: {exc}") from exc
        if v is None:
            raise ContractError(f"{expr.render()} is undetermined on state {s}")
        return bool(v)

    @cached_property
    def pintrs_vec(self) -> np.ndarray:
        return np.array([self.pintrs(s) for s in range(self.n)], dtype=bool)

    # -- StdIn monitor over single states ------------------------------------------
    @cached_property
    def std_monitor(self) -> Monitor:
        return Monitor(self.stdin)

    def std_letter(self, s: int) -> frozenset:
        return self._std_letters[s]

    @cached_property
    def _std_letters(self) -> list[frozenset]:
        from ..reactive.ltl import atoms
        ats = atoms(self.stdin)
        out = []
        for s in range(self.n):
            out.append(frozenset(a.name for a in ats if self._atom_plain(a, s)))
        return out

    def _atom_plain(self, a: Atom, s: int) -> bool:
        if isinstance(a.payload, Expr):
            return self._pred(a.payload, s)
        return a.name in self.ts.labels[s]

    @cached_property
    def std_live(self) -> set:
        letters = sorted(set(self._std_letters), key=sorted)
        return self.std_monitor.live_states(letters)

    # -- atoms ---------------------------------------------------------------------
    def state_vector(self, c: Cmp) -> np.ndarray:
        """Single-trace atom as a boolean vector over states."""
        if c.kind == "pred":
            return np.array([self._pred(c.expr, s) for s in range(self.n)], dtype=bool)
        if c.kind == "prop":
            return np.array([c.text in self.ts.labels[s] for s in range(self.n)], dtype=bool)
        if c.kind == "pintrs":
            return self.pintrs_vec
        if c.kind == "is":
            vals = self.values[c.role]
            want = _as_value(c.value, vals)
            return np.array([vals[k] == want for k in self.ids[c.role]], dtype=bool)
        raise ValueError(c.kind)

    def pair_matrix(self, c: Cmp, su: np.ndarray, sv: np.ndarray) -> np.ndarray:
        """Two-trace atom on state index arrays ``su`` x ``sv``."""
        if c.kind == "eq":
            ids = self.ids[c.role]
            return ids[su][:, None] == ids[sv][None, :]
        ii, oi = self.ids["i"], self.ids["o"]
        if c.kind == "din_le":
            return self.din_le_arr[np.ix_(ii[su], ii[sv])]
        if c.kind == "din_gt":
            return ~self.din_le_arr[np.ix_(ii[su], ii[sv])]
        if c.kind == "dout_le":
            return self.dout_le_arr[np.ix_(oi[su], oi[sv])]
        if c.kind == "fbound":
            return self.fbound_ok(ii[su][:, None], ii[sv][None, :], oi[su][:, None], oi[sv][None, :]).astype(bool)
        raise ValueError(c.kind)

    def holds(self, c: Cmp, states: Mapping[str, int]) -> bool:
        """Atom on one state per trace variable."""
        if c.v is None:
            if c.kind == "pintrs":
                return bool(self.pintrs_vec[states[c.u]])
            if c.kind == "pred":
                return self._pred(c.expr, states[c.u])
            if c.kind == "prop":
                return c.text in self.ts.labels[states[c.u]]
            return bool(self.state_vector(c)[states[c.u]])
        a, b = states[c.u], states[c.v]
        return bool(self.pair_matrix(c, np.array([a]), np.array([b]))[0, 0])


def _num(v):
    """Distances act on signal tuples; a 1-tuple is its scalar."""
    if isinstance(v, tuple) and len(v) == 1:
        return v[0]
    return v


def _sort_key(v):
    if isinstance(v, frozenset):
        return (1, tuple(sorted(v)))
    return (0, v)


def _as_value(x, vals):
    if vals and isinstance(vals[0], tuple) and not isinstance(x, tuple):
        return (x,)
    return x


# --- the cleanness formulas ----------------------------------------------------------


PROPERTIES = ("clean", "robust", "fclean")


def _pintrs_atom(var: str) -> Atom:
    return atom("pintrs", var)


def cleanness_formulas(view: ModelView, prop: str) -> list[HyperFormula]:
    """The ∀∀∃ characterisations: one formula for clean, two otherwise."""
    pre = _premise(view)
    if prop == "clean":
        body = implies(pre, land(eq("p", "pi2", "pi2'"), G(land(eq("i", "pi1", "pi2'"), eq("o", "pi1", "pi2'")))))
        return [HyperFormula((("A", "pi1"), ("A", "pi2"), ("E", "pi2'")), body, "clean")]
    out = []
    for label, (anchor, wit, left, right) in {
        "1": ("pi2", "pi2'", "pi1", "pi2'"),
        "2": ("pi1", "pi1'", "pi1'", "pi2"),
    }.items():
        lock = land(eq("p", anchor, wit), G(eq("i", anchor, wit)))
        body = implies(pre, land(lock, _relation(prop, left, right)))
        prefix = (("A", "pi1"), ("A", "pi2"), ("E", wit))
        out.append(HyperFormula(prefix, body, f"{prop}/{label}"))
    return out


def _relation(prop: str, left: str, right: str) -> LTL:
    if prop == "robust":
        return W(dout_le(left, right), din_gt(left, right))
    if prop == "fclean":
        return G(fbound(left, right))
    raise ValueError(prop)


def _premise(view: ModelView) -> LTL:
    parts = [indexed(view.stdin, "pi1")]
    if view.contract.pintrs is not None:
        parts += [_pintrs_atom("pi1"), _pintrs_atom("pi2")]
    return land(*parts)


def strengthened_formula(view: ModelView, prop: str) -> HyperFormula:
    """Alternation-free strengthening: the witness trace is the second trace itself.

    For ``clean`` the literal substitution would demand equal inputs on all
    trace pairs; instead the input equality moves into the premise, which
    is sound for receptive models.
    """
    pre = _premise(view)
    if prop == "clean":
        body = implies(land(pre, G(eq("i", "pi1", "pi2"))), G(eq("o", "pi1", "pi2")))
    else:
        body = implies(pre, _relation(prop, "pi1", "pi2"))
    return HyperFormula((("A", "pi1"), ("A", "pi2")), body, f"{prop}/strengthened")


def negation_instance(view: ModelView, prop: str, a, b, orientation: str = "a") -> HyperFormula:
    """∀∀∀ instance refuting one ∀∀∃ formula at input values ``a`` and ``b``.

    Orientation ``a`` refutes the formula whose witness copies the second
    trace; ``b`` the symmetric one whose witness copies the first.
    """
    if prop not in ("robust", "fclean"):
        raise ValueError("negation instances exist for robust and fclean")
    pre = _premise(view)
    if orientation == "a":
        wit, anchor, left, right = "pi2'", "pi2", "pi1", "pi2'"
    elif orientation == "b":
        wit, anchor, left, right = "pi1'", "pi1", "pi1'", "pi2"
    else:
        raise ValueError("orientation is 'a' or 'b'")
    fix = G(land(is_value("i", "pi1", a), is_value("i", "pi2", b)))
    lock = land(eq("p", anchor, wit), G(eq("i", anchor, wit)))
    body = implies(fix, lnot(implies(pre, land(lock, _relation(prop, left, right)))))
    prefix = (("A", "pi1"), ("A", "pi2"), ("A", wit))
    return HyperFormula(prefix, body, f"{prop}/neg-{orientation}[a={fmt_value(a)},b={fmt_value(b)}]")


def guarantee_formula(a, b) -> HyperFormula:
    body = G(land(is_value("i", "pi1", a), is_value("i", "pi2", b)))
    return HyperFormula((("E", "pi1"), ("E", "pi2")), body, f"guarantee[a={fmt_value(a)},b={fmt_value(b)}]")


def fmt_value(x) -> str:
    if isinstance(x, tuple):
        return ",".join(fmt(v) for v in x)
    return fmt(x)


# --- evaluation on lassos -------------------------------------------------------------


def _val(view: ModelView, states_at):
    def val(a: Atom, pos: int) -> bool:
        c = a.payload
        return view.holds(c, {x: states_at(x, pos) for x in c.vars})
    return val


def eval_on_lassos(view: ModelView, body: LTL, runs: Mapping[str, Lasso], k: int = 0) -> bool:
    """Truth of ``body`` at position ``k`` of synchronised state lassos.

    All lassos in ``runs`` (lists of state ids) must share stem and loop
    lengths.
    """
    n, start = _shape(runs)
    return evaluate_lasso(body, n, start, _val(view, lambda x, p: runs[x][p]))[_norm(k, n, start)]


def eval_weak_until(view: ModelView, body: LTL, runs: Mapping[str, Lasso], k: int = 0) -> bool:
    """Like :func:`eval_on_lassos`, but every ``W`` is evaluated literally:
    for all ``m >= k``, if the release condition failed at every position
    ``k..m``, the left operand holds at ``m``.  On a lasso it suffices to
    look at ``m`` up to one full loop beyond the stem.
    """
    n, start = _shape(runs)
    val = _val(view, lambda x, p: runs[x][p])
    nxt = [i + 1 if i + 1 < n else start for i in range(n)]

    def at(f: LTL, pos: int) -> bool:
        if isinstance(f, Const):
            return f.value
        if isinstance(f, Atom):
            return val(f, pos)
        if isinstance(f, Not):
            return not at(f.arg, pos)
        if isinstance(f, And):
            return all(at(a, pos) for a in f.args)
        if isinstance(f, Or):
            return any(at(a, pos) for a in f.args)
        if isinstance(f, Next):
            return at(f.arg, nxt[pos])
        if isinstance(f, WeakUntil):
            m = pos
            for _ in range(n + 1):
                if at(f.right, m):
                    return True
                if not at(f.left, m):
                    return False
                m = nxt[m]
            return True
        # remaining temporal operators: reuse the fixpoint evaluator
        return evaluate_lasso(f, n, start, val)[pos]

    return at(body, _norm(k, n, start))


def _shape(runs: Mapping[str, Lasso]) -> tuple[int, int]:
    shapes = {(len(r.stem), len(r.loop)) for r in runs.values()}
    if len(shapes) != 1:
        raise ValueError("lassos must be synchronised")
    (stem, loop), = shapes
    return stem + loop, stem


def _norm(k: int, n: int, start: int) -> int:
    return k if k < n else start + (k - start) % (n - start)


# --- abbreviation expansion ----------------------------------------------------------------


def expand(view: ModelView, c: Cmp) -> LTL:
    """Rewrite a comparison atom into propositional atoms ``a_pi``.

    Each admissible value (pair) contributes the conjunction of its full
    bit pattern: set bits positively, cleared bits negatively.
    """
    ts = view.ts

    def letter(var: str, role: str, value) -> LTL:
        props = {"p": ts.ap_p, "i": ts.ap_i, "o": ts.ap_o}[role]
        sigs = ts.signals_of(role)
        if sigs:
            on = frozenset().union(*(s.encode(x) for s, x in zip(sigs, value)))
        else:
            on = value
        return land(*(atom("prop", var, text=a) if a in on else lnot(atom("prop", var, text=a)) for a in props))

    if c.kind == "eq":
        props = {"p": ts.ap_p, "i": ts.ap_i, "o": ts.ap_o}[c.role]
        return land(*(lor(land(atom("prop", c.u, text=a), atom("prop", c.v, text=a)),
                          land(lnot(atom("prop", c.u, text=a)), lnot(atom("prop", c.v, text=a))))
                      for a in props))
    if c.kind in ("din_le", "din_gt", "dout_le"):
        role = "o" if c.kind == "dout_le" else "i"
        table = view.dout_le_arr if role == "o" else view.din_le_arr
        vals = view.values[role]
        want = c.kind != "din_gt"
        return lor(*(land(letter(c.u, role, vals[x]), letter(c.v, role, vals[y]))
                     for x, y in product(range(len(vals)), repeat=2) if table[x, y] == want))
    if c.kind == "fbound":
        vi, vo = view.values["i"], view.values["o"]
        return lor(*(land(letter(c.u, "i", vi[a]), letter(c.v, "i", vi[b]),
                          letter(c.u, "o", vo[x]), letter(c.v, "o", vo[y]))
                     for a, b, x, y in product(range(len(vi)), range(len(vi)), range(len(vo)), range(len(vo)))
                     if view.fbound_ok(a, b, x, y)))
    raise ValueError(f"no expansion for {c.kind}")
