"""Synchronous k-fold products of one model, searched with boolean arrays.

A set of product states is a boolean array of shape ``(Q, n_1, ..., n_k)``:
one axis per trace copy plus the state of a deterministic monitor that
reads the joint letter of each position.  Successor images are tensor
contractions with each copy's successor matrix, so one breadth-first
layer costs a handful of matrix products regardless of how many states it
holds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..reactive.ltl import (
    FALSE, LTL, And, Atom, Const, Globally, Monitor, Not, Or, atoms, check_safety,
    is_state_formula, land,
)
from ..reactive.ts import Lasso
from .formula import Cmp, ModelView

DEFAULT_CELL_BUDGET = 60_000_000


class ProductTooLarge(RuntimeError):
    pass


# --- splitting a body into searchable cases ------------------------------------------


@dataclass(frozen=True)
class Case:
    """Paths on which every ``assume`` formula holds and every ``bad`` one fails."""

    assume: tuple[LTL, ...] = ()
    bad: tuple[LTL, ...] = ()

    def __and__(self, other: "Case") -> "Case":
        return Case(_uniq(self.assume + other.assume), _uniq(self.bad + other.bad))


def _uniq(xs):
    seen, out = set(), []
    for x in xs:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


def _conj(lists: Sequence[list[Case]]) -> list[Case]:
    out = [Case()]
    for options in lists:
        out = [a & b for a in out for b in options]
    return out


def sat_cases(f: LTL) -> list[Case]:
    """Disjunctive decomposition of ``f`` into safety assumptions and violations."""
    if isinstance(f, Const):
        return [Case()] if f.value else []
    if isinstance(f, And):
        return _conj([sat_cases(a) for a in f.args])
    if isinstance(f, Or):
        return [c for a in f.args for c in sat_cases(a)]
    if isinstance(f, Not):
        return violation_cases(f.arg)
    check_safety(f)
    return [Case(assume=(f,))]


def violation_cases(f: LTL) -> list[Case]:
    """Decomposition of ``not f``."""
    if isinstance(f, Const):
        return [] if f.value else [Case()]
    if isinstance(f, And):
        return [c for a in f.args for c in violation_cases(a)]
    if isinstance(f, Or):
        return _conj([violation_cases(a) for a in f.args])
    if isinstance(f, Not):
        return sat_cases(f.arg)
    check_safety(f)
    if is_state_formula(f):
        from ..reactive.ltl import lnot
        return [Case(assume=(lnot(f),))]
    return [Case(bad=(f,))]


# --- vectorised atoms ---------------------------------------------------------------------


class Space:
    """Restricted copies of the model, one per trace variable."""

    def __init__(self, view: ModelView, variables: Sequence[str], keep: dict[str, np.ndarray]):
        self.view = view
        self.vars = tuple(variables)
        self.idx = [np.flatnonzero(keep[v]) for v in self.vars]
        self.shape = tuple(len(i) for i in self.idx)
        self.S = [view.S[np.ix_(i, i)].astype(np.float32) for i in self.idx]
        self.ST = [s.T.copy() for s in self.S]
        self.init = [view.init[i] for i in self.idx]

    @property
    def k(self) -> int:
        return len(self.vars)

    def axis(self, var: str) -> int:
        return self.vars.index(var)

    def broadcast(self, vec: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.k
        shape[axis] = len(vec)
        return vec.reshape(shape)

    def atom_array(self, c: Cmp) -> np.ndarray:
        if c.v is None:
            a = self.axis(c.u)
            return np.broadcast_to(self.broadcast(self.view.state_vector(c)[self.idx[a]], a), self.shape)
        a, b = self.axis(c.u), self.axis(c.v)
        m = self.view.pair_matrix(c, self.idx[a], self.idx[b])
        if a == b:
            vec = np.diagonal(m)
            return np.broadcast_to(self.broadcast(vec, a), self.shape)
        if a > b:
            a, b, m = b, a, m.T
        shape = [1] * self.k
        shape[a], shape[b] = m.shape
        return np.broadcast_to(m.reshape(shape), self.shape)

    def state_array(self, f: LTL) -> np.ndarray:
        if isinstance(f, Const):
            return np.full(self.shape, f.value, dtype=bool)
        if isinstance(f, Atom):
            return self.atom_array(f.payload)
        if isinstance(f, Not):
            return ~self.state_array(f.arg)
        if isinstance(f, And):
            out = np.ones(self.shape, dtype=bool)
            for a in f.args:
                out = out & self.state_array(a)
            return out
        if isinstance(f, Or):
            out = np.zeros(self.shape, dtype=bool)
            for a in f.args:
                out = out | self.state_array(a)
            return out
        raise TypeError(f"not a state formula: {f}")

    # -- images ---------------------------------------------------------------------
    def _contract(self, X: np.ndarray, mats) -> np.ndarray:
        Y = X.astype(np.float32)
        for c, M in enumerate(mats):
            Y = np.moveaxis(np.tensordot(Y, M, axes=([c], [0])), -1, c)
        return Y > 0

    def img(self, X: np.ndarray) -> np.ndarray:
        return self._contract(X, self.S)

    def pre(self, X: np.ndarray) -> np.ndarray:
        return self._contract(X, self.ST)

    def succ_mask(self, x: tuple) -> np.ndarray:
        out = np.ones(self.shape, dtype=bool)
        for c, s in enumerate(x):
            out = out & self.broadcast(self.S[c][s] > 0, c)
        return out

    def pred_mask(self, x: tuple) -> np.ndarray:
        out = np.ones(self.shape, dtype=bool)
        for c, s in enumerate(x):
            out = out & self.broadcast(self.S[c][:, s] > 0, c)
        return out

    def init_mask(self) -> np.ndarray:
        out = np.ones(self.shape, dtype=bool)
        for c, v in enumerate(self.init):
            out = out & self.broadcast(v, c)
        return out


def _vars_of(f: LTL) -> set[str]:
    return {v for a in atoms(f) for v in a.payload.vars}


# --- search ---------------------------------------------------------------------------------


@dataclass
class PathWitness:
    """A product lasso: per trace variable a lasso of model state ids."""

    runs: dict[str, Lasso]
    monitor: list
    case: Case
    violation_at: int | None = None

    def to_json(self, view: ModelView) -> dict:
        out = {}
        for var, run in self.runs.items():
            dec = run.map(lambda s: _describe(view, s))
            out[var] = {"stem": list(dec.stem), "loop": list(dec.loop)}
        out["violation_at"] = self.violation_at
        return out


def _describe(view: ModelView, s: int) -> dict:
    ts = view.ts
    if ts.signals:
        d = {sig.name: sig.decode(ts.labels[s]) for sig in ts.signals}
    else:
        d = {"label": sorted(ts.labels[s])}
    d["state"] = ts.names[s] if ts.names else s
    return d


@dataclass
class SearchResult:
    found: bool
    witness: PathWitness | None
    stats: dict = field(default_factory=dict)


def search_case(view: ModelView, variables: Sequence[str], case: Case,
                budget: int = DEFAULT_CELL_BUDGET) -> SearchResult:
    """Is there a path of the product satisfying ``case``?"""
    variables = tuple(variables)
    keep = {v: np.ones(view.n, dtype=bool) for v in variables}
    init_f: list[LTL] = []
    step_f: list[LTL] = []
    monitors: list[LTL] = []
    for f in case.assume:
        parts = f.args if isinstance(f, And) else (f,)
        for g in parts:
            if is_state_formula(g):
                init_f.append(g)
            elif isinstance(g, Globally) and is_state_formula(g.arg):
                conj = g.arg.args if isinstance(g.arg, And) else (g.arg,)
                for h in conj:
                    vs = _vars_of(h)
                    if len(vs) == 1:
                        v, = vs
                        keep[v] = keep[v] & _single_vector(view, h, v)
                    elif not vs:
                        if not _const_value(h):
                            return SearchResult(False, None, {"cells": 0})
                    else:
                        step_f.append(h)
            else:
                monitors.append(g)
    bad = list(case.bad)
    space = Space(view, variables, keep)
    cells = int(np.prod(space.shape, dtype=np.int64))
    stats = {"shape": list(space.shape), "cells": cells}
    if cells == 0:
        return SearchResult(False, None, stats)

    step_mask = np.ones(space.shape, dtype=bool)
    for h in step_f:
        step_mask &= space.state_array(h)
    init_mask = space.init_mask()
    for h in init_f:
        init_mask &= space.state_array(h)

    # joint monitor over the letters that actually occur
    mons = [Monitor(f) for f in monitors + bad]
    all_atoms = sorted({a for f in monitors + bad for a in atoms(f)}, key=lambda a: a.name)
    if len(all_atoms) > 60:
        raise ProductTooLarge("too many distinct atoms in the monitored formulas")
    code = np.zeros(space.shape, dtype=np.int64)
    for j, a in enumerate(all_atoms):
        code |= space.atom_array(a.payload).astype(np.int64) << j
    present, letters = np.unique(code, return_inverse=True)
    letters = letters.reshape(space.shape)
    letter_sets = [frozenset(a.name for j, a in enumerate(all_atoms) if int(c) >> j & 1) for c in present]
    na = len(monitors)
    q0 = tuple(m.initial for m in mons)
    Qs = [q0]
    qindex = {q0: 0}
    delta: list[list[int]] = []
    k = 0
    while k < len(Qs):
        q = Qs[k]
        row = []
        for L in letter_sets:
            nq = tuple(m.step(s, L) for m, s in zip(mons, q))
            if nq not in qindex:
                qindex[nq] = len(Qs)
                Qs.append(nq)
            row.append(qindex[nq])
        delta.append(row)
        k += 1
    delta_arr = np.array(delta, dtype=np.int64).reshape(len(Qs), len(letter_sets))
    Q = len(Qs)
    dead = np.array([any(s == FALSE for s in q[:na]) for q in Qs])
    bad_all = np.array([all(s == FALSE for s in q[na:]) for q in Qs])
    stats.update(monitor_states=Q, product_cells=cells * Q)
    if cells * Q > budget:
        raise ProductTooLarge(f"product of {cells * Q} cells exceeds the budget of {budget}")

    NQ = [delta_arr[q][letters] for q in range(Q)]
    allowed = np.stack([step_mask & ~dead[q] for q in range(Q)])

    # greatest fixpoint: states with an infinite allowed continuation
    good = allowed.copy()
    while True:
        new = good.copy()
        for q in range(Q):
            nxt = np.take_along_axis(good, NQ[q][None], 0)[0]
            new[q] &= space.pre(nxt)
        if np.array_equal(new, good):
            break
        good = new
    target = good & bad_all.reshape((Q,) + (1,) * space.k)

    # forward breadth-first layers
    first = np.zeros((Q,) + space.shape, dtype=bool)
    D0 = delta_arr[0][letters]
    for q in range(Q):
        first[q] = init_mask & (D0 == q)
    first &= allowed
    layers = [first]
    seen = first.copy()
    hit = None
    while True:
        cur = layers[-1]
        if (cur & target).any():
            hit = len(layers) - 1
            break
        nxt = np.zeros_like(cur)
        for q in range(Q):
            if not cur[q].any():
                continue
            X = space.img(cur[q])
            for q2 in np.unique(NQ[q][X]) if X.any() else ():
                nxt[q2] |= X & (NQ[q] == q2)
        nxt &= allowed & ~seen
        if not nxt.any():
            break
        seen |= nxt
        layers.append(nxt)
    stats["explored"] = int(seen.sum())
    stats["depth"] = len(layers)
    if hit is None:
        return SearchResult(False, None, stats)

    # backtrack a stem, then loop inside the good set
    q, *x = map(int, np.argwhere(layers[hit] & target)[0])
    x = tuple(x)
    stem = [(q, x)]
    for j in range(hit - 1, -1, -1):
        lq = int(letters[x])
        P = space.pred_mask(x)
        for qp in range(Q):
            if delta_arr[qp][lq] == q:
                cand = layers[j][qp] & P
                if cand.any():
                    x = tuple(map(int, np.argwhere(cand)[0]))
                    q = qp
                    break
        else:  # pragma: no cover - layers guarantee a predecessor
            raise AssertionError("broken layer backtracking")
        stem.append((q, x))
    stem.reverse()
    path = list(stem)
    pos = {path[-1]: len(path) - 1}
    q, x = path[-1]
    while True:
        M = space.succ_mask(x)
        ok = M & np.take_along_axis(good, NQ[q][None], 0)[0]
        y = tuple(map(int, np.argwhere(ok)[0]))
        q = int(NQ[q][y])
        x = y
        if (q, x) in pos:
            start = pos[(q, x)]
            break
        pos[(q, x)] = len(path)
        path.append((q, x))
    runs = {}
    for c, var in enumerate(variables):
        ids = [int(space.idx[c][xx[c]]) for _, xx in path]
        runs[var] = Lasso(tuple(ids[:start]), tuple(ids[start:]))
    mon = [Qs[qq] for qq, _ in path]
    viol = hit if bad else None
    return SearchResult(True, PathWitness(runs, mon, case, viol), stats)


def _single_vector(view: ModelView, f: LTL, var: str) -> np.ndarray:
    if isinstance(f, Const):
        return np.full(view.n, f.value, dtype=bool)
    if isinstance(f, Atom):
        return view.state_vector(f.payload)
    if isinstance(f, Not):
        return ~_single_vector(view, f.arg, var)
    if isinstance(f, And):
        out = np.ones(view.n, dtype=bool)
        for a in f.args:
            out &= _single_vector(view, a, var)
        return out
    if isinstance(f, Or):
        out = np.zeros(view.n, dtype=bool)
        for a in f.args:
            out |= _single_vector(view, a, var)
        return out
    raise TypeError(f)


def _const_value(f: LTL) -> bool:
    return isinstance(f, Const) and f.value


def exists_path(view: ModelView, variables: Sequence[str], cases: Sequence[Case],
                budget: int = DEFAULT_CELL_BUDGET) -> SearchResult:
    """First case (in order) that has a path; merged statistics."""
    total = {"cases": len(cases), "explored": 0}
    for case in cases:
        r = search_case(view, variables, case, budget)
        total["explored"] += r.stats.get("explored", 0)
        for key in ("shape", "monitor_states", "depth"):
            if key in r.stats:
                total.setdefault(key, r.stats[key])
        if r.found:
            r.stats = {**r.stats, **{"cases": total["cases"], "explored": total["explored"]}}
            return r
    return SearchResult(False, None, total)
