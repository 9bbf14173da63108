"""Direct semantic checks of reactive cleanness on prefixes.

For an input prefix, the set of states a copy of the model can occupy
determines every output prefix it can produce.  Because the models are
receptive, every such finite run extends to an infinite one, so the
output-prefix sets the definitions quantify over are exactly what these
state sets generate.  The oracle explores macro states breadth first:

* robust / f-clean: ``(P1, P2, std, flags)`` -- the state sets of both
  copies after reading ``i[..k]`` and ``i'[..k]``, the StdIn monitor state
  of ``i``, and the distance flags needed for the input-distance side;
* clean: ``(Q1, Q2, std)`` -- state sets after a common input prefix *and* a
  common output prefix; the copies differ iff exactly one becomes empty.

A violation is a bad prefix: it is reported with the prefix length, and no
extension can repair it.  If the exploration saturates within the depth
bound the verdict is complete; otherwise it is Unknown.
"""
from __future__ import annotations

import time
from collections import deque
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..contracts import Contract
from ..reactive.ts import Lasso, TransitionSystem
from ..values import INF, fmt
from ..verdict import Verdict, clean, doped, unknown
from .formula import ModelView, _num, cleanness_formulas, eval_weak_until

DEPTH_CAP = 10_000


def default_depth(ts: TransitionSystem) -> int:
    """Twice the number of two-copy product states, capped."""
    return min(2 * ts.n * ts.n, DEPTH_CAP)


def bounded_oracle(ts, c: Contract | None = None, prop: str = "robust", depth: int | None = None,
                   max_states: int = 2_000_000) -> Verdict:
    view = ts if isinstance(ts, ModelView) else ModelView(ts, c)
    if depth is None:
        depth = default_depth(view.ts)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not view.ts.receptive:
        return unknown("the oracle needs a receptive model", mode="oracle")
    t0 = time.perf_counter()
    engine = _Oracle(view, prop)
    result = engine.run(depth, max_states)
    stats = {"mode": "oracle", "property": prop, "depth": depth, "explored": result["explored"],
             "seconds": round(time.perf_counter() - t0, 3)}
    if result["violation"] is not None:
        return doped(result["violation"], **stats)
    if result["complete"]:
        return clean(complete=True, **stats)
    return unknown(f"depth bound {depth} reached before saturation", **stats)


def bounded_oracle_clean(ts, c=None, depth=None) -> Verdict:
    return bounded_oracle(ts, c, "clean", depth)


def bounded_oracle_robust(ts, c=None, depth=None) -> Verdict:
    return bounded_oracle(ts, c, "robust", depth)


def bounded_oracle_fclean(ts, c=None, depth=None) -> Verdict:
    return bounded_oracle(ts, c, "fclean", depth)


class _Oracle:
    def __init__(self, view: ModelView, prop: str):
        if prop not in ("clean", "robust", "fclean"):
            raise ValueError(prop)
        self.view, self.prop = view, prop
        ts = view.ts
        self.ii, self.oi, self.pi = (view.ids[r].tolist() for r in "iop")
        self.ni, self.no = len(view.values["i"]), len(view.values["o"])
        self.mon = view.std_monitor
        self.live = view.std_live
        self.dnew = view.contract.d_in.kind == "dnew"
        # successor states grouped by input id (and by output id for clean)
        self.by_in = [dict() for _ in range(ts.n)]
        self.by_io = [dict() for _ in range(ts.n)]
        for s in range(ts.n):
            for t in ts.succ[s]:
                self.by_in[s].setdefault(self.ii[t], []).append(t)
                self.by_io[s].setdefault((self.ii[t], self.oi[t]), []).append(t)
        self.init_by = {}
        for s in ts.init:
            if view.pintrs_vec[s]:
                self.init_by.setdefault(self.pi[s], {}).setdefault(self.ii[s], []).append(s)
        self.step_cache: dict = {}
        self.din_le = view.din_le_arr
        self.dout_le = view.dout_le_arr

    # -- set transitions ----------------------------------------------------------------
    def step_in(self, P: frozenset, x: int) -> frozenset:
        key = (P, x)
        r = self.step_cache.get(key)
        if r is None:
            r = frozenset(t for s in P for t in self.by_in[s].get(x, ()))
            self.step_cache[key] = r
        return r

    def step_io(self, P: frozenset, x: int, y: int) -> frozenset:
        key = (P, x, y)
        r = self.step_cache.get(key)
        if r is None:
            r = frozenset(t for s in P for t in self.by_io[s].get((x, y), ()))
            self.step_cache[key] = r
        return r

    def std_step(self, q, P: frozenset):
        s = next(iter(P))
        return self.mon.step(q, self.view.std_letter(s))

    def outs(self, P) -> set[int]:
        return {self.oi[s] for s in P}

    # -- violation tests ---------------------------------------------------------------------
    def far(self, O1, O2, ok) -> tuple | None:
        """An output of one side with no acceptable partner on the other."""
        for a in sorted(O1):
            if not any(ok(a, b) for b in O2):
                return ("12", a)
        for b in sorted(O2):
            if not any(ok(a, b) for a in O1):
                return ("21", b)
        return None

    def check(self, m) -> tuple | None:
        if self.prop == "robust":
            P1, P2, q, _ = m
            return self.far(self.outs(P1), self.outs(P2), lambda a, b: self.dout_le[a, b])
        if self.prop == "fclean":
            P1, P2, q, flags = m
            x1, x2 = self.ii[next(iter(P1))], self.ii[next(iter(P2))]
            if self.dnew:
                eq, within = flags
                dval = Fraction(0) if eq else (Fraction(1) if within else Fraction(2))
                lim = self.view.contract.bound()(dval)
                table = self.view.dout_table
                return self.far(self.outs(P1), self.outs(P2), lambda a, b: table[a][b] <= lim)
            return self.far(self.outs(P1), self.outs(P2), lambda a, b: self.view.fbound_ok(x1, x2, a, b))
        Q1, Q2, q = m
        if bool(Q1) != bool(Q2):
            return ("12" if Q1 else "21", None)
        return None

    # -- exploration ---------------------------------------------------------------------------
    def initial(self):
        out = []
        mon = self.mon
        for p1, by1 in self.init_by.items():
            for p2, by2 in self.init_by.items():
                if self.prop == "clean":
                    for x, S1 in by1.items():
                        S2 = by2.get(x, [])
                        ys = {self.oi[s] for s in S1} | {self.oi[s] for s in S2}
                        for y in sorted(ys):
                            Q1 = frozenset(s for s in S1 if self.oi[s] == y)
                            Q2 = frozenset(s for s in S2 if self.oi[s] == y)
                            q = mon.step(mon.initial, self.view.std_letter(next(iter(Q1 or Q2))))
                            if q in self.live:
                                out.append(((p1, p2), (x,), (Q1, Q2, q)))
                    continue
                for x1, S1 in by1.items():
                    P1 = frozenset(S1)
                    q = self.std_step(mon.initial, P1)
                    if q not in self.live:
                        continue
                    for x2, S2 in by2.items():
                        m = self._flagged(frozenset(S1), frozenset(S2), q, x1, x2, None)
                        if m is not None:
                            out.append(((p1, p2), (x1, x2), m))
        return out

    def _flagged(self, P1, P2, q, x1, x2, flags):
        within_now = bool(self.din_le[x1, x2])
        if self.prop == "robust":
            if not within_now:
                return None  # the input side left kappa_i: no later obligation
            return (P1, P2, q, None)
        if self.dnew:
            eq, within = flags if flags is not None else (True, True)
            d = self.view.contract.d_in
            vals = self.view.values["i"]
            close = d.base.point(_num(vals[x1]), _num(vals[x2])) <= d.kappa_in
            return (P1, P2, q, (eq and x1 == x2, within and close))
        return (P1, P2, q, None)

    def successors(self, m):
        if self.prop == "clean":
            Q1, Q2, q = m
            keys = set()
            for s in Q1 | Q2:
                keys.update(self.by_io[s])
            for x, y in sorted(keys):
                R1, R2 = self.step_io(Q1, x, y), self.step_io(Q2, x, y)
                q2 = self.mon.step(q, self.view.std_letter(next(iter(R1 or R2))))
                if q2 in self.live:
                    yield (x,), (R1, R2, q2)
            return
        P1, P2, q, flags = m
        xs1 = sorted({x for s in P1 for x in self.by_in[s]})
        xs2 = sorted({x for s in P2 for x in self.by_in[s]})
        for x1 in xs1:
            R1 = self.step_in(P1, x1)
            q2 = self.std_step(q, R1)
            if q2 not in self.live:
                continue
            for x2 in xs2:
                m2 = self._flagged(R1, self.step_in(P2, x2), q2, x1, x2, flags)
                if m2 is not None:
                    yield (x1, x2), m2

    def run(self, depth: int, max_states: int) -> dict:
        parent: dict = {}
        frontier = []
        for params, letter, m in self.initial():
            key = (params, m)
            if key not in parent:
                parent[key] = (None, letter)
                frontier.append(key)
        k = 0
        while frontier:
            for key in frontier:
                bad = self.check(key[1])
                if bad is not None:
                    return {"violation": self.witness(parent, key, bad, k), "explored": len(parent),
                            "complete": False}
            if k + 1 >= depth:
                return {"violation": None, "explored": len(parent), "complete": False}
            nxt = []
            for key in frontier:
                params, m = key
                for letter, m2 in self.successors(m):
                    key2 = (params, m2)
                    if key2 not in parent:
                        parent[key2] = (key, letter)
                        nxt.append(key2)
                if len(parent) > max_states:
                    return {"violation": None, "explored": len(parent), "complete": False}
            frontier = nxt
            k += 1
        return {"violation": None, "explored": len(parent), "complete": True}

    def witness(self, parent, key, bad, k) -> dict:
        letters = []
        cur = key
        while cur is not None:
            prev, letter = parent[cur]
            letters.append(letter)
            cur = prev
        letters.reverse()
        view = self.view
        vals_i, vals_p, vals_o = view.values["i"], view.values["p"], view.values["o"]
        (p1, p2), m = key
        w = {
            "definition": self.prop,
            "bad_prefix_length": k + 1,
            "violated_at": k,
            "p": _show(vals_p[p1]), "p2": _show(vals_p[p2]),
            "direction": bad[0],
        }
        if self.prop == "clean":
            w["inputs"] = [_show(vals_i[x[0]]) for x in letters]
            w["_ids"] = {"p": p1, "p2": p2, "i": [x[0] for x in letters], "i2": [x[0] for x in letters]}
            # reconstruct the common output prefix from the clean macro path
            w["outputs"] = self._clean_outputs(parent, key)
        else:
            w["inputs"] = [_show(vals_i[x[0]]) for x in letters]
            w["inputs2"] = [_show(vals_i[x[1]]) for x in letters]
            w["outputs_1"] = sorted(_show(vals_o[o]) for o in self.outs(m[0]))
            w["outputs_2"] = sorted(_show(vals_o[o]) for o in self.outs(m[1]))
            w["unmatched_output"] = _show(vals_o[bad[1]])
            w["_ids"] = {"p": p1, "p2": p2, "i": [x[0] for x in letters], "i2": [x[1] for x in letters],
                         "o": bad[1]}
        return w

    def _clean_outputs(self, parent, key):
        seq = []
        cur = key
        while cur is not None:
            Q1, Q2, _ = cur[1]
            s = next(iter(Q1 or Q2))
            seq.append(_show(self.view.values["o"][self.oi[s]]))
            cur = parent[cur][0]
        return list(reversed(seq))


def _show(v):
    if isinstance(v, tuple):
        return fmt(v[0]) if len(v) == 1 else [fmt(x) for x in v]
    if isinstance(v, frozenset):
        return sorted(v)
    return fmt(v)


# --- replay ------------------------------------------------------------------------------------


def prefix_runs(view: ModelView, param: int, inputs: Sequence[int], limit: int = 20_000) -> list[tuple]:
    """All state sequences of the given parameter id reading the input ids."""
    ts = view.ts
    ii, pi = view.ids["i"], view.ids["p"]
    runs = [(s,) for s in ts.init if pi[s] == param and ii[s] == inputs[0]]
    for x in inputs[1:]:
        runs = [r + (t,) for r in runs for t in ts.succ[r[-1]] if ii[t] == x]
        if len(runs) > limit:
            raise OverflowError("too many runs to replay")
    return runs


def _continue(ts: TransitionSystem, run: tuple) -> Lasso:
    """Extend a finite run to a lasso by always taking the first successor."""
    path = list(run)
    seen = {}
    s = path[-1]
    extra = []
    while s not in seen:
        seen[s] = len(extra)
        s = ts.succ[s][0]
        extra.append(s)
    # extra[-1] == s was already visited: loop from its first occurrence
    first = seen[s]
    tail = extra[:-1]
    stem_part = [path[-1]] + tail
    k = stem_part.index(s)
    return Lasso(tuple(path[:-1]) + tuple(stem_part[:k]), tuple(stem_part[k:]))


def synchronise(lassos: Sequence[Lasso]) -> list[Lasso]:
    """Unroll lassos to a common stem length and loop length."""
    from math import lcm
    stem = max(len(l.stem) for l in lassos)
    period = 1
    for l in lassos:
        period = lcm(period, len(l.loop))
    return [Lasso(l.prefix(stem - 1) if stem else (), tuple(l[stem + j] for j in range(period))) for l in lassos]


def replay_oracle_witness(view: ModelView, witness: dict) -> bool:
    """Re-establish a reported bad prefix from scratch.

    Every run of the witnessing copy that matches the reported prefix is
    paired with every run of the other copy; the relation part of the
    matching ∀∀∃ formula must evaluate to false on each pair under the
    literal weak-until semantics (continuations are arbitrary).
    """
    prop = witness["definition"]
    ids = witness["_ids"]
    ts = view.ts
    runs1 = prefix_runs(view, ids["p"], ids["i"])
    runs2 = prefix_runs(view, ids["p2"], ids["i2"])
    formulas = cleanness_formulas(view, prop)
    oi = view.ids["o"]
    if prop == "clean":
        want = witness["outputs"]
        side = runs1 if witness["direction"] == "12" else runs2
        other = runs2 if witness["direction"] == "12" else runs1
        target = [r for r in side if [_show(view.values["o"][oi[s]]) for s in r] == want]
        if not target:
            return False
        body = _relation_only(formulas[0].body)
        for r in target[:1]:
            for r2 in other:
                pair = synchronise([_continue(ts, r), _continue(ts, r2)])
                if eval_weak_until(view, body, {"pi1": pair[0], "pi2'": pair[1]}):
                    return False
        return True
    o = ids["o"]
    if witness["direction"] == "12":
        target = [r for r in runs1 if oi[r[-1]] == o]
        body, names, others = _relation_only(formulas[0].body), ("pi1", "pi2'"), runs2
    else:
        target = [r for r in runs2 if oi[r[-1]] == o]
        body, names, others = _relation_only(formulas[1].body), ("pi2", "pi1'"), runs1
    if not target:
        return False
    for r2 in others:
        pair = synchronise([_continue(ts, target[0]), _continue(ts, r2)])
        if eval_weak_until(view, body, dict(zip(names, pair))):
            return False
    return True


def _relation_only(body):
    """The conclusion's relation: the last conjunct of the implication's right side."""
    from ..reactive.ltl import And, Or
    # implies(pre, land(lock, rel)) is rendered as Or(Not(pre), And(...)) or similar
    parts = body.args if isinstance(body, Or) else (body,)
    for p in parts:
        if isinstance(p, And):
            temporal = [a for a in p.args if _mentions_relation(a)]
            if temporal:
                from ..reactive.ltl import land
                return land(*temporal)
        elif _mentions_relation(p):
            return p
    raise ValueError("no relation in body")


def _mentions_relation(f) -> bool:
    from ..reactive.ltl import atoms
    return any(a.payload.kind in ("dout_le", "fbound") or
               (a.payload.kind == "eq" and a.payload.role == "o") for a in atoms(f))
