"""Checking the trace-quantified cleanness formulas on finite models.

* :func:`check_forall_forall` decides universal two-trace formulas with a
  safety-shaped body exactly, by searching the product for a violation;
* :func:`check_exists_exists` searches for a witness pair;
* :func:`check_negation_instance` combines a three-trace refutation
  instance with the existence of its premise traces;
* :func:`check_strengthened` proves cleanness via the alternation-free
  strengthening;
* :func:`check_forall_forall_exists_exact` decides the ∀∀∃ formulas by a
  subset construction over the witness copy.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from ..contracts import Contract
from ..reactive.ltl import TRUE, lnot
from ..reactive.ts import Lasso, TransitionSystem
from ..values import fmt, to_value
from ..verdict import Verdict, clean, doped, jsonable, unknown
from .formula import (
    HyperFormula, ModelView, cleanness_formulas, eval_weak_until, guarantee_formula,
    negation_instance, strengthened_formula,
)
from .product import DEFAULT_CELL_BUDGET, ProductTooLarge, exists_path, sat_cases, violation_cases

DEFAULT_EXACT_BUDGET = 200_000


def _view(ts, c) -> ModelView:
    return ts if isinstance(ts, ModelView) else ModelView(ts, c)


def check_forall_forall(phi: HyperFormula, ts: TransitionSystem | ModelView, c: Contract | None = None,
                        budget: int = DEFAULT_CELL_BUDGET) -> Verdict:
    """Universal formula: Clean iff no trace tuple violates the body."""
    if set(phi.quantifiers) != {"A"}:
        raise ValueError("check_forall_forall needs a purely universal prefix")
    view = _view(ts, c)
    t0 = time.perf_counter()
    cases = violation_cases(phi.body)
    try:
        r = exists_path(view, phi.vars, cases, budget)
    except ProductTooLarge as exc:
        return unknown(f"budget: {exc}", formula=phi.label)
    stats = {"formula": phi.label, "seconds": round(time.perf_counter() - t0, 3), **r.stats}
    if not r.found:
        return clean(**stats)
    w = r.witness
    witness = {"formula": phi.label, "traces": w.to_json(view),
               "replay_holds": eval_weak_until(view, phi.body, w.runs)}
    return doped(witness, **stats)


@dataclass
class ExistsResult:
    """Outcome of an existential formula: a witness tuple of lassos, if any."""

    satisfied: bool
    witness: dict | None
    runs: dict | None
    stats: dict

    def to_json(self) -> dict:
        return jsonable({"satisfied": self.satisfied, "witness": self.witness, "stats": self.stats})


def check_exists_exists(phi: HyperFormula, ts, c: Contract | None = None,
                        budget: int = DEFAULT_CELL_BUDGET) -> ExistsResult:
    """Existential formula: satisfied iff some trace tuple satisfies the body."""
    if set(phi.quantifiers) != {"E"}:
        raise ValueError("check_exists_exists needs a purely existential prefix")
    view = _view(ts, c)
    r = exists_path(view, phi.vars, sat_cases(phi.body), budget)
    stats = {"formula": phi.label, **r.stats}
    if not r.found:
        return ExistsResult(False, None, None, stats)
    return ExistsResult(True, r.witness.to_json(view), r.witness.runs, stats)


def check_strengthened(ts, c: Contract | None = None, prop: str = "robust",
                       budget: int = DEFAULT_CELL_BUDGET) -> Verdict:
    """Prove cleanness via the alternation-free strengthening.

    A satisfied strengthening proves the property.  A violated one proves
    nothing about the original formula, so the verdict is Unknown with the
    violating pair attached.
    """
    view = _view(ts, c)
    phi = strengthened_formula(view, prop)
    if prop == "clean" and not view.ts.receptive:
        return unknown("strengthened clean check needs a receptive model", formula=phi.label)
    v = check_forall_forall(phi, view, budget=budget)
    if v.clean:
        return clean(**{**v.stats, "mode": "strengthen", "caveat": "sound, incomplete: a violation is inconclusive"})
    if v.unknown:
        return v
    return unknown("strengthened formula violated; inconclusive for the original property",
                   witness=v.witness, mode="strengthen", **v.stats)


def check_negation_instance(ts, c: Contract | None, a, b, prop: str = "robust",
                            orientations: Sequence[str] = ("a", "b"),
                            budget: int = DEFAULT_CELL_BUDGET) -> Verdict:
    """Refute the ∀∀∃ formulas at first-trace input ``a`` and second-trace input ``b``.

    Doped when every requested orientation's ∀∀∀ instance holds and
    traces with constant inputs ``a`` and ``b`` exist.  Unknown(vacuous) if
    no such traces exist; Unknown otherwise.
    """
    view = _view(ts, c)
    a, b = _input_value(view, a), _input_value(view, b)
    t0 = time.perf_counter()
    guar = guarantee_formula(a, b)
    g = check_exists_exists(guar, view, budget=budget)
    stats = {"mode": "negation", "a": a, "b": b, "orientations": list(orientations), "guarantee": guar.label}
    if not g.satisfied:
        return unknown("vacuous: no traces with the requested constant inputs", **stats)
    instances = []
    for o in orientations:
        phi = negation_instance(view, prop, a, b, o)
        try:
            v = check_forall_forall(phi, view, budget=budget)
        except ProductTooLarge as exc:  # pragma: no cover - check_forall_forall catches it
            return unknown(f"budget: {exc}", **stats)
        instances.append({"formula": phi.label, "holds": v.clean, "counterexample": v.witness})
        if v.unknown:
            return unknown(v.reason, **stats, instances=instances)
    stats["instances"] = [{k: x[k] for k in ("formula", "holds")} for x in instances]
    stats["seconds"] = round(time.perf_counter() - t0, 3)
    if all(x["holds"] for x in instances):
        witness = {"definition": f"{prop} (negation instance)", "a": a, "b": b, "traces": g.witness}
        return doped(witness, **stats)
    failed = [x for x in instances if not x["holds"]]
    return unknown(f"negation instance {failed[0]['formula']} does not hold",
                   witness=failed[0]["counterexample"], **stats)


def _input_value(view: ModelView, x):
    vals = view.values["i"]
    if vals and isinstance(vals[0], tuple):
        x = tuple(to_value(v) for v in x) if isinstance(x, (tuple, list)) else (to_value(x),)
    return x


# --- exact ∀∀∃ by subset construction -------------------------------------------------------------


def check_forall_forall_exists_exact(ts, c: Contract | None = None, prop: str = "robust",
                                     which: Sequence[str] = ("1", "2"),
                                     budget: int = DEFAULT_EXACT_BUDGET) -> Verdict:
    """Decide the ∀∀∃ characterisation(s) exactly.

    The witness copy is locked to the parameter and inputs of its anchor
    trace; all its candidate states are tracked together while the two
    universal copies advance, and the formula fails exactly when the
    candidate set becomes empty before the release condition.  Candidate
    prefixes can always be extended because the model must be receptive.
    """
    view = _view(ts, c)
    if not view.ts.receptive:
        return unknown("exact mode needs a receptive model", mode="exact")
    t0 = time.perf_counter()
    formulas = cleanness_formulas(view, prop)
    results = []
    if prop == "clean":
        which = ("clean",)
    total = 0
    for label in which:
        phi = formulas[0] if prop == "clean" else formulas[int(label) - 1]
        r = _exact_one(view, prop, label, budget)
        total += r["explored"]
        results.append((phi, r))
        if r.get("budget"):
            return unknown(f"budget: more than {budget} macro states; use the strengthening workflow",
                           mode="exact", formula=phi.label, explored=total)
        if r["violation"] is not None:
            witness = {"formula": phi.label, **r["violation"]}
            return doped(witness, mode="exact", explored=total, formulas=[p.label for p, _ in results],
                         seconds=round(time.perf_counter() - t0, 3))
    return clean(mode="exact", explored=total, formulas=[p.label for p, _ in results],
                 seconds=round(time.perf_counter() - t0, 3))


def _exact_one(view: ModelView, prop: str, label: str, budget: int) -> dict:
    """Search macro states ``(s1, s2, candidates, std, released)``."""
    ts = view.ts
    ii, oi, pi = view.ids["i"], view.ids["o"], view.ids["p"]
    din_le, dout_le = view.din_le_arr, view.dout_le_arr
    fb = view.fbound_ok
    mon = view.std_monitor
    live = view.std_live
    pint = view.pintrs_vec
    # anchor: the trace whose parameter and inputs the witness copies;
    # partner: the universal trace the witness is compared with
    anchor_is_2 = prop == "clean" or label == "1"

    def ok(s1, s2, w, released):
        """Relation between trace 1/2 states and witness state ``w`` at one position."""
        if prop == "clean":
            return ii[s1] == ii[w] and oi[s1] == oi[w]
        partner = s1 if label == "1" else s2
        if prop == "robust":
            if released:
                return True
            return bool(dout_le[oi[partner], oi[w]])
        if label == "1":
            return bool(fb(ii[partner], ii[w], oi[partner], oi[w]))
        return bool(fb(ii[w], ii[partner], oi[w], oi[partner]))

    def locked(s1, s2, w):
        """Witness follows its anchor's inputs (clean: the first trace's inputs)."""
        if prop == "clean":
            return True
        anchor = s2 if anchor_is_2 else s1
        return ii[anchor] == ii[w]

    def release(s1, s2):
        if prop != "robust":
            return False
        if label == "1":
            return not din_le[ii[s1], ii[s2]]
        return not din_le[ii[s1], ii[s2]]

    def param_anchor(s1, s2):
        return pi[s2] if anchor_is_2 else pi[s1]

    start = []
    for s1 in ts.init:
        if not pint[s1]:
            continue
        q = mon.step(mon.initial, view.std_letter(s1))
        if q not in live:
            continue
        for s2 in ts.init:
            if not pint[s2]:
                continue
            rel = release(s1, s2)
            if rel:
                continue  # the release condition holds at once: trace 2 itself is a witness
            p = param_anchor(s1, s2)
            cands = frozenset(w for w in ts.init if pi[w] == p and locked(s1, s2, w) and ok(s1, s2, w, rel))
            start.append((s1, s2, cands, q))
    seen = {}
    queue = deque()
    for m in start:
        if m not in seen:
            seen[m] = None
            queue.append(m)
    succ = ts.succ
    while queue:
        m = queue.popleft()
        s1, s2, cands, q = m
        if not cands:
            return {"violation": _exact_witness(view, seen, m), "explored": len(seen)}
        if len(seen) > budget:
            return {"violation": None, "explored": len(seen), "budget": True}
        nxt_c = {}
        for t1 in succ[s1]:
            q2 = mon.step(q, view.std_letter(t1))
            if q2 not in live:
                continue
            for t2 in succ[s2]:
                if release(t1, t2):
                    continue
                key = (ii[t1], oi[t1], ii[t2], oi[t2])
                c2 = nxt_c.get(key)
                if c2 is None:
                    c2 = frozenset(w2 for w in cands for w2 in succ[w]
                                   if locked(t1, t2, w2) and ok(t1, t2, w2, False))
                    nxt_c[key] = c2
                m2 = (t1, t2, c2, q2)
                if m2 not in seen:
                    seen[m2] = m
                    queue.append(m2)
    return {"violation": None, "explored": len(seen)}


def _exact_witness(view: ModelView, parents: dict, m) -> dict:
    chain = []
    while m is not None:
        chain.append(m)
        m = parents[m]
    chain.reverse()
    ts = view.ts
    desc = lambda s: {**{sig.name: fmt(sig.decode(ts.labels[s])) for sig in ts.signals}}  # noqa: E731
    return {
        "prefix_length": len(chain),
        "pi1": [desc(x[0]) for x in chain],
        "pi2": [desc(x[1]) for x in chain],
        "states": [[x[0], x[1]] for x in chain],
    }
