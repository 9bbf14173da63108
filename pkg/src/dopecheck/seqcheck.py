"""Enumeration checkers for sequential programs.

Every checker compiles the contract against the program's declared grids,
evaluates the program once per (parameter, input) valuation, and then walks
the quadruples ``(p, p2, i, i2)`` in lexicographic order.  Nontermination is
an output of its own (``BOTTOM``): it is at distance 0 from itself and at
``INF`` from every real output.
"""
from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .contracts import Contract, ContractError, hausdorff
from .seqlang import BOTTOM, DEFAULT_BUDGET, EvalResult, Program, evaluate, parse_expr
from .values import INF, Value, is_inf
from .verdict import Verdict, clean, doped, unknown

PARALLEL_THRESHOLD = 4096  # evaluations below this run in-process


def _predicate(text, prog: Program) -> Callable[[dict], bool]:
    if text is None or str(text).strip() in ("", "true"):
        return lambda env: True
    expr = parse_expr(str(text), dict(prog.consts))
    names = set(prog.names)
    unknown_names = expr.free_vars() - names
    if unknown_names:
        raise ContractError(f"predicate {text!r} mentions undeclared {sorted(unknown_names)}")
    consts = dict(prog.consts)

    def holds(env: dict) -> bool:
        return bool(expr.ev({**consts, **env}))

    return holds


def _grid_product(prog: Program, names: tuple[str, ...]) -> list[dict]:
    grids = []
    for n in names:
        g = prog.grid(n)
        if g is None:
            raise ContractError(f"{n!r} needs a declared domain to be enumerated")
        grids.append(g.points)
    return [dict(zip(names, combo)) for combo in itertools.product(*grids)]


def output_distance(d) -> Callable:
    def dist(a, b) -> Value:
        if a is BOTTOM or b is BOTTOM:
            return Fraction(0) if a is b else INF
        return d(a, b)

    return dist


def _eval_job(args):
    prog, p, i, budget = args
    return evaluate(prog, p, i, budget)


@dataclass
class SeqDomain:
    """A program paired with its contract, compiled to finite sets."""

    prog: Program
    contract: Contract
    budget: int = DEFAULT_BUDGET
    jobs: int = 1
    params: list[dict] = field(init=False)
    inputs: list[dict] = field(init=False)
    std: list[bool] = field(init=False)
    comm: list[bool] = field(init=False)
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        prog, c = self.prog, self.contract
        pnames, inames = prog.params, prog.inputs
        if isinstance(c.pintrs, tuple):
            self.params = sorted((dict(row) for row in c.pintrs), key=lambda r: tuple(r[n] for n in pnames))
            for row in self.params:
                if set(row) != set(pnames):
                    raise ContractError(f"parameter valuation {row} does not match parameters {pnames}")
        else:
            keep = _predicate(c.pintrs, prog)
            self.params = [p for p in _grid_product(prog, pnames) if keep(p)]
        self.inputs = _grid_product(prog, inames)
        is_std = _predicate(c.stdin, prog)
        self.std = [is_std(i) for i in self.inputs]
        if c.comm is None:
            self.comm = [False] * len(self.inputs)
        else:
            is_comm = _predicate(c.comm, prog)
            self.comm = [is_comm(i) for i in self.inputs]
            if any(s and m for s, m in zip(self.std, self.comm)):
                raise ContractError("committed and standard inputs overlap")
        self._cache: dict[tuple[int, int], EvalResult] = {}
        self._din: dict[tuple[int, int], Value] = {}
        self.d_out = output_distance(c.d_out)

    def key(self, i: int) -> tuple:
        return tuple(self.inputs[i][n] for n in self.prog.inputs)

    def result(self, pi: int, ii: int) -> EvalResult:
        r = self._cache.get((pi, ii))
        if r is None:
            r = evaluate(self.prog, self.params[pi], self.inputs[ii], self.budget)
            self._cache[(pi, ii)] = r
            self.evaluations += 1
        return r

    def warm(self, pairs: list[tuple[int, int]]) -> None:
        """Evaluate the listed valuations, in worker processes if worthwhile."""
        todo = [k for k in dict.fromkeys(pairs) if k not in self._cache]
        if self.jobs > 1 and len(todo) >= PARALLEL_THRESHOLD:
            args = [(self.prog, self.params[p], self.inputs[i], self.budget) for p, i in todo]
            with ProcessPoolExecutor(self.jobs) as pool:
                for k, r in zip(todo, pool.map(_eval_job, args, chunksize=256)):
                    self._cache[k] = r
            self.evaluations += len(todo)
        else:
            for p, i in todo:
                self.result(p, i)

    def d_in(self, a: int, b: int) -> Value:
        k = (a, b) if a <= b else (b, a)
        v = self._din.get(k)
        if v is None:
            v = self.contract.d_in(self.key(a), self.key(b))
            self._din[k] = v
        return v

    def quadruples(self, i_set: list[int], j_of: Callable[[int], list[int]], reverse=False) -> Iterator:
        P = range(len(self.params))
        order = list(itertools.product(P, P, i_set))
        if reverse:
            order.reverse()
        partners: dict[int, list[int]] = {}
        for pa, pb, ia in order:
            if ia not in partners:
                partners[ia] = j_of(ia)
            js = partners[ia]
            for ib in reversed(js) if reverse else js:
                yield pa, pb, ia, ib

    def witness(self, kind: str, pa, pb, ia, ib, **extra) -> dict:
        ra, rb = self.result(pa, ia), self.result(pb, ib)
        w = {
            "definition": kind,
            "p": self.params[pa],
            "p2": self.params[pb],
            "i": self.inputs[ia],
            "i2": self.inputs[ib],
            "outputs": ra.sorted(),
            "outputs2": rb.sorted(),
        }
        w.update(extra)
        return w


def _default_jobs() -> int:
    env = os.environ.get("DOPECHECK_JOBS")
    return int(env) if env else 1


def _run(dom: SeqDomain, kind: str, quads: Iterator, test: Callable, collect: bool, t0: float) -> Verdict:
    """Shared driver: ``test`` returns ``(ok, extra-witness-fields)``."""
    first = None
    found = []
    undecided = None
    checked = 0
    quads = list(quads)
    dom.warm([(pa, ia) for pa, _, ia, _ in quads] + [(pb, ib) for _, pb, _, ib in quads])
    for pa, pb, ia, ib in quads:
        checked += 1
        ok, extra = test(pa, pb, ia, ib)
        if ok:
            continue
        ra, rb = dom.result(pa, ia), dom.result(pb, ib)
        if ra.exhausted or rb.exhausted:
            undecided = undecided or dom.witness(kind, pa, pb, ia, ib, **extra)
            continue
        w = dom.witness(kind, pa, pb, ia, ib, **extra)
        if first is None:
            first = w
            if not collect:
                break
        found.append(w)
    stats = {"tuples": checked, "evaluations": dom.evaluations, "seconds": round(time.perf_counter() - t0, 6)}
    if first is not None:
        return doped(first, found, **stats)
    if undecided is not None:
        return unknown("evaluation budget exhausted", undecided, **stats)
    return clean(**stats)


def check_clean(prog: Program, c: Contract, *, budget=DEFAULT_BUDGET, jobs=None, collect=False, reverse=False) -> Verdict:
    """Equal output sets for all parameters of interest on every standard input."""
    t0 = time.perf_counter()
    dom = SeqDomain(prog, c, budget, jobs or _default_jobs())
    std = [k for k, s in enumerate(dom.std) if s]

    def test(pa, pb, ia, ib):
        ra, rb = dom.result(pa, ia), dom.result(pb, ib)
        if ra.outputs == rb.outputs and not (ra.exhausted or rb.exhausted):
            return True, {}
        if ra.outputs == rb.outputs and ra.exhausted and rb.exhausted:
            return True, {}
        return False, {}

    return _run(dom, "clean", dom.quadruples(std, lambda ia: [ia], reverse), test, collect, t0)


def _bounded(dom: SeqDomain, kind: str, i_set, j_of, bound_of, collect, reverse, t0) -> Verdict:
    def test(pa, pb, ia, ib):
        bound = bound_of(ia, ib)
        if is_inf(bound):
            return True, {}
        ra, rb = dom.result(pa, ia), dom.result(pb, ib)
        h = hausdorff(dom.d_out, ra.outputs, rb.outputs)
        return h <= bound, {"distance": h, "bound": bound, "input_distance": dom.d_in(ia, ib)}

    return _run(dom, kind, dom.quadruples(i_set, j_of, reverse), test, collect, t0)


def check_robustly_clean(prog: Program, c: Contract, *, budget=DEFAULT_BUDGET, jobs=None, collect=False, reverse=False) -> Verdict:
    """Output sets within ``kappa_out`` whenever inputs are within ``kappa_in`` of a standard one."""
    t0 = time.perf_counter()
    dom = SeqDomain(prog, c, budget, jobs or _default_jobs())
    std = [k for k, s in enumerate(dom.std) if s]
    every = range(len(dom.inputs))

    def near(ia):
        return [ib for ib in every if dom.d_in(ia, ib) <= c.kappa_in]

    return _bounded(dom, "robust", std, near, lambda ia, ib: c.kappa_out, collect, reverse, t0)


def check_f_clean(prog: Program, c: Contract, *, budget=DEFAULT_BUDGET, jobs=None, collect=False, reverse=False) -> Verdict:
    """Output sets within ``f(d_in(i, i2))`` for standard ``i`` and any ``i2``."""
    t0 = time.perf_counter()
    dom = SeqDomain(prog, c, budget, jobs or _default_jobs())
    f = c.bound()
    std = [k for k, s in enumerate(dom.std) if s]
    every = list(range(len(dom.inputs)))
    return _bounded(dom, "fclean", std, lambda ia: every, lambda ia, ib: f(dom.d_in(ia, ib)), collect, reverse, t0)


def check_general_clean(
    prog: Program, c: Contract, *, jump: Value | None = None, budget=DEFAULT_BUDGET, jobs=None, collect=False
) -> Verdict:
    """Three-part cleanness with committed inputs.

    Parts 1 and 2 are decided exactly.  Part 3 (continuity away from standard
    and committed inputs) is only sampled: for every input outside both sets
    and every input at the smallest realised input distance from it
    (including itself), the largest output distance is reported.  A sample
    above ``jump`` (default: ``kappa_out``) is reported as doped; otherwise
    part 3 stays unknown unless there is nothing to sample.
    """
    t0 = time.perf_counter()
    dom = SeqDomain(prog, c, budget, jobs or _default_jobs())
    std = [k for k, s in enumerate(dom.std) if s]
    comm = [k for k, m in enumerate(dom.comm) if m]
    every = list(range(len(dom.inputs)))

    item1 = _run(dom, "general/1", dom.quadruples(std, lambda ia: [ia]), lambda *q: (_same(dom, *q), {}), collect, t0)
    if comm:
        f = c.bound()
        item2 = _bounded(dom, "general/2", std, lambda ia: comm, lambda ia, ib: f(dom.d_in(ia, ib)), collect, False, t0)
    else:
        item2 = clean()

    rest = [k for k in every if not dom.std[k] and not dom.comm[k]]
    report = {"samples": 0, "max_distance": Fraction(0), "separation": None}
    if not rest:
        item3 = clean(reason="no inputs outside standard and committed sets")
    else:
        gaps = [dom.d_in(a, b) for a in rest for b in every if a != b]
        positive = [g for g in gaps if g > 0]
        sep = min(positive) if positive else Fraction(0)
        report["separation"] = sep
        limit = c.kappa_out if jump is None else jump
        worst = None
        P = range(len(dom.params))
        pairs = [(ib, ia) for ib in rest for ia in every if dom.d_in(ia, ib) <= sep]
        dom.warm([(p, k) for p in P for pair in pairs for k in pair])
        for pa, pb in itertools.product(P, P):
            for ib, ia in pairs:
                h = hausdorff(dom.d_out, dom.result(pa, ia).outputs, dom.result(pb, ib).outputs)
                report["samples"] += 1
                if h > report["max_distance"]:
                    report["max_distance"] = h
                if h > limit and worst is None:
                    worst = dom.witness("general/3", pa, pb, ia, ib, distance=h, bound=limit,
                                        input_distance=dom.d_in(ia, ib))
        report["jump_limit"] = limit
        item3 = doped(worst) if worst is not None else unknown("continuity-report")
    stats = {
        "item1": item1.outcome,
        "item2": item2.outcome,
        "item3": item3.outcome,
        "continuity": report,
        "evaluations": dom.evaluations,
        "seconds": round(time.perf_counter() - t0, 6),
    }
    for v in (item1, item2, item3):
        if v.doped:
            return Verdict("doped", witness=v.witness, stats=stats)
    for v in (item1, item2, item3):
        if v.unknown:
            return Verdict("unknown", witness=v.witness, reason=v.reason, stats=stats)
    return Verdict("clean", stats=stats)


def _same(dom: SeqDomain, pa, pb, ia, ib) -> bool:
    ra, rb = dom.result(pa, ia), dom.result(pb, ib)
    return ra.outputs == rb.outputs


def replay(prog: Program, c: Contract, witness: dict, budget=DEFAULT_BUDGET) -> bool:
    """Re-run a witness and confirm it still violates its definition."""
    ra = evaluate(prog, witness["p"], witness["i"], budget)
    rb = evaluate(prog, witness["p2"], witness["i2"], budget)
    kind = witness["definition"]
    if kind in ("clean", "general/1"):
        return ra.outputs != rb.outputs
    key = lambda v: tuple(v[n] for n in prog.inputs)  # noqa: E731
    dist = c.d_in(key(witness["i"]), key(witness["i2"]))
    if kind == "robust":
        if dist > c.kappa_in:
            return False
        bound = c.kappa_out
    elif kind == "general/3":
        bound = witness["bound"]
    else:
        bound = c.bound()(dist)
    return hausdorff(output_distance(c.d_out), ra.outputs, rb.outputs) > bound


CHECKERS = {
    "clean": check_clean,
    "robust": check_robustly_clean,
    "fclean": check_f_clean,
    "general": check_general_clean,
}
