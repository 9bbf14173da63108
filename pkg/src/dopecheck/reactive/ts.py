"""Finite transition systems over partitioned atomic propositions.

A state's label is the set of propositions true while the system is in
it; a trace is the sequence of labels along an infinite path.  Numeric
signals (throttle, NOx, ...) are stored on proposition bits: the value with
index ``k`` on the signal's grid sets bit ``b`` (proposition ``name_b``)
iff bit ``b`` of ``k`` is one.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..values import Grid, Value, fmt, to_value

ROLES = ("p", "i", "o")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Signal:
    """A numeric quantity encoded on ``width`` proposition bits."""

    name: str
    role: str
    grid: Grid

    @property
    def width(self) -> int:
        return max(1, math.ceil(math.log2(len(self.grid)))) if len(self.grid) > 1 else 1

    @property
    def bits(self) -> tuple[str, ...]:
        return tuple(f"{self.name}_{b}" for b in range(self.width))

    def encode(self, value: Value) -> frozenset[str]:
        k = self.grid.index(value)
        if k is None:
            raise ModelError(f"{fmt(value)} is not on the grid of signal {self.name}")
        return frozenset(f"{self.name}_{b}" for b in range(self.width) if k >> b & 1)

    def decode(self, label: Iterable[str]) -> Value:
        label = set(label)
        k = sum(1 << b for b, prop in enumerate(self.bits) if prop in label)
        if k >= len(self.grid):
            raise ModelError(f"bit pattern {k} outside the grid of signal {self.name}")
        return self.grid.points[k]

    def to_json(self) -> dict:
        return {"name": self.name, "role": self.role, "grid": self.grid.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "Signal":
        return cls(d["name"], d["role"], Grid.from_json(d["grid"]))


@dataclass(frozen=True)
class Lasso:
    """Ultimately periodic trace: ``stem`` then ``loop`` repeated forever."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))
        if not self.loop:
            raise ModelError("lasso loop must be nonempty")

    def __getitem__(self, k: int):
        if k < len(self.stem):
            return self.stem[k]
        return self.loop[(k - len(self.stem)) % len(self.loop)]

    def prefix(self, k: int) -> tuple:
        """Elements ``0..k`` inclusive."""
        return tuple(self[j] for j in range(k + 1))

    def suffix(self, k: int) -> "Lasso":
        if k <= len(self.stem):
            return Lasso(self.stem[k:], self.loop)
        shift = (k - len(self.stem)) % len(self.loop)
        return Lasso((), self.loop[shift:] + self.loop[:shift])

    @property
    def positions(self) -> int:
        return len(self.stem) + len(self.loop)

    def map(self, fn) -> "Lasso":
        return Lasso(tuple(map(fn, self.stem)), tuple(map(fn, self.loop)))

    def normalized(self) -> "Lasso":
        """Canonical form: shortest loop, then shortest stem."""
        loop = self.loop
        n = len(loop)
        for d in range(1, n + 1):
            if n % d == 0 and loop == loop[:d] * (n // d):
                loop = loop[:d]
                break
        stem = self.stem
        while stem and stem[-1] == loop[-1]:
            stem, loop = stem[:-1], (loop[-1],) + loop[:-1]
        return Lasso(stem, loop)

    def same_trace(self, other: "Lasso") -> bool:
        return self.normalized() == other.normalized()


def project(t: Lasso, props: Iterable[str]) -> Lasso:
    keep = frozenset(props)
    return t.map(lambda letter: frozenset(letter) & keep)


@dataclass
class TransitionSystem:
    """States ``0..n-1`` with labels, initial states and successor lists."""

    ap_p: tuple[str, ...]
    ap_i: tuple[str, ...]
    ap_o: tuple[str, ...]
    labels: list[frozenset]
    init: tuple[int, ...]
    succ: list[tuple[int, ...]]
    signals: tuple[Signal, ...] = ()
    names: list[str] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ap_p, self.ap_i, self.ap_o = tuple(self.ap_p), tuple(self.ap_i), tuple(self.ap_o)
        self.labels = [frozenset(label) for label in self.labels]
        self.init = tuple(self.init)
        self.succ = [tuple(s) for s in self.succ]
        self.signals = tuple(self.signals)
        self.validate()

    # -- structure -----------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def ap(self) -> frozenset:
        return frozenset(self.ap_p) | frozenset(self.ap_i) | frozenset(self.ap_o)

    @property
    def transitions(self) -> int:
        return sum(len(s) for s in self.succ)

    def validate(self) -> None:
        p, i, o = set(self.ap_p), set(self.ap_i), set(self.ap_o)
        if p & i or p & o or i & o:
            raise ModelError("parameter, input and output propositions must be disjoint")
        if len(self.succ) != self.n:
            raise ModelError("every state needs a successor list")
        if not self.init:
            raise ModelError("no initial state")
        allowed = p | i | o
        for s in range(self.n):
            extra = self.labels[s] - allowed
            if extra:
                raise ModelError(f"state {s} carries undeclared propositions {sorted(extra)}")
            if not self.succ[s]:
                raise ModelError(f"state {s} has no successor; traces must be infinite")
            for t in self.succ[s]:
                if not 0 <= t < self.n:
                    raise ModelError(f"transition {s} -> {t} leaves the state space")
                if self.labels[s] & p != self.labels[t] & p:
                    raise ModelError(f"parameter bits change on transition {s} -> {t}")
        for s in self.init:
            if not 0 <= s < self.n:
                raise ModelError(f"initial state {s} does not exist")

    @cached_property
    def reachable(self) -> list[int]:
        seen = set(self.init)
        queue = deque(self.init)
        while queue:
            s = queue.popleft()
            for t in self.succ[s]:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return sorted(seen)

    def restrict_reachable(self) -> "TransitionSystem":
        keep = self.reachable
        if len(keep) == self.n:
            return self
        index = {s: k for k, s in enumerate(keep)}
        return TransitionSystem(
            self.ap_p, self.ap_i, self.ap_o,
            [self.labels[s] for s in keep],
            [index[s] for s in self.init],
            [[index[t] for t in self.succ[s]] for s in keep],
            self.signals,
            [self.names[s] for s in keep] if self.names else None,
            dict(self.meta),
        )

    # -- label views ----------------------------------------------------------
    def part(self, s: int, role: str) -> frozenset:
        props = {"p": self.ap_p, "i": self.ap_i, "o": self.ap_o}[role]
        return self.labels[s] & frozenset(props)

    def signal(self, name: str) -> Signal:
        for sig in self.signals:
            if sig.name == name:
                return sig
        raise KeyError(name)

    def signals_of(self, role: str) -> tuple[Signal, ...]:
        return tuple(s for s in self.signals if s.role == role)

    def decode(self, label: Iterable[str]) -> dict:
        """Signal values plus one boolean per proposition."""
        label = frozenset(label)
        env: dict = {prop: prop in label for prop in self.ap}
        for sig in self.signals:
            env[sig.name] = sig.decode(label)
        return env

    def value(self, s: int, role: str):
        """Hashable view of a state's parameter/input/output part."""
        sigs = self.signals_of(role)
        if sigs:
            return tuple(sig.decode(self.labels[s]) for sig in sigs)
        return self.part(s, role)

    @property
    def receptive(self) -> bool:
        """Every input letter of the model can be read initially (for every
        parameter) and after every reachable state."""
        letters = {self.part(s, "i") for s in range(self.n)}
        params = {self.part(s, "p") for s in self.init}
        for p in params:
            if {self.part(s, "i") for s in self.init if self.part(s, "p") == p} != letters:
                return False
        for s in self.reachable:
            have = {self.part(t, "i") for t in self.succ[s]}
            if have != letters:
                return False
        return True

    # -- traces -----------------------------------------------------------------
    def lassos(self, max_positions: int, limit: int | None = None):
        """State lassos (stem, loop) of at most ``max_positions`` states."""
        count = 0
        stack = [(s,) for s in reversed(self.init)]
        while stack:
            path = stack.pop()
            last = path[-1]
            for t in self.succ[last]:
                if t in path:
                    k = path.index(t)
                    yield path[:k], path[k:]
                    count += 1
                    if limit is not None and count >= limit:
                        return
            if len(path) < max_positions:
                for t in reversed(self.succ[last]):
                    if t not in path:
                        stack.append(path + (t,))

    def trace_of(self, stem: Sequence[int], loop: Sequence[int]) -> Lasso:
        return Lasso(tuple(self.labels[s] for s in stem), tuple(self.labels[s] for s in loop))

    def is_path(self, stem: Sequence[int], loop: Sequence[int]) -> bool:
        seq = list(stem) + list(loop)
        if not seq or seq[0] not in self.init:
            return False
        if any(b not in self.succ[a] for a, b in zip(seq, seq[1:])):
            return False
        return loop[0] in self.succ[seq[-1]]

    # -- serialisation -----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "ap": {"p": list(self.ap_p), "i": list(self.ap_i), "o": list(self.ap_o)},
            "signals": [s.to_json() for s in self.signals],
            "states": [
                {"id": k, "label": sorted(self.labels[k]), **({"name": self.names[k]} if self.names else {})}
                for k in range(self.n)
            ],
            "init": list(self.init),
            "transitions": [[s, t] for s in range(self.n) for t in self.succ[s]],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TransitionSystem":
        states = sorted(d["states"], key=lambda s: s["id"])
        ids = [s["id"] for s in states]
        if ids != list(range(len(ids))):
            raise ModelError("state ids must be 0..n-1")
        succ: list[list[int]] = [[] for _ in states]
        for s, t in d["transitions"]:
            succ[s].append(t)
        names = [s.get("name", str(s["id"])) for s in states] if any("name" in s for s in states) else None
        return cls(
            d["ap"].get("p", []), d["ap"].get("i", []), d["ap"].get("o", []),
            [frozenset(s["label"]) for s in states], d["init"], succ,
            tuple(Signal.from_json(x) for x in d.get("signals", [])), names, d.get("meta", {}),
        )


def load_model(path: str | Path) -> TransitionSystem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON: {exc}") from exc
    return TransitionSystem.from_json(data)


def dump_model(ts: TransitionSystem, path: str | Path | None = None) -> str:
    text = json.dumps(ts.to_json(), indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


class Builder:
    """Incremental construction keyed by arbitrary hashable state names."""

    def __init__(self, signals: Sequence[Signal] = (), ap_p=(), ap_i=(), ap_o=()):
        self.signals = tuple(signals)
        self.ap = {"p": list(ap_p), "i": list(ap_i), "o": list(ap_o)}
        for sig in self.signals:
            self.ap[sig.role].extend(sig.bits)
        self.index: dict = {}
        self.labels: list[frozenset] = []
        self.succ: list[set[int]] = []
        self.init: list[int] = []

    def state(self, key, label: Iterable[str] = (), values: Mapping[str, Value] | None = None) -> int:
        if key in self.index:
            return self.index[key]
        lab = set(label)
        for name, v in (values or {}).items():
            lab |= next(s for s in self.signals if s.name == name).encode(v)
        self.index[key] = len(self.labels)
        self.labels.append(frozenset(lab))
        self.succ.append(set())
        return self.index[key]

    def initial(self, s: int) -> None:
        if s not in self.init:
            self.init.append(s)

    def edge(self, s: int, t: int) -> None:
        self.succ[s].add(t)

    def build(self, meta: dict | None = None) -> TransitionSystem:
        names = [str(k) for k in self.index]
        return TransitionSystem(
            self.ap["p"], self.ap["i"], self.ap["o"], self.labels, self.init,
            [sorted(s) for s in self.succ], self.signals, names, meta or {},
        )


# --- the model as a function from parameters and inputs to output traces ---


@dataclass
class OutputSet:
    """Output traces of a model for one parameter letter and input lasso.

    Internally this is the model restricted to runs that read the input
    lasso: nodes are ``(state, position)`` pairs, and only nodes with an
    infinite continuation are kept.
    """

    ts: TransitionSystem
    inputs: Lasso
    init: tuple
    succ: dict

    def __bool__(self) -> bool:
        return bool(self.init)

    def prefixes(self, k: int) -> set[tuple]:
        """Output prefixes ``o[0..k]``."""
        out = set()
        frontier = {(node, (self.ts.part(node[0], "o"),)) for node in self.init}
        for _ in range(k):
            frontier = {(m, seq + (self.ts.part(m[0], "o"),)) for node, seq in frontier for m in self.succ[node]}
        for _, seq in frontier:
            out.add(seq)
        return out

    def contains(self, outputs: Lasso) -> bool:
        """Is ``outputs`` one of the output traces?"""
        start = [(node, 0) for node in self.init if self.ts.part(node[0], "o") == outputs[0]]
        seen = set()
        stack = list(start)
        period = len(outputs.loop)
        stem = len(outputs.stem)

        def norm(j):
            return j if j < stem else stem + (j - stem) % period

        # a cycle in the (node, output position) graph gives an infinite run
        graph: dict = {}
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            node, j = v
            nj = norm(j + 1)
            nexts = [(m, nj) for m in self.succ[node] if self.ts.part(m[0], "o") == outputs[nj]]
            graph[v] = nexts
            stack.extend(nexts)
        return _has_infinite_path(graph, [v for v in start])

    def lassos(self, max_positions: int) -> set[Lasso]:
        """Output lassos realised by runs whose node lasso has at most ``max_positions`` nodes."""
        out = set()
        stack = [(node,) for node in self.init]
        while stack:
            path = stack.pop()
            for m in self.succ[path[-1]]:
                if m in path:
                    k = path.index(m)
                    lab = lambda node: self.ts.part(node[0], "o")  # noqa: E731
                    out.add(Lasso(tuple(map(lab, path[:k])), tuple(map(lab, path[k:]))).normalized())
                elif len(path) < max_positions:
                    stack.append(path + (m,))
        return out


def _has_infinite_path(graph: dict, start: list) -> bool:
    """Is a cycle reachable from ``start``?  (Iterative DFS with colours.)"""
    colour: dict = {}
    for s in start:
        if s in colour:
            continue
        stack = [(s, iter(graph.get(s, ())))]
        colour[s] = 1
        while stack:
            v, it = stack[-1]
            for w in it:
                c = colour.get(w, 0)
                if c == 1:
                    return True
                if c == 0:
                    colour[w] = 1
                    stack.append((w, iter(graph.get(w, ()))))
                    break
            else:
                colour[v] = 2
                stack.pop()
    return False


def as_function(ts: TransitionSystem, param: Iterable[str], inputs: Lasso) -> OutputSet:
    """Output traces for parameter letter ``param`` and input lasso ``inputs``."""
    param = frozenset(param)
    period, stem = len(inputs.loop), len(inputs.stem)

    def norm(j):
        return j if j < stem else stem + (j - stem) % period

    def ok(s, j):
        return ts.part(s, "i") == frozenset(inputs[j]) & frozenset(ts.ap_i)

    init = [(s, 0) for s in ts.init if ts.part(s, "p") == param & frozenset(ts.ap_p) and ok(s, 0)]
    succ: dict = {}
    stack = list(init)
    while stack:
        v = stack.pop()
        if v in succ:
            continue
        s, j = v
        nj = norm(j + 1)
        succ[v] = [(t, nj) for t in ts.succ[s] if ok(t, nj)]
        stack.extend(succ[v])
    # keep only nodes with an infinite continuation (greatest fixpoint)
    alive = set(succ)
    changed = True
    while changed:
        changed = False
        for v in list(alive):
            if not any(w in alive for w in succ[v]):
                alive.discard(v)
                changed = True
    pruned = {v: [w for w in succ[v] if w in alive] for v in alive}
    return OutputSet(ts, inputs, tuple(v for v in init if v in alive), pruned)
