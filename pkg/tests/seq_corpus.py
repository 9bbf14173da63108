"""Seeded generator of small sequential programs and contracts.

Every program has one parameter ``p``, one input ``x`` and one output ``y``.
The flags choose whether loops and nondeterministic choices may appear.
"""
from __future__ import annotations

import random
from fractions import Fraction

from dopecheck.contracts import Contract, Distance, affine, threshold
from dopecheck.seqlang import Program, parse

DECLS = (
    "param p in [0, 2] step 1;\n"
    "input x in [0, 3] step 1;\n"
    "output y in [0, 6] step 1;\n"
    "var t in [0, 6] step 1;\n"
)

TERMS = ("p", "x", "p + x", "2 * x - p", "max(x, p)", "abs(x - p)", "x * p", "x + 1", "3 - x", "1")
CONDS = ("x <= {c}", "p == {c}", "x in [{c}, 3]", "p + x > {c}", "x != p", "p >= {c} && x < 2")


def _cond(rng: random.Random) -> str:
    return rng.choice(CONDS).format(c=rng.randint(0, 2))


def _stmt(rng: random.Random, depth: int, loops: bool, nondet: bool) -> str:
    roll = rng.random()
    if depth > 0 and roll < 0.35:
        then = _block(rng, depth - 1, loops, nondet)
        other = _block(rng, depth - 1, loops, nondet)
        return f"if {_cond(rng)} {{\n{then}\n}} else {{\n{other}\n}}"
    if nondet and roll < 0.5:
        a = rng.choice(("x", "p", "0", "t"))
        return f"y :in [{a}, {a} + {rng.randint(0, 2)}]"
    if loops and roll < 0.6:
        if rng.random() < 0.2:
            return f"while p == {rng.randint(1, 2)} && x == {rng.randint(0, 3)} {{ skip }}"
        return f"t := 0; while t < {rng.choice(('x', 'p', '2'))} {{ t := t + 1; y := y + 1 }}"
    target = rng.choice(("y", "y", "t"))
    term = rng.choice(TERMS + ("t", "y + t"))
    return f"{target} := {term}"


def _block(rng: random.Random, depth: int, loops: bool, nondet: bool) -> str:
    return ";\n".join(_stmt(rng, depth, loops, nondet) for _ in range(rng.randint(1, 2)))


def random_source(seed: int, loops: bool = True, nondet: bool = True) -> str:
    rng = random.Random(seed)
    body = ";\n".join(["y := 0", "t := 0"] + [_stmt(rng, 2, loops, nondet) for _ in range(rng.randint(1, 3))])
    return DECLS + body + "\n"


def random_program(seed: int, loops: bool = True, nondet: bool = True) -> Program:
    return parse(random_source(seed, loops, nondet))


def random_contract(seed: int) -> Contract:
    rng = random.Random(10_000 + seed)
    lo = rng.randint(0, 2)
    stdin = rng.choice((f"x in [{lo}, {rng.randint(lo, 3)}]", "true", f"x == {lo}"))
    pintrs = rng.choice((None, "p <= 1", "p != 1"))
    kin, kout = Fraction(rng.randint(0, 2)), Fraction(rng.randint(0, 3))
    return Contract(stdin=stdin, pintrs=pintrs, kappa_in=kin, kappa_out=kout,
                    f=affine(Fraction(rng.randint(0, 4), 2), Fraction(rng.randint(0, 2))))


def discrete_contract(c: Contract) -> Contract:
    """Distances that only tell equal from different, with zero tolerances."""
    d = Distance("discrete", threshold=Fraction(1))
    return c.replace(d_in=d, d_out=d, kappa_in=Fraction(0), kappa_out=Fraction(0), f=None)


def threshold_contract(c: Contract) -> Contract:
    return c.replace(f=threshold(c.kappa_in, c.kappa_out))


def corpus(count: int = 60, loops: bool = True, nondet: bool = True) -> list[tuple[int, Program, Contract]]:
    return [(seed, random_program(seed, loops, nondet), random_contract(seed)) for seed in range(count)]
