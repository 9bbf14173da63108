"""Seeded generator of small receptive reactive models and contracts."""
from __future__ import annotations

import random
from fractions import Fraction

from dopecheck.contracts import Contract, affine, past_forgetful
from dopecheck.reactive.ts import Builder, Signal
from dopecheck.values import Grid


def random_model(seed: int, n_states: int = 8, params: bool = False, det: bool = False):
    rng = random.Random(seed)
    sig_i = Signal("x", "i", Grid(0, 2, 1))
    sig_o = Signal("y", "o", Grid(0, 3, 1))
    sigs = [sig_i, sig_o]
    if params:
        sigs.append(Signal("p", "p", Grid(0, 1, 1)))
    b = Builder(sigs)
    pvals = [0, 1] if params else [None]
    states = []
    for k in range(n_states):
        p = pvals[k % len(pvals)]
        x = (k // len(pvals)) % 3
        y = rng.randrange(4)
        vals = {"x": Fraction(x), "y": Fraction(y)}
        if p is not None:
            vals["p"] = Fraction(p)
        states.append((b.state(k, values=vals), p, x))
    by = {}
    for s, p, x in states:
        by.setdefault((p, x), []).append(s)
    fan = 1 if det else 2
    for p in pvals:
        for x in range(3):
            for s in rng.sample(by[(p, x)], min(len(by[(p, x)]), rng.randint(1, fan))):
                b.initial(s)
    for s, p, _ in states:
        for x in range(3):
            for t in rng.sample(by[(p, x)], min(len(by[(p, x)]), rng.randint(1, fan))):
                b.edge(s, t)
    return b.build({"seed": seed})


def random_contract(seed: int, params: bool = False) -> Contract:
    rng = random.Random(seed * 7919 + 1)
    return Contract(
        stdin=rng.choice(["G(x <= 1)", "G(x == 0)", "true"]),
        pintrs="p <= 1" if params else None,
        d_in=past_forgetful(), d_out=past_forgetful(),
        kappa_in=Fraction(rng.choice([0, 1, 2])), kappa_out=Fraction(rng.choice([0, 1, 2])),
        f=affine(Fraction(1, 2), Fraction(rng.choice([0, 1]))),
    )


def corpus(count: int = 24):
    """``count`` (model, contract) pairs: deterministic and nondeterministic, with and without parameters."""
    out = []
    for seed in range(count):
        params = seed % 3 == 2
        det = seed % 4 == 0
        n = 6 + seed % 7
        if params and n % 2:
            n += 1
        out.append((random_model(seed, n, params, det), random_contract(seed, params)))
    return out
