"""Generators for the printer and emission-control examples.

Throttle values live on ``(0, hi]`` with step ``thr_step``; the lab test
values (the standard inputs) are the grid points in ``(0, 1]``.  The
reactive models keep the last NOx reading as their only memory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .contracts import Contract, affine, past_forgetful
from .reactive.ts import Builder, Signal, TransitionSystem
from .seqlang import Program, parse
from .values import Grid, fmt, to_value


@dataclass(frozen=True)
class EcuConfig:
    thr_step: Fraction = Fraction(1, 10)
    thr_hi: Fraction = Fraction(2)
    nox_step: Fraction = Fraction(1, 20)
    lam: Fraction = Fraction(1, 10)
    k: Fraction = Fraction(2)
    test_hi: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("thr_step", "thr_hi", "nox_step", "lam", "k", "test_hi"):
            object.__setattr__(self, name, to_value(getattr(self, name)))
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if (self.thr_hi / self.thr_step).denominator != 1:
            raise ValueError("throttle step must divide the throttle range")
        if (self.test_hi / self.thr_step).denominator != 1:
            raise ValueError("throttle step must divide the test range")

    @property
    def throttle(self) -> Grid:
        return Grid(0, self.thr_hi, self.thr_step, lo_open=True)

    @property
    def test_values(self) -> Grid:
        return Grid(0, self.test_hi, self.thr_step, lo_open=True)

    def is_test(self, t: Fraction) -> bool:
        return 0 < t <= self.test_hi

    def stdin(self) -> str:
        return f"thrtl in (0, {fmt(self.test_hi)}]"


COARSE = EcuConfig(thr_step=Fraction(1, 2), nox_step=Fraction(1, 4))


# --- sequential programs ---------------------------------------------------------

def _seq_source(cfg: EcuConfig, doped: bool) -> str:
    hi_nox = _ceil_to(cfg.thr_hi ** 2 / 2, Fraction(1, 1000))
    decls = (
        f"input thrtl in (0, {fmt(cfg.thr_hi)}] step {fmt(cfg.thr_step)};\n"
        f"output NOx in [0, {fmt(max(hi_nox, Fraction(4)))}] step 0.001;\n"
        f"var def_dose in [0, {fmt(max(cfg.thr_hi ** 2, Fraction(4)))}] step 0.01;\n"
    )
    if doped:
        body = (
            f"if thrtl in (0, {fmt(cfg.test_hi)}] {{\n  def_dose := thrtl^2\n}} else {{\n  def_dose := thrtl\n}};\n"
        )
    else:
        body = "def_dose := thrtl^2;\n"
    return decls + body + "NOx := thrtl^3 / (2 * def_dose)\n"


def build_seq_ec(cfg: EcuConfig = EcuConfig()) -> Program:
    return parse(_seq_source(cfg, doped=False))


def build_seq_aec(cfg: EcuConfig = EcuConfig()) -> Program:
    return parse(_seq_source(cfg, doped=True))


def seq_source(program: str, cfg: EcuConfig = EcuConfig()) -> str:
    return _seq_source(cfg, doped=program == "aec")


def seq_contract(cfg: EcuConfig = EcuConfig(), f=None) -> Contract:
    """In = throttle grid, StdIn = test values, kappa_i = 2, kappa_o = 1."""
    return Contract(stdin=cfg.stdin(), kappa_in=Fraction(2), kappa_out=Fraction(1),
                    f=f if f is not None else affine(Fraction(1, 2)))


# --- reactive models ------------------------------------------------------------------


def _ceil_to(x: Fraction, step: Fraction) -> Fraction:
    return math.ceil(x / step) * step


def _dose(cfg: EcuConfig, t: Fraction, prev: Fraction, doped: bool) -> Fraction:
    if doped and not cfg.is_test(t):
        return t  # altSCRModel ignores the feedback
    return t * t if cfg.k * prev <= t else (1 + cfg.lam) * t * t


def nox_interval(cfg: EcuConfig, t: Fraction, prev: Fraction, doped: bool) -> tuple[Fraction, Fraction]:
    centre = t ** 3 / (cfg.k * _dose(cfg, t, prev, doped))
    return (1 - cfg.lam) * centre, (1 + cfg.lam) * centre


def nox_grid(cfg: EcuConfig, doped: bool) -> Grid:
    top = max(nox_interval(cfg, t, Fraction(0), doped)[1] for t in cfg.throttle)
    return Grid(0, _ceil_to(top, cfg.nox_step), cfg.nox_step)


def _build_react(cfg: EcuConfig, doped: bool) -> TransitionSystem:
    thr = cfg.throttle
    nox = nox_grid(cfg, doped)
    sig_t, sig_n = Signal("thrtl", "i", thr), Signal("NOx", "o", nox)
    b = Builder([sig_t, sig_n])

    def options(t, prev):
        lo, hi = nox_interval(cfg, t, prev, doped)
        return nox.outward(lo, hi)

    def state(t, n):
        return b.state((fmt(t), fmt(n)), values={"thrtl": t, "NOx": n})

    frontier = []
    for t in thr:
        for n in options(t, Fraction(0)):
            s = state(t, n)
            b.initial(s)
            frontier.append((t, n))
    seen = set(frontier)
    while frontier:
        t, n = frontier.pop()
        s = state(t, n)
        for t2 in thr:
            for n2 in options(t2, n):
                b.edge(s, state(t2, n2))
                if (t2, n2) not in seen:
                    seen.add((t2, n2))
                    frontier.append((t2, n2))
    meta = {"model": "aec" if doped else "ec", "thr_step": fmt(cfg.thr_step),
            "nox_step": fmt(cfg.nox_step), "lambda": fmt(cfg.lam), "k": fmt(cfg.k)}
    return b.build(meta)


def build_react_ec(cfg: EcuConfig = EcuConfig()) -> TransitionSystem:
    return _build_react(cfg, doped=False)


def build_react_aec(cfg: EcuConfig = EcuConfig()) -> TransitionSystem:
    return _build_react(cfg, doped=True)


def react_contract(cfg: EcuConfig = EcuConfig(), f=None) -> Contract:
    """Past-forgetful absolute differences, kappa_i = 2, kappa_o = 1.1, f(x) = x/2 + 0.3."""
    return Contract(
        stdin=f"G({cfg.stdin()})",
        d_in=past_forgetful(), d_out=past_forgetful(),
        kappa_in=Fraction(2), kappa_out=Fraction(11, 10),
        f=f if f is not None else affine(Fraction(1, 2), Fraction(3, 10)),
    )


# --- printers ---------------------------------------------------------------------------

PRINTER_DECLS = """\
# cartridge: type 0-1 compatible, 2 not; brand 0 is my-brand
param ctype in [0, 2] step 1, brand in [0, 2] step 1, supports_new in [0, 1] step 1;
input new_doc in [0, 1] step 1;
# 0 printed, 1 alert led, 2 alert signal
output out in [0, 2] step 1;
"""

PRINTER_BODIES = {
    "general": "if ctype <= 1 {\n  out := 0\n} else {\n  out := 1\n}\n",
    "doped": "if brand == 0 {\n  out := 0\n} else {\n  out := 1\n}\n",
    "extended": (
        "if ctype <= 1 {\n  if new_doc == 0 || supports_new == 1 {\n    out := 0\n  } else {\n    out := 1\n  }\n"
        "} else {\n  out := 2\n}\n"
    ),
}


def printer_source(variant: str) -> str:
    if variant not in PRINTER_BODIES:
        raise ValueError(f"unknown printer variant {variant!r}")
    return PRINTER_DECLS + PRINTER_BODIES[variant]


def build_printer(variant: str = "general") -> Program:
    return parse(printer_source(variant))


def printer_contract(standard_only: bool = False) -> Contract:
    """Compatible cartridges; with ``standard_only`` only old-type documents are standard."""
    return Contract(stdin="new_doc == 0" if standard_only else "true", pintrs="ctype <= 1")
