"""``dopecheck`` command line.

Exit codes: 0 clean, 1 doped, 2 unknown, 64 usage error, 65 unreadable or
malformed input.  ``table`` exits 0 iff every row has its expected verdict.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .contracts import load_contract
from .seqlang import DEFAULT_BUDGET, EvalError, ParseError, parse
from .verdict import Verdict, jsonable

EXIT_USAGE = 64
EXIT_DATAERR = 65
PROPERTIES = ("clean", "robust", "fclean")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    """Everything a run decided; both renderings are produced from ``to_json``."""

    command: list[str]
    digests: dict[str, str] = field(default_factory=dict)
    verdicts: list[tuple[str, Verdict]] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    duration: float = 0.0

    @property
    def verdict(self) -> Verdict:
        return self.verdicts[-1][1]

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code

    def explored(self) -> int | None:
        total = None
        for _, v in self.verdicts:
            for key in ("explored", "states", "evaluations", "cells"):
                if isinstance(v.stats.get(key), int):
                    total = (total or 0) + v.stats[key]
                    break
        return total

    def to_json(self) -> dict:
        return jsonable({
            "command": self.command, "digests": self.digests,
            "verdicts": [{"check": label, **_untimed(v.to_json())} for label, v in self.verdicts],
            "verdict": self.verdict.outcome, "explored": self.explored(), **self.extra,
            "duration_seconds": round(self.duration, 3),
        })

    def render(self) -> str:
        data = self.to_json()
        lines = [f"command: {' '.join(data['command'])}"]
        lines += [f"digest:  {name} sha256:{h}" for name, h in data["digests"].items()]
        for text in data.get("conditions", []):
            lines.append(text.rstrip("\n"))
        for item in data["verdicts"]:
            lines.append(f"{item['check']}: {item['verdict'].upper()}"
                         + (f" ({item['reason']})" if item.get("reason") else ""))
            if "witness" in item:
                lines.append("  witness: " + json.dumps(item["witness"], sort_keys=True))
            if "witness_count" in item:
                lines.append(f"  witnesses: {item['witness_count']}")
            if "stats" in item:
                lines.append("  stats: " + json.dumps(item["stats"], sort_keys=True))
        for w in data.get("witnesses", []):
            lines.append("  - " + json.dumps(w, sort_keys=True))
        lines.append(f"verdict: {data['verdict'].upper()}")
        if data["explored"] is not None:
            lines.append(f"explored: {data['explored']}")
        lines.append(f"duration: {data['duration_seconds']} s")
        return "\n".join(lines)


def _untimed(data: dict) -> dict:
    """Drop per-check timings so a report only varies in ``duration_seconds``."""
    if "stats" in data:
        data["stats"] = {k: v for k, v in data["stats"].items() if k != "seconds"}
    return data


# --- helpers -----------------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _program(path: str):
    try:
        return parse(_read(path))
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _contract(path: str):
    _read(path)
    try:
        return load_contract(path)
    except (ValueError, KeyError, TypeError, ParseError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _model(path: str):
    from .reactive import load_model

    _read(path)
    try:
        return load_model(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _jobs(args) -> int:
    if args.jobs is not None:
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return args.jobs
    env = os.environ.get("DOPECHECK_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"DOPECHECK_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _all_witnesses(v: Verdict, args) -> dict:
    return {"witnesses": list(v.witnesses)} if args.all_witnesses and v.witnesses else {}


def _emit(report: RunReport, args) -> int:
    print(json.dumps(report.to_json(), indent=2, sort_keys=True) if args.json else report.render())
    return report.exit_code


# --- subcommands -----------------------------------------------------------------------------------


def cmd_seq(args) -> int:
    from .seqcheck import CHECKERS, check_general_clean

    t0 = time.perf_counter()
    prog, c = _program(args.program), _contract(args.contract)
    kw = {"budget": args.budget, "jobs": _jobs(args), "collect": args.all_witnesses}
    if args.property == "general":
        v = check_general_clean(prog, c, **kw)
    else:
        v = CHECKERS[args.property](prog, c, **kw)
    report = RunReport(args.argv, {args.program: _digest(args.program), args.contract: _digest(args.contract)},
                       [(f"seq {args.property}", v)], _all_witnesses(v, args))
    report.duration = time.perf_counter() - t0
    return _emit(report, args)


def cmd_wp(args) -> int:
    from .wpengine import UnsupportedConstruct, build_vcs, check_vcs

    t0 = time.perf_counter()
    prog, c = _program(args.program), _contract(args.contract)
    if args.unroll < 0:
        raise UsageError("--unroll must be non-negative")
    try:
        vcs = build_vcs(prog, c, args.property, args.unroll)
    except UnsupportedConstruct as exc:
        raise InputError(str(exc)) from exc
    text = [vc.render() for vc in vcs]
    if args.emit_vc:
        Path(args.emit_vc).write_text("".join(text))
    v = check_vcs(prog, vcs, collect=args.all_witnesses)
    report = RunReport(args.argv, {args.program: _digest(args.program), args.contract: _digest(args.contract)},
                       [(f"wp {args.property}", v)], {"conditions": text, **_all_witnesses(v, args)})
    report.duration = time.perf_counter() - t0
    return _emit(report, args)


def cmd_hyper(args) -> int:
    from . import hypercheck as hc

    t0 = time.perf_counter()
    if (args.a is None) != (args.b is None):
        raise UsageError("--a and --b must be given together")
    if args.a is not None and args.mode != "strengthen":
        raise UsageError("--a/--b select a refutation instance and need --mode strengthen")
    if args.a is not None and args.property == "clean":
        raise UsageError("refutation instances exist for robust and fclean only")
    ts, c = _model(args.model), _contract(args.contract)
    view = hc.ModelView(ts, c)
    if args.mode == "strengthen" and args.a is None:
        label, v = f"strengthened {args.property}", hc.check_strengthened(view, prop=args.property,
                                                                          budget=args.budget)
    elif args.mode == "strengthen":
        orient = ("a", "b") if args.orientation == "both" else (args.orientation,)
        label = f"negation {args.property} a={args.a} b={args.b}"
        v = hc.check_negation_instance(view, None, args.a, args.b, args.property, orient, budget=args.budget)
    elif args.mode == "exact":
        label = f"exact {args.property}"
        v = hc.check_forall_forall_exists_exact(view, prop=args.property, budget=args.exact_budget)
    else:
        if args.depth is not None and args.depth < 1:
            raise UsageError("--depth must be at least 1")
        label = f"oracle {args.property}"
        v = hc.bounded_oracle(view, prop=args.property, depth=args.depth)
    report = RunReport(args.argv, {args.model: _digest(args.model), args.contract: _digest(args.contract)},
                       [(label, v)], {"model": {"states": ts.n, "transitions": ts.transitions}})
    report.duration = time.perf_counter() - t0
    return _emit(report, args)


def cmd_casestudy(args) -> int:
    from . import casestudy as cs
    from .contracts import dump_contract
    from .reactive import dump_model

    try:
        cfg = cs.EcuConfig(nox_step=args.nox_step, thr_step=args.thr_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.kind == "seq":
        text = cs.seq_source(args.model, cfg)
        contract = cs.seq_contract(cfg)
    else:
        ts = (cs.build_react_ec if args.model == "ec" else cs.build_react_aec)(cfg)
        text = dump_model(ts)
        contract = cs.react_contract(cfg)
        print(f"{args.model}: {ts.n} states, {ts.transitions} transitions", file=sys.stderr)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.contract:
        dump_contract(contract, args.contract)
    return 0


def cmd_table(args) -> int:
    from . import tables

    programs = (args.program,) if args.program else ("ec", "aec")
    props = (args.property,) if args.property else tables.PROPERTIES
    steps = (args.nox_step,) if args.nox_step is not None else tables.NOX_STEPS
    results = tables.run_matrix(tables.matrix(props, programs, steps))
    bad = [r for r in results if not r.matches]
    if args.json:
        print(json.dumps({"rows": [r.to_json() for r in results], "mismatches": len(bad)}, indent=2))
    else:
        print(tables.render(results))
        if bad:
            print(f"\n{len(bad)} row(s) differ from the expected verdict:", file=sys.stderr)
            for r in bad:
                print(f"  {r.row.prop} {r.row.program} {r.row.instance}: {r.outcome}"
                      + (f" ({r.reason})" if r.reason else ""), file=sys.stderr)
    return 1 if bad else 0


def cmd_report(args) -> int:
    from .report import write_report

    steps = (args.nox_step,) if args.nox_step is not None else None
    paths = write_report(args.out, nox_steps=steps, jobs=_jobs(args))
    for p in paths:
        print(p)
    return 0


# --- parser -------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dopecheck", description="Decide cleanness of programs and reactive models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, jobs=True):
        sp.add_argument("--json", action="store_true", help="print the report as JSON")
        if jobs:
            sp.add_argument("--jobs", type=int, default=None,
                            help="worker processes (default: $DOPECHECK_JOBS, else logical cores)")

    s = sub.add_parser("seq", help="enumerate a sequential program against a contract")
    s.add_argument("program")
    s.add_argument("contract")
    s.add_argument("--property", choices=(*PROPERTIES, "general"), default="robust")
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="evaluation step budget per run")
    s.add_argument("--all-witnesses", action="store_true", help="collect every violating tuple")
    common(s)
    s.set_defaults(func=cmd_seq)

    w = sub.add_parser("wp", help="weakest-precondition verification conditions")
    w.add_argument("program")
    w.add_argument("contract")
    w.add_argument("--property", choices=PROPERTIES, default="robust")
    w.add_argument("--unroll", type=int, default=64, help="loop unrolling bound")
    w.add_argument("--emit-vc", metavar="FILE", help="also write the conditions to FILE")
    w.add_argument("--all-witnesses", action="store_true", help="collect every counterexample state")
    common(w, jobs=False)
    w.set_defaults(func=cmd_wp)

    h = sub.add_parser("hyper", help="check a finite reactive model")
    h.add_argument("model")
    h.add_argument("contract")
    h.add_argument("--mode", choices=("strengthen", "exact", "oracle"), default="strengthen")
    h.add_argument("--property", choices=PROPERTIES, default="robust")
    h.add_argument("--a", type=_fraction, help="constant input of the first trace (refutation instance)")
    h.add_argument("--b", type=_fraction, help="constant input of the second trace (refutation instance)")
    h.add_argument("--orientation", choices=("a", "b", "both"), default="both")
    h.add_argument("--depth", type=int, help="oracle prefix depth (default: 2 n^2, capped)")
    h.add_argument("--budget", type=int, default=60_000_000, help="product cells per search")
    h.add_argument("--exact-budget", type=int, default=200_000, help="macro states in exact mode")
    common(h, jobs=False)
    h.set_defaults(func=cmd_hyper)

    c = sub.add_parser("casestudy", help="emit the emission-control models")
    c.add_argument("--model", choices=("ec", "aec"), required=True)
    c.add_argument("--kind", choices=("seq", "react"), default="react")
    c.add_argument("--nox-step", type=_fraction, default=Fraction(1, 20))
    c.add_argument("--thr-step", type=_fraction, default=Fraction(1, 10))
    c.add_argument("-o", "--output", help="model file (default: stdout)")
    c.add_argument("--contract", metavar="FILE", help="also write the matching contract")
    c.set_defaults(func=cmd_casestudy)

    t = sub.add_parser("table", help="run the case-study verdict matrix")
    t.add_argument("--program", choices=("ec", "aec"))
    t.add_argument("--property", choices=("robust", "fclean"))
    t.add_argument("--nox-step", type=_fraction)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_table)

    r = sub.add_parser("report", help="write CSV tables and figures")
    r.add_argument("--out", default="report")
    r.add_argument("--nox-step", type=_fraction)
    r.add_argument("--jobs", type=int, default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.argv = ["dopecheck", *argv]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dopecheck: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, ParseError) as exc:
        print(f"dopecheck: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except EvalError as exc:
        print(f"dopecheck: {args.program}: run-time error: {exc}", file=sys.stderr)
        return EXIT_DATAERR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
