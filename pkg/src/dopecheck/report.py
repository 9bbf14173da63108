"""CSV tables and figures for the emission-control study.

``write_report`` runs the sequential checks, the reactive verdict matrix
and a few direct evaluations, writes each as CSV and renders matching
figures with matplotlib.
"""
from __future__ import annotations

import csv
import time
from collections import deque
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import casestudy as cs, tables  # noqa: E402
from .contracts import hausdorff  # noqa: E402
from .reactive import TransitionSystem  # noqa: E402
from .seqcheck import check_f_clean, check_robustly_clean  # noqa: E402
from .seqlang import evaluate  # noqa: E402
from .values import fmt  # noqa: E402
from .wpengine import check_wp  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
}
COLORS = {"ec": "#1f77b4", "aec": "#d62728"}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _shade_standard(ax, cfg: cs.EcuConfig):
    ax.axvspan(0, float(cfg.test_hi), color="0.85", alpha=0.6, lw=0, label="standard inputs")


# --- sequential ---------------------------------------------------------------------------------


def seq_outputs(cfg: cs.EcuConfig) -> list[list]:
    """``thrtl, NOx(ec), NOx(aec)`` over the throttle grid."""
    progs = {name: cs.build_seq_ec(cfg) if name == "ec" else cs.build_seq_aec(cfg) for name in ("ec", "aec")}
    rows = []
    for t in cfg.throttle:
        outs = [min(evaluate(progs[n], {}, {"thrtl": t}).outputs)[0] for n in ("ec", "aec")]
        rows.append([t, *outs])
    return rows


def seq_distances(cfg: cs.EcuConfig, program: str) -> list[list]:
    """Worst output distance from a standard input, per input distance."""
    prog = cs.build_seq_ec(cfg) if program == "ec" else cs.build_seq_aec(cfg)
    outs = {t: [o[0] for o in evaluate(prog, {}, {"thrtl": t}).outputs] for t in cfg.throttle}
    worst: dict = {}
    for i in cfg.test_values:
        for j in cfg.throttle:
            dist = abs(i - j)
            h = hausdorff(lambda x, y: abs(x - y), outs[i], outs[j])
            worst[dist] = max(worst.get(dist, 0), h)
    return [[d, worst[d]] for d in sorted(worst)]


def seq_verdicts(cfg: cs.EcuConfig, jobs: int) -> list[list]:
    c = cs.seq_contract(cfg)
    rows = []
    for name in ("ec", "aec"):
        prog = cs.build_seq_ec(cfg) if name == "ec" else cs.build_seq_aec(cfg)
        for route, prop, run in (
            ("enumeration", "robust", lambda: check_robustly_clean(prog, c, jobs=jobs)),
            ("enumeration", "fclean", lambda: check_f_clean(prog, c, jobs=jobs)),
            ("wp", "robust", lambda: check_wp(prog, c, "robust")),
            ("wp", "fclean", lambda: check_wp(prog, c, "fclean")),
        ):
            t0 = time.perf_counter()
            v = run()
            rows.append([name, prop, route, v.outcome, round(time.perf_counter() - t0, 4)])
    return rows


# --- reactive -------------------------------------------------------------------------------------


def constant_input_outputs(ts: TransitionSystem) -> list[list]:
    """For each constant input, the outputs reachable while the input never changes."""
    by_input: dict = {}
    for s in ts.init:
        by_input.setdefault(ts.value(s, "i"), []).append(s)
    rows = []
    for key in sorted(by_input):
        seen = set(by_input[key])
        queue = deque(seen)
        while queue:
            s = queue.popleft()
            for t in ts.succ[s]:
                if t not in seen and ts.value(t, "i") == key:
                    seen.add(t)
                    queue.append(t)
        outs = sorted(ts.value(s, "o")[0] for s in seen)
        rows.append([key[0], outs[0], outs[-1], len(seen)])
    return rows


# --- driver -----------------------------------------------------------------------------------------


def write_report(out: str | Path, nox_steps=None, jobs: int = 1) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    plt.rcParams.update(STYLE)
    cfg = cs.EcuConfig()
    written: list[Path] = []

    rows = seq_outputs(cfg)
    written.append(_write_csv(out / "seq_outputs.csv", ["thrtl", "NOx_ec", "NOx_aec"],
                              [[fmt(x) for x in r] for r in rows]))
    fig, ax = plt.subplots()
    _shade_standard(ax, cfg)
    for k, name in ((1, "ec"), (2, "aec")):
        ax.plot([float(r[0]) for r in rows], [float(r[k]) for r in rows], marker="o", ms=3,
                color=COLORS[name], label=name)
    ax.set(xlabel="throttle", ylabel="NOx", title="Sequential programs: output per input")
    ax.legend()
    written.append(_save(fig, out / "seq_outputs.png"))

    fig, ax = plt.subplots()
    c = cs.seq_contract(cfg)
    dist_rows = []
    for name in ("ec", "aec"):
        pts = seq_distances(cfg, name)
        dist_rows += [[name, fmt(d), fmt(h)] for d, h in pts]
        ax.plot([float(d) for d, _ in pts], [float(h) for _, h in pts], marker="o", ms=3,
                color=COLORS[name], label=f"{name}: worst output distance")
    xs = sorted({float(r[1]) for r in dist_rows if float(r[1]) <= float(c.kappa_in)})
    ax.plot(xs, [float(c.f(x)) for x in xs], "k--", lw=1, label="bound f(d) = d/2")
    ax.axhline(float(c.kappa_out), color="0.4", lw=1, ls=":", label=f"kappa_o = {fmt(c.kappa_out)}")
    ax.axvline(float(c.kappa_in), color="0.4", lw=1, ls="-.", label=f"kappa_i = {fmt(c.kappa_in)}")
    ax.set(xlabel="input distance to a standard input", ylabel="output distance",
           title="Sequential programs: output distance vs. input distance")
    ax.legend(fontsize=7)
    written.append(_write_csv(out / "seq_distances.csv", ["program", "input_distance", "output_distance"],
                              dist_rows))
    written.append(_save(fig, out / "seq_distances.png"))

    written.append(_write_csv(out / "seq_verdicts.csv", ["program", "property", "route", "verdict", "seconds"],
                              seq_verdicts(cfg, jobs)))

    steps = tuple(nox_steps) if nox_steps else tables.NOX_STEPS
    cache = tables.ModelCache()
    fig, ax = plt.subplots()
    _shade_standard(ax, cfg)
    const_rows = []
    view_cfg = cs.EcuConfig(nox_step=steps[0])
    for name in ("ec", "aec"):
        view, _ = cache.view(name, view_cfg.nox_step)
        rows = constant_input_outputs(view.ts)
        const_rows += [[name, fmt(t), fmt(lo), fmt(hi), n] for t, lo, hi, n in rows]
        t = [float(r[0]) for r in rows]
        ax.fill_between(t, [float(r[1]) for r in rows], [float(r[2]) for r in rows], step="mid",
                        color=COLORS[name], alpha=0.35, label=f"{name}: reachable NOx")
    ax.set(xlabel="constant throttle", ylabel="NOx",
           title=f"Reactive models (NOx step {fmt(view_cfg.nox_step)}): outputs under constant input")
    ax.legend()
    written.append(_write_csv(out / "react_constant_inputs.csv", ["program", "thrtl", "NOx_min", "NOx_max", "states"],
                              const_rows))
    written.append(_save(fig, out / "react_constant_inputs.png"))

    results = [tables.run_row(r, cache) for r in tables.matrix(nox_steps=steps)]
    table_rows = [r.to_json() for r in results]
    header = list(table_rows[0])
    written.append(_write_csv(out / "verdict_table.csv", header, [[row[k] for k in header] for row in table_rows]))
    fig, ax = plt.subplots(figsize=(7.0, 0.22 * len(results) + 1.2))
    labels = [f"{r.row.prop} {r.row.program} {fmt(r.row.nox_step)} {r.row.instance}" for r in results]
    colors = [COLORS[r.row.program] if r.matches else "black" for r in results]
    ax.barh(range(len(results)), [max(r.seconds, 1e-4) for r in results], color=colors)
    ax.set_yticks(range(len(results)), labels, fontsize=6)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set(xlabel="check time [s] (black: verdict differs from expectation)", title="Verdict matrix")
    written.append(_save(fig, out / "verdict_table.png"))
    return written
