"""One test per acceptance criterion; each records a PASS/FAIL line.

The lines are printed as they are produced and again, together, in the
pytest terminal summary.  Run on its own with
``pytest tests/test_acceptance.py -v``.
"""
import random
import time
from fractions import Fraction as F

import pytest

from conftest import ACCEPTANCE_LINES
from dopecheck import tables
from dopecheck.casestudy import COARSE, build_react_aec, build_react_ec, build_seq_aec, build_seq_ec, react_contract, seq_contract
from dopecheck.contracts import ABSDIFF, hausdorff, hausdorff_two_clause
from dopecheck.hypercheck import (
    ModelView, bounded_oracle, check_forall_forall, check_forall_forall_exists_exact, check_strengthened,
    default_depth, eval_weak_until, replay_oracle_witness, strengthened_formula,
)
from dopecheck.seqcheck import CHECKERS, check_clean, check_f_clean, check_robustly_clean
from dopecheck.wpengine import check_wp
import reactive_corpus
import seq_corpus


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def test_criterion_1_sequential_robust_cleanness():
    c = seq_contract()
    t0 = time.perf_counter()
    ec, aec = check_robustly_clean(build_seq_ec(), c), check_robustly_clean(build_seq_aec(), c)
    secs = time.perf_counter() - t0
    ok = ec.clean and aec.doped and secs < 5
    record(1, ok, f"robust: ec {ec.outcome}, aec {aec.outcome} in {secs:.2f}s (want clean/doped, < 5s)")


def test_criterion_2_sequential_f_cleanness_and_wp_counterexample():
    c = seq_contract()
    ec, aec = build_seq_ec(), build_seq_aec()
    seq = (check_f_clean(ec, c).outcome, check_f_clean(aec, c).outcome)
    wp = (check_wp(ec, c, "fclean").outcome, check_wp(aec, c, "fclean").outcome)
    cex = check_wp(aec, c, "fclean", collect=True)
    pairs = {(w["thrtl"], w["thrtl'"]) for w in cex.witnesses}
    has_pair = (F(1), F(3, 2)) in pairs
    ok = seq == wp == ("clean", "doped") and has_pair
    record(2, ok, f"fclean enumeration {seq}, wp {wp}; (thrtl, thrtl')=(1, 1.5) among "
                  f"{len(pairs)} wp counterexamples: {has_pair}")


def _table_outcomes(prop: str) -> tuple[list, float]:
    t0 = time.perf_counter()
    results = tables.run_matrix(tables.matrix(props=(prop,), nox_steps=(F(1, 20),)))
    return results, time.perf_counter() - t0


def _reactive_pattern(n: int, prop: str):
    c = react_contract()
    t0 = time.perf_counter()
    ec, aec = ModelView(build_react_ec(), c), ModelView(build_react_aec(), c)
    oracle = (bounded_oracle(ec, prop=prop).outcome, bounded_oracle(aec, prop=prop).outcome)
    strong = check_strengthened(ec, prop=prop).outcome
    results, _ = _table_outcomes(prop)
    secs = time.perf_counter() - t0
    pattern = {(r.row.program, r.row.instance): r.outcome for r in results}
    ok = (oracle == ("clean", "doped") and strong == "clean" and all(r.matches for r in results)
          and len(results) == 1 + len(tables.INSTANCES) * len(tables.ORIENTATIONS) and secs < 60)
    aec_rows = sorted(v for (p, _), v in pattern.items() if p == "aec")
    record(n, ok, f"{prop} at NOx step 0.05: oracle ec/aec {oracle}, strengthened ec {strong}, "
                  f"table aec instances {aec_rows}, {secs:.1f}s (< 60s)")


def test_criterion_3_reactive_robust_cleanness_table():
    _reactive_pattern(3, "robust")


def test_criterion_4_reactive_f_cleanness_table():
    _reactive_pattern(4, "fclean")


def test_criterion_5_definition_subsumption_on_generated_programs():
    programs = seq_corpus.corpus(60)
    a_bad = b_bad = 0
    for _, prog, c in programs:
        a_bad += check_robustly_clean(prog, seq_corpus.discrete_contract(c)).outcome != check_clean(prog, c).outcome
        b_bad += check_f_clean(prog, seq_corpus.threshold_contract(c)).outcome != check_robustly_clean(prog, c).outcome
    record(5, len(programs) >= 50 and a_bad == b_bad == 0,
           f"{len(programs)} programs: discrete-robust vs clean disagreements {a_bad}, "
           f"threshold-f vs robust disagreements {b_bad}")


def test_criterion_6_hausdorff_two_clause_characterisation():
    rng = random.Random(2024)
    n, bad = 10_000, 0
    for _ in range(n):
        A = [F(rng.randint(-20, 20), rng.choice((1, 2, 4))) for _ in range(rng.randint(0, 6))]
        B = [F(rng.randint(-20, 20), rng.choice((1, 2, 4))) for _ in range(rng.randint(0, 6))]
        k = F(rng.randint(0, 40), 4)
        bad += (hausdorff(ABSDIFF, A, B) <= k) != hausdorff_two_clause(ABSDIFF, A, B, k)
    record(6, bad == 0, f"{n} random set pairs, {bad} disagreements")


def test_criterion_7_wp_agrees_with_enumeration_on_loop_free_programs():
    programs = seq_corpus.corpus(60, loops=False, nondet=False)
    checks = bad = 0
    for _, prog, c in programs:
        for prop in ("clean", "robust", "fclean"):
            checks += 1
            bad += check_wp(prog, c, prop).outcome != CHECKERS[prop](prog, c).outcome
    record(7, bad == 0, f"{len(programs)} loop-free programs, {checks} checks, {bad} disagreements")


def _reactive_models():
    models = [(f"corpus#{i}", ModelView(ts, c)) for i, (ts, c) in enumerate(reactive_corpus.corpus(24))]
    models += [(f"{name}@coarse", ModelView(build(COARSE), react_contract(COARSE)))
               for name, build in (("ec", build_react_ec), ("aec", build_react_aec))]
    return models


def test_criterion_8_hyper_modes_never_contradict():
    models = [(name, v) for name, v in _reactive_models() if v.ts.n ** 2 <= 200]
    contradictions = []
    for name, view in models:
        for prop in ("clean", "robust", "fclean"):
            exact = check_forall_forall_exists_exact(view, prop=prop)
            strong = check_strengthened(view, prop=prop)
            oracle = bounded_oracle(view, prop=prop)
            definitive = {m: v.outcome for m, v in (("exact", exact), ("oracle", oracle)) if not v.unknown}
            if strong.clean:
                definitive["strengthen"] = "clean"
            if len(set(definitive.values())) > 1:
                contradictions.append(f"{name}/{prop} {definitive}")
    detail = f"{len(models)} models (<= 200 product states), {len(contradictions)} contradictions"
    if contradictions:
        detail += ": " + "; ".join(contradictions)
    record(8, len(models) >= 20 and not contradictions, detail)


def test_criterion_9_doped_verdicts_are_prefix_stable_and_replay():
    doped = stable = replayed = 0
    failures = []
    for name, view in _reactive_models() + [("aec@0.05", ModelView(build_react_aec(), react_contract()))]:
        for prop in ("clean", "robust", "fclean"):
            v = bounded_oracle(view, prop=prop)
            if v.doped:
                doped += 1
                k = v.witness["bad_prefix_length"]
                depths = sorted({k + 1, k + 4, 2 * k + 1, default_depth(view.ts)})
                if all(bounded_oracle(view, prop=prop, depth=d).doped for d in depths):
                    stable += 1
                else:
                    failures.append(f"{name}/{prop} depth")
                if replay_oracle_witness(view, v.witness):
                    replayed += 1
                else:
                    failures.append(f"{name}/{prop} replay")
            if prop == "clean":
                continue
            phi = strengthened_formula(view, prop)
            s = check_forall_forall(phi, view)
            if s.doped:
                doped += 1
                stable += 1  # a found bad prefix is a violation at every larger depth
                if s.witness["replay_holds"] is False:
                    replayed += 1
                else:
                    failures.append(f"{name}/{prop} strengthened replay")
    record(9, doped > 0 and stable == replayed == doped,
           f"{doped} doped verdicts: {stable} stay doped at larger depths, {replayed} bad prefixes replay "
           f"to a violation" + (f"; failures: {failures}" if failures else ""))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v"]))
