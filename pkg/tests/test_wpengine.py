from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from dopecheck.casestudy import build_seq_aec, build_seq_ec, seq_contract
from dopecheck.contracts import Contract
from dopecheck.seqcheck import CHECKERS
from dopecheck.seqlang import parse, parse_expr
from dopecheck.wpengine import (
    SelfComposition, UnsupportedConstruct, build_vcs, check_validity, check_wp, vc_clean, vc_f_clean,
    vc_robustly_clean, wp,
)
from seq_corpus import random_contract, random_program

BRANCH = "input x in [0, 3] step 1;\noutput y in [0, 6] step 1;\nif x > 1 { y := x + 1 } else { y := 0 }\n"
LOOP = "input x in [0, 3] step 1;\noutput y in [0, 6] step 1;\ny := 0; while y < x { y := y + 1 }\n"


def test_wp_of_branching_assignment_frozen():
    p = parse(BRANCH)
    assert wp(p.body, parse_expr("y > 2")).render() == "(x > 1 => x + 1 > 2) && (!x > 1 => 0 > 2)"
    grids = {d.name: d.grid for d in p.decls}
    assert wp(p.body, parse_expr("y > 2"), grids=grids).render() == (
        "(x > 1 => snap[[0, 6] step 1](x + 1) > 2) && (!x > 1 => snap[[0, 6] step 1](0) > 2)")


@pytest.mark.parametrize("x, holds", [(0, False), (1, False), (2, True), (3, True)])
def test_wp_agrees_with_execution(x, holds):
    p = parse(BRANCH)
    assert wp(p.body, parse_expr("y > 2")).ev({"x": F(x), "y": F(0)}) is holds


def test_self_composition_primes_every_variable():
    sc = SelfComposition.of(parse(BRANCH))
    assert sc.ren == {"x": "x'", "y": "y'"}
    assert sc.prime(parse_expr("x + y")).render() == "x' + y'"


def test_unrolling_bound_decides_loops():
    p = parse(LOOP)
    assert check_wp(p, Contract(), "clean", unroll=0).unknown
    assert check_wp(p, Contract(), "clean", unroll=2).unknown
    assert check_wp(p, Contract(), "clean", unroll=4).clean


def test_vc_counts():
    prog, c = build_seq_ec(), seq_contract()
    assert vc_clean(prog, c).label == "clean"
    assert len(vc_robustly_clean(prog, c)) == 2
    assert len(vc_f_clean(prog, c)) == 20  # one per realised input distance
    assert [v.label for v in build_vcs(prog, c, "robust")] == [v.label for v in vc_robustly_clean(prog, c)]


@pytest.mark.parametrize("build, prop, outcome", [
    (build_seq_ec, "clean", "clean"), (build_seq_ec, "robust", "clean"), (build_seq_ec, "fclean", "clean"),
    (build_seq_aec, "clean", "clean"), (build_seq_aec, "robust", "doped"), (build_seq_aec, "fclean", "doped"),
])
def test_emission_programs(build, prop, outcome):
    assert check_wp(build(), seq_contract(), prop).outcome == outcome


def test_aec_counterexample_set_contains_throttle_1_vs_1_5():
    r = check_wp(build_seq_aec(), seq_contract(), "fclean", collect=True)
    pairs = {(w["thrtl"], w["thrtl'"]) for w in r.witnesses}
    assert (F(1), F(3, 2)) in pairs
    assert (r.witness["thrtl"], r.witness["thrtl'"]) == (F(1), F(11, 10))


def test_nondeterminism_is_rejected():
    src = "input x in [0, 1] step 1;\noutput y in [0, 2] step 1;\ny :in [x, x + 1]\n"
    with pytest.raises(UnsupportedConstruct):
        check_wp(parse(src), Contract(), "clean")


def test_check_validity_statuses():
    q = parse_expr("x + y <= 3")
    dom = {"x": [F(0), F(1), F(2)], "y": [F(0), F(1)]}
    assert check_validity(q, dom).status == "valid"
    r = check_validity(parse_expr("x + y <= 2"), dom, collect=True)
    assert r.status == "counterexample" and r.states == [{"x": F(2), "y": F(1)}]
    assert check_validity(parse_expr("x <= y"), {"x": dom["x"]}, fixed={"y": F(5)}).status == "valid"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_loop_free_programs_agree_with_enumeration(seed):
    prog, c = random_program(seed, loops=False, nondet=False), random_contract(seed)
    for prop in ("clean", "robust", "fclean"):
        assert check_wp(prog, c, prop).outcome == CHECKERS[prop](prog, c).outcome, prop
