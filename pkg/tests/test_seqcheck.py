from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from dopecheck.casestudy import build_printer, build_seq_aec, build_seq_ec, printer_contract, seq_contract
from dopecheck.contracts import Contract
from dopecheck.seqcheck import (
    CHECKERS, check_clean, check_f_clean, check_general_clean, check_robustly_clean, replay,
)
from dopecheck.seqcheck import PARALLEL_THRESHOLD
from dopecheck.seqlang import BOTTOM, parse
from seq_corpus import discrete_contract, random_contract, random_program, threshold_contract


@pytest.mark.parametrize("variant, standard_only, outcome", [
    ("general", False, "clean"),
    ("general", True, "clean"),
    ("doped", False, "doped"),
    ("doped", True, "doped"),
    ("extended", False, "doped"),
    ("extended", True, "clean"),
])
def test_printer_cleanness(variant, standard_only, outcome):
    assert check_clean(build_printer(variant), printer_contract(standard_only)).outcome == outcome


def test_printer_witness_is_the_first_in_lexicographic_order():
    v = check_clean(build_printer("doped"), printer_contract())
    w = v.witness
    assert w["p"] == {"ctype": 0, "brand": 0, "supports_new": 0}
    assert w["p2"] == {"ctype": 0, "brand": 1, "supports_new": 0}
    assert w["i"] == w["i2"] == {"new_doc": 0}
    assert w["outputs"] == [(F(0),)] and w["outputs2"] == [(F(1),)]


@pytest.mark.parametrize("build, prop, outcome", [
    (build_seq_ec, "clean", "clean"), (build_seq_ec, "robust", "clean"), (build_seq_ec, "fclean", "clean"),
    (build_seq_aec, "clean", "clean"), (build_seq_aec, "robust", "doped"), (build_seq_aec, "fclean", "doped"),
])
def test_emission_programs(build, prop, outcome):
    assert CHECKERS[prop](build(), seq_contract()).outcome == outcome


def test_emission_witnesses_frozen():
    c = seq_contract()
    r = check_robustly_clean(build_seq_aec(), c)
    assert (r.witness["i"]["thrtl"], r.witness["i2"]["thrtl"]) == (F(1, 10), F(3, 2))
    assert r.witness["distance"] == F(43, 40) and r.witness["bound"] == 1
    f = check_f_clean(build_seq_aec(), c)
    assert (f.witness["i"]["thrtl"], f.witness["i2"]["thrtl"]) == (F(1, 10), F(11, 10))
    assert f.witness["distance"] == F(111, 200) and f.witness["bound"] == F(1, 2)


def test_collected_witnesses_all_replay():
    c = seq_contract()
    prog = build_seq_aec()
    r = check_f_clean(prog, c, collect=True)
    assert len(r.witnesses) == 100
    assert all(replay(prog, c, w) for w in r.witnesses)
    pairs = {(w["i"]["thrtl"], w["i2"]["thrtl"]) for w in r.witnesses}
    assert (F(1), F(3, 2)) in pairs


def test_general_cleanness_reports_continuity():
    c = seq_contract().replace(comm="thrtl in (1, 1.5]")
    ec = check_general_clean(build_seq_ec(), c)
    assert ec.unknown and ec.reason == "continuity-report"
    assert ec.stats["continuity"]["max_distance"] == F(1, 20)
    aec = check_general_clean(build_seq_aec(), c)
    assert aec.doped and aec.witness["definition"] == "general/2"


def test_nontermination_is_an_output():
    src = ("param p in [0, 1] step 1;\ninput x in [0, 1] step 1;\noutput y in [0, 1] step 1;\n"
           "y := 0; while p == 1 && x == 1 { skip }\n")
    v = check_clean(parse(src), Contract(stdin="x == 1"))
    assert v.doped
    assert v.witness["outputs"] == [(F(0),)] and v.witness["outputs2"] == [BOTTOM]


def test_parallel_enumeration_agrees_with_sequential():
    src = ("param p in [0, 3] step 1;\ninput x in [0, 1500] step 1;\noutput y in [0, 3000] step 1;\n"
           "if p == 3 && x == 1499 { y := x + 2 } else { y := x }\n")
    prog = parse(src)
    c = Contract(stdin="x <= 1499")
    one = check_clean(prog, c, jobs=1)
    two = check_clean(prog, c, jobs=2)
    assert one.stats["evaluations"] == two.stats["evaluations"] >= PARALLEL_THRESHOLD
    assert one.outcome == two.outcome == "doped"
    assert one.witness == two.witness


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_subsumption_on_generated_programs(seed):
    prog, c = random_program(seed), random_contract(seed)
    assert check_robustly_clean(prog, discrete_contract(c)).outcome == check_clean(prog, c).outcome
    assert check_f_clean(prog, threshold_contract(c)).outcome == check_robustly_clean(prog, c).outcome


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_every_witness_replays(seed):
    prog, c = random_program(seed), random_contract(seed)
    for check in (check_clean, check_robustly_clean, check_f_clean):
        v = check(prog, c)
        if v.doped:
            assert replay(prog, c, v.witness)
