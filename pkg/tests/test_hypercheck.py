from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest

from dopecheck.casestudy import COARSE, build_react_aec, build_react_ec, react_contract
from dopecheck.contracts import Contract, past_forgetful
from dopecheck.hypercheck import (
    HyperFormula, ModelView, bounded_oracle, check_exists_exists, check_forall_forall,
    check_forall_forall_exists_exact, check_negation_instance, check_strengthened, cleanness_formulas,
    eval_weak_until, expand, guarantee_formula, negation_instance, replay_oracle_witness, strengthened_formula,
)
from dopecheck.hypercheck.formula import din_gt, din_le, dout_le, eq, fbound, is_value
from dopecheck.reactive import Builder, Lasso, Signal
from dopecheck.reactive.ltl import G, holds_on_lasso
from dopecheck.values import Grid
from reactive_corpus import corpus


@pytest.fixture(scope="module")
def coarse():
    c = react_contract(COARSE)
    return ModelView(build_react_ec(COARSE), c), ModelView(build_react_aec(COARSE), c)


@pytest.fixture(scope="module")
def fine_grid():
    c = react_contract()
    return ModelView(build_react_ec(), c), ModelView(build_react_aec(), c)


def symmetric_pairing_model():
    """Standard input 0 may output 0 or 1; input 1 always outputs 0."""
    b = Builder([Signal("x", "i", Grid(0, 1, 1)), Signal("y", "o", Grid(0, 1, 1))])
    states = [b.state(k, values={"x": F(k[0]), "y": F(k[1])}) for k in ((0, 0), (0, 1), (1, 0))]
    for s in states:
        b.initial(s)
        for t in states:
            b.edge(s, t)
    contract = Contract(stdin="G(x == 0)", d_in=past_forgetful(), d_out=past_forgetful(),
                        kappa_in=F(1), kappa_out=F(0))
    return b.build(), contract


# --- formulas ----------------------------------------------------------------------------------

def test_formula_shapes(coarse):
    _, aec = coarse
    s = strengthened_formula(aec, "robust")
    assert s.quantifiers == "AA" and s.label == "robust/strengthened"
    assert s.render() == ("forall pi1 forall pi2. !G((thrtl in (0, 1])_pi1) || "
                          "d_out(o_pi1, o_pi2) <= kappa_o W d_in(i_pi1, i_pi2) > kappa_i")
    one, two = cleanness_formulas(aec, "robust")
    assert (one.quantifiers, one.vars[-1], two.vars[-1]) == ("AAE", "pi2'", "pi1'")
    assert len(cleanness_formulas(aec, "clean")) == 1
    neg = negation_instance(aec, "fclean", F(1), F(2), "b")
    assert neg.quantifiers == "AAA" and neg.label == "fclean/neg-b[a=1,b=2]"
    assert guarantee_formula(F(1), F(2)).quantifiers == "EE"


def test_unbound_trace_variables_are_rejected():
    with pytest.raises(ValueError, match="not quantified"):
        HyperFormula((("A", "pi1"),), G(eq("o", "pi1", "pi2")))
    with pytest.raises(ValueError):
        HyperFormula(tuple(("A", f"v{k}") for k in range(4)), G(eq("o", "v0", "v1")))


@pytest.mark.parametrize("seed", range(0, 24, 3))
def test_expansion_agrees_with_direct_evaluation(seed):
    ts, c = corpus(24)[seed]
    view = ModelView(ts, c)
    atoms = [eq("i", "u", "v"), eq("o", "u", "v"), din_le("u", "v"), din_gt("u", "v"), dout_le("u", "v"),
             fbound("u", "v")]
    if ts.signals_of("p"):
        atoms.append(eq("p", "u", "v"))
    for a in atoms:
        e = expand(view, a.payload)
        for su, sv in product(range(ts.n), repeat=2):
            direct = view.holds(a.payload, {"u": su, "v": sv})
            expanded = holds_on_lasso(e, 1, 0, lambda b, _: view.holds(b.payload, {"u": su, "v": sv}))
            assert direct == expanded, (a.name, su, sv)


def test_pair_matrix_matches_holds(coarse):
    ec, _ = coarse
    a = dout_le("u", "v").payload
    m = ec.pair_matrix(a, np.arange(ec.n), np.arange(ec.n))
    assert all(m[x, y] == ec.holds(a, {"u": x, "v": y}) for x in range(ec.n) for y in range(ec.n))


# --- the emission models ------------------------------------------------------------------------------


def test_strengthening_is_inconclusive_on_the_coarse_grid(coarse):
    ec, _ = coarse
    assert check_strengthened(ec, prop="robust").unknown
    assert check_forall_forall_exists_exact(ec, prop="robust").clean

@pytest.mark.parametrize("prop", ["robust", "fclean"])
def test_strengthening_and_negation(fine_grid, prop):
    ec, aec = fine_grid
    assert check_strengthened(ec, prop=prop).clean
    v = check_strengthened(aec, prop=prop)
    assert v.unknown and v.witness["replay_holds"] is False
    for a in (F(1, 10), F(1)):
        assert check_negation_instance(aec, None, a, F(2), prop).doped
        assert check_negation_instance(ec, None, a, F(2), prop).unknown


@pytest.mark.parametrize("prop, ec_outcome, aec_outcome", [
    ("clean", "clean", "clean"), ("robust", "clean", "doped"), ("fclean", "clean", "doped"),
])
def test_exact_and_oracle(coarse, prop, ec_outcome, aec_outcome):
    ec, aec = coarse
    assert check_forall_forall_exists_exact(ec, prop=prop).outcome == ec_outcome
    assert check_forall_forall_exists_exact(aec, prop=prop).outcome == aec_outcome
    o_ec, o_aec = bounded_oracle(ec, prop=prop), bounded_oracle(aec, prop=prop)
    assert o_ec.outcome == ec_outcome and o_ec.stats.get("complete", True)
    assert o_aec.outcome == aec_outcome
    if o_aec.doped:
        assert replay_oracle_witness(aec, o_aec.witness)


def test_negation_needs_realisable_inputs(coarse):
    _, aec = coarse
    v = check_negation_instance(aec, None, F(3, 7), F(2), "robust")
    assert v.unknown and v.reason.startswith("vacuous")


def test_guarantee_witness(coarse):
    ec, _ = coarse
    r = check_exists_exists(guarantee_formula((F(1),), (F(2),)), ec)
    assert r.satisfied
    assert {step["thrtl"] for step in r.witness["pi1"]["loop"]} == {F(1)}


def test_budgets_give_unknown(coarse):
    ec, _ = coarse
    assert check_forall_forall(strengthened_formula(ec, "robust"), ec, budget=1).unknown
    v = check_forall_forall_exists_exact(ec, prop="robust", budget=3)
    assert v.unknown and "budget" in v.reason


# --- small hand-made and generated models -----------------------------------------------------------

def test_symmetric_pairing_passes_exactly_one_formula():
    ts, c = symmetric_pairing_model()
    assert check_forall_forall_exists_exact(ts, c, "robust", which=("1",)).doped
    assert check_forall_forall_exists_exact(ts, c, "robust", which=("2",)).clean
    assert bounded_oracle(ts, c, "robust").doped
    assert check_strengthened(ts, c, "robust").unknown


def test_doped_witness_replays_under_weak_until():
    ts, c = symmetric_pairing_model()
    view = ModelView(ts, c)
    phi = strengthened_formula(view, "robust")
    v = check_forall_forall(phi, view)
    assert v.doped and v.witness["replay_holds"] is False
    runs = {"pi1": Lasso((), (1,)), "pi2": Lasso((), (2,))}  # outputs 1 vs 0 under inputs 0 vs 1
    assert eval_weak_until(view, phi.body, runs) is False
    runs = {"pi1": Lasso((), (0,)), "pi2": Lasso((), (2,))}
    assert eval_weak_until(view, phi.body, runs) is True


def test_single_witness_formula_is_stronger_than_the_per_step_definition():
    """A nondeterministic model on which the definition holds but no single witness trace exists.

    The first copy can output 0, 2, 2, ...; at every step some second-copy
    trace is within 1, but no one trace is within 1 at every step.
    """
    ts, c = corpus(24)[2]
    assert (c.stdin, c.kappa_in, c.kappa_out) == ("G(x == 0)", 0, 1)
    oracle = bounded_oracle(ts, c, "robust")
    assert oracle.clean and oracle.stats["complete"]
    assert check_forall_forall_exists_exact(ts, c, "robust").doped


@pytest.mark.parametrize("index", range(24))
def test_corpus_modes_are_sound(index):
    ts, c = corpus(24)[index]
    view = ModelView(ts, c)
    for prop in ("clean", "robust", "fclean"):
        exact = check_forall_forall_exists_exact(view, prop=prop)
        strong = check_strengthened(view, prop=prop)
        oracle = bounded_oracle(view, prop=prop)
        if strong.clean:
            assert not exact.doped and not oracle.doped
        if exact.clean:
            assert not oracle.doped
        if oracle.doped:
            assert replay_oracle_witness(view, oracle.witness)
            assert bounded_oracle(view, prop=prop, depth=oracle.witness["bad_prefix_length"] + 3).doped


def test_oracle_depth_bound():
    ts, c = corpus(24)[5]
    v = bounded_oracle(ts, c, "robust", depth=1)
    assert v.outcome in ("clean", "doped", "unknown")
    with pytest.raises(ValueError):
        bounded_oracle(ts, c, "robust", depth=0)
