import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from dopecheck.contracts import (
    ABSDIFF, Contract, ContractError, Distance, affine, constant, directed_hausdorff, dump_contract, hausdorff,
    hausdorff_two_clause, lift_input_distance_dnew, load_contract, past_forgetful, threshold,
)
from dopecheck.values import INF

D = ABSDIFF


@pytest.mark.parametrize("A, B, expected", [
    ([], [], F(0)),
    ([1], [], INF),
    ([], [1], INF),
    ([0], [0], F(0)),
    ([0, 2], [0, 1], F(1)),
    ([0, 1, 2], [F(1, 2)], F(3, 2)),
    ([0, 10], [1, 9], F(1)),
    ([F(1, 10)], [F(7, 4), F(3)], F(29, 10)),  # 3 is 2.9 from 0.1
])
def test_hausdorff_frozen(A, B, expected):
    assert hausdorff(D, A, B) == expected
    assert hausdorff(D, B, A) == expected


def test_directed_hausdorff_is_asymmetric():
    assert directed_hausdorff(D, [0], [0, 5]) == 0
    assert directed_hausdorff(D, [0, 5], [0]) == 5


def test_hausdorff_on_tuples_uses_componentwise_max():
    assert hausdorff(D, [(F(0), F(0))], [(F(1), F(3))]) == 3


small_sets = st.lists(st.integers(-6, 6).map(F), max_size=5)


@given(small_sets, small_sets, st.integers(0, 8).map(F))
def test_two_clause_characterisation(A, B, bound):
    assert (hausdorff(D, A, B) <= bound) == hausdorff_two_clause(D, A, B, bound)


def test_two_clause_with_infinite_bound_always_holds():
    assert hausdorff_two_clause(D, [1], [], INF)
    assert hausdorff(D, [1], []) <= INF


def test_two_clause_on_many_random_pairs():
    rng = random.Random(7)
    for _ in range(2000):
        A = [F(rng.randint(-20, 20), rng.choice((1, 2, 4))) for _ in range(rng.randint(0, 6))]
        B = [F(rng.randint(-20, 20), rng.choice((1, 2, 4))) for _ in range(rng.randint(0, 6))]
        k = F(rng.randint(0, 40), 4)
        assert (hausdorff(D, A, B) <= k) == hausdorff_two_clause(D, A, B, k)


def test_discrete_and_custom_distances():
    d = Distance("discrete", threshold=F(5))
    assert d(1, 1) == 0 and d(1, 2) == 5
    c = Distance("custom", table=((F(0), F(1), F(3)),))
    assert c(F(1), F(0)) == 3 and c(F(2), F(2)) == 0
    with pytest.raises(ContractError):
        c(F(0), F(2))
    with pytest.raises(ContractError):
        Distance("discrete")
    with pytest.raises(ContractError):
        Distance("euclid")


def test_past_forgetful_uses_the_last_elements():
    d = past_forgetful()
    assert d((F(0), F(5)), (F(9), F(4))) == 1
    assert d((), ()) == 0
    assert d((F(1),), ()) == INF
    assert d.point == ABSDIFF


def test_dnew_three_values():
    std = lambda t: all(0 < x <= 1 for x in t)  # noqa: E731
    d = lift_input_distance_dnew(past_forgetful(), F(2), std)
    assert d((F(1), F(1)), (F(1), F(1))) == 0
    assert d((F(1), F(1)), (F(1), F(2))) == 1
    assert d((F(1), F(1)), (F(1), F(4))) == 2      # last pair too far apart
    assert d((F(3), F(3)), (F(3), F(4))) == 2      # neither side standard
    assert d((F(1),), (F(1), F(1))) == 2           # different lengths
    with pytest.raises(ContractError):
        lift_input_distance_dnew(ABSDIFF, INF, std)


def test_bound_functions():
    assert affine(F(1, 2))(F(1)) == F(1, 2)
    assert affine(F(1, 2), F(3, 10))(F(2)) == F(13, 10)
    t = threshold(F(2), F(1))
    assert t(F(2)) == 1 and t(F(3)) == INF
    assert constant(F(4))(F(100)) == 4
    with pytest.raises(ContractError):
        Contract().bound()


def test_contract_json_round_trip(tmp_path):
    c = Contract(stdin="x in (0, 1]", pintrs="p <= 1", kappa_in=F(2), kappa_out=F(11, 10),
                 d_in=past_forgetful(), f=affine(F(1, 2), F(3, 10)))
    path = tmp_path / "c.json"
    dump_contract(c, path)
    back = load_contract(path)
    assert back == c
    assert back.replace(kappa_in=F(1)).kappa_in == 1


def test_contract_rejects_unknown_fields(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"stdin": "true", "kapa_in": "1"}')
    with pytest.raises(ContractError):
        load_contract(p)
    p.write_text("{not json")
    with pytest.raises(ContractError):
        load_contract(p)


@pytest.mark.parametrize("doc", [
    '{"kappa_in": "0.15", "scale": "0.1"}',
    '{"f": {"kind": "affine", "slope": "0.5", "offset": "0.001"}, "scale": "0.01"}',
    '{"d_out": {"kind": "past_forgetful", "base": {"kind": "discrete", "threshold": "0.25"}}, "scale": "0.1"}',
    '{"scale": "0"}',
])
def test_literals_finer_than_the_scale_are_rejected(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(doc)
    with pytest.raises(ContractError):
        load_contract(p)


def test_literals_on_the_scale_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"kappa_in": "0.2", "kappa_out": "inf", "f": {"kind": "const", "value": "3"}, "scale": "0.1"}')
    c = load_contract(p)
    assert (c.kappa_in, c.kappa_out, c.scale) == (F(1, 5), INF, F(1, 10))
