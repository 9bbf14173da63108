from fractions import Fraction as F

import pytest

from dopecheck.casestudy import (
    COARSE, EcuConfig, build_printer, build_react_aec, build_react_ec, nox_grid, nox_interval, printer_source,
    react_contract, seq_contract, seq_source,
)
from dopecheck.seqlang import evaluate, parse

CFG = EcuConfig()


@pytest.mark.parametrize("t, prev, doped, interval", [
    (F(1), F(0), False, (F(9, 20), F(11, 20))),
    (F(1), F(1, 2), False, (F(9, 20), F(11, 20))),
    (F(3, 2), F(1), False, (F(27, 44), F(3, 4))),   # feedback raises the dose by lambda
    (F(3, 2), F(1), True, (F(81, 80), F(99, 80))),  # outside the test range the doped model ignores it
    (F(1, 2), F(0), True, (F(9, 40), F(11, 40))),
])
def test_nox_interval_frozen(t, prev, doped, interval):
    assert nox_interval(CFG, t, prev, doped) == interval


def test_nox_grids():
    assert (nox_grid(CFG, False).hi, nox_grid(CFG, True).hi) == (F(11, 10), F(11, 5))
    assert nox_grid(CFG, False).step == F(1, 20)


def test_reactive_model_sizes():
    ec, aec = build_react_ec(), build_react_aec()
    assert (ec.n, ec.transitions) == (98, 7115)
    assert (aec.n, aec.transitions) == (102, 9432)
    assert ec.receptive and aec.receptive
    assert [s.name for s in ec.signals] == ["thrtl", "NOx"]
    assert ec.meta["model"] == "ec" and aec.meta["nox_step"] == "0.05"


def test_sequential_sources():
    src = seq_source("ec", COARSE)
    assert src.splitlines()[0] == "input thrtl in (0, 2] step 0.5;"
    out = evaluate(parse(seq_source("aec")), {}, {"thrtl": F(3, 2)}).outputs
    assert out == frozenset({(F(9, 8),)})
    assert evaluate(parse(seq_source("ec")), {}, {"thrtl": F(3, 2)}).outputs == frozenset({(F(3, 4),)})


def test_contracts():
    s, r = seq_contract(), react_contract()
    assert (s.kappa_in, s.kappa_out, s.f(F(1))) == (2, 1, F(1, 2))
    assert (r.kappa_in, r.kappa_out, r.f(F(1))) == (2, F(11, 10), F(4, 5))
    assert r.stdin == "G(thrtl in (0, 1])" and r.d_in.kind == "past_forgetful"


def test_config_validation():
    with pytest.raises(ValueError):
        EcuConfig(lam=F(1))
    with pytest.raises(ValueError):
        EcuConfig(thr_step=F(3, 10))
    assert EcuConfig(nox_step="0.00625").nox_step == F(1, 160)


def test_printers():
    assert "ctype <= 1" in printer_source("general")
    assert build_printer("extended").outputs == ("out",)
    with pytest.raises(ValueError):
        printer_source("laser")
