import json
import subprocess
import sys

import pytest

from dopecheck.cli import EXIT_DATAERR, EXIT_USAGE, main

LOOP = "input x in [0, 3] step 1;\noutput y in [0, 6] step 1;\ny := 0; while y < x { y := y + 1 }\n"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    for model in ("ec", "aec"):
        assert main(["casestudy", "--model", model, "--kind", "seq", "-o", str(d / f"{model}.dope"),
                     "--contract", str(d / "ex1.json")]) == 0
        assert main(["casestudy", "--model", model, "-o", str(d / f"{model}.json"),
                     "--contract", str(d / "react.json")]) == 0
    (d / "loop.dope").write_text(LOOP)
    (d / "empty.json").write_text("{}")
    (d / "broken.dope").write_text("input x in [0, 1] step 1;\ny := ")
    (d / "broken.json").write_text("{nope")
    (d / "div.dope").write_text("input x in [0, 1] step 1;\noutput y in [0, 2] step 1;\ny := 1 / x\n")
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_seq_verdicts(files, capsys):
    assert run(capsys, "seq", files / "ec.dope", files / "ex1.json", "--property", "robust")[0] == 0
    code, rep = run_json(capsys, "seq", files / "aec.dope", files / "ex1.json", "--property", "robust")
    assert code == 1 and rep["verdict"] == "doped"
    w = rep["verdicts"][0]["witness"]
    assert (w["i"]["thrtl"], w["i2"]["thrtl"]) == ("0.1", "1.5")
    assert rep["command"][:2] == ["dopecheck", "seq"]
    assert len(rep["digests"]) == 2


def test_seq_general_and_clean(files, capsys):
    assert run(capsys, "seq", files / "aec.dope", files / "ex1.json", "--property", "clean")[0] == 0
    assert run(capsys, "seq", files / "ec.dope", files / "ex1.json", "--property", "general")[0] == 2


def test_wp_verdicts_and_counterexamples(files, capsys, tmp_path):
    assert run(capsys, "wp", files / "ec.dope", files / "ex1.json", "--property", "fclean")[0] == 0
    vc = tmp_path / "vc.txt"
    code, rep = run_json(capsys, "wp", files / "aec.dope", files / "ex1.json", "--property", "fclean",
                         "--all-witnesses", "--emit-vc", vc)
    assert code == 1
    pairs = {(w["thrtl"], w["thrtl'"]) for w in rep["witnesses"]}
    assert ("1", "1.5") in pairs
    assert vc.read_text().startswith("# fclean[Y=0]")
    assert rep["conditions"] and rep["conditions"][0].startswith("# fclean[Y=0]")


def test_wp_unroll_zero_on_a_loop_is_unknown(files, capsys):
    assert run(capsys, "wp", files / "loop.dope", files / "empty.json", "--property", "clean",
               "--unroll", "0")[0] == 2
    assert run(capsys, "wp", files / "loop.dope", files / "empty.json", "--property", "clean")[0] == 0


def test_hyper_modes(files, capsys):
    m_ec, m_aec, c = files / "ec.json", files / "aec.json", files / "react.json"
    assert run(capsys, "hyper", m_ec, c, "--property", "robust")[0] == 0
    code, rep = run_json(capsys, "hyper", m_aec, c, "--a", "1", "--b", "2")
    assert code == 1 and rep["verdicts"][0]["check"] == "negation robust a=1 b=2"
    assert rep["verdicts"][0]["stats"]["instances"] == [
        {"formula": "robust/neg-a[a=1,b=2]", "holds": True}, {"formula": "robust/neg-b[a=1,b=2]", "holds": True}]
    assert rep["model"] == {"states": 102, "transitions": 9432}
    assert run(capsys, "hyper", m_aec, c, "--a", "0.1", "--b", "2", "--orientation", "b",
               "--property", "fclean")[0] == 1
    assert run(capsys, "hyper", m_ec, c, "--mode", "exact", "--exact-budget", "10")[0] == 2
    assert run(capsys, "hyper", m_aec, c, "--mode", "oracle", "--property", "fclean")[0] == 1


def test_human_and_json_reports_carry_the_same_verdicts(files, capsys):
    argv = ["seq", files / "aec.dope", files / "ex1.json", "--property", "fclean"]
    _, human = run(capsys, *argv)
    _, rep = run_json(capsys, *argv)
    item = rep["verdicts"][0]
    assert f"{item['check']}: {item['verdict'].upper()}" in human
    witness_line = next(line for line in human.splitlines() if line.strip().startswith("witness:"))
    assert json.loads(witness_line.split("witness:", 1)[1]) == item["witness"]
    assert f"verdict: {rep['verdict'].upper()}" in human


def test_reports_are_deterministic_apart_from_duration(files, capsys):
    argv = ["hyper", files / "aec.json", files / "react.json", "--mode", "oracle"]
    _, a = run_json(capsys, *argv)
    _, b = run_json(capsys, *argv)
    a.pop("duration_seconds"), b.pop("duration_seconds")
    assert a == b


def test_usage_errors(files, capsys):
    with pytest.raises(SystemExit) as info:
        main(["seq", str(files / "ec.dope"), str(files / "ex1.json"), "--property", "bogus"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE
    assert main(["hyper", str(files / "ec.json"), str(files / "react.json"), "--a", "1"]) == EXIT_USAGE
    assert main(["hyper", str(files / "ec.json"), str(files / "react.json"), "--a", "1", "--b", "2",
                 "--mode", "oracle"]) == EXIT_USAGE
    assert main(["seq", str(files / "ec.dope"), str(files / "ex1.json"), "--jobs", "0"]) == EXIT_USAGE


def test_bad_jobs_environment(files, capsys, monkeypatch):
    monkeypatch.setenv("DOPECHECK_JOBS", "many")
    assert main(["seq", str(files / "ec.dope"), str(files / "ex1.json")]) == EXIT_USAGE
    monkeypatch.setenv("DOPECHECK_JOBS", "2")
    assert main(["seq", str(files / "ec.dope"), str(files / "ex1.json")]) == 0


def test_input_errors(files, capsys):
    assert main(["seq", str(files / "missing.dope"), str(files / "ex1.json")]) == EXIT_DATAERR
    assert main(["seq", str(files / "broken.dope"), str(files / "ex1.json")]) == EXIT_DATAERR
    assert main(["seq", str(files / "ec.dope"), str(files / "broken.json")]) == EXIT_DATAERR
    assert main(["hyper", str(files / "broken.json"), str(files / "react.json")]) == EXIT_DATAERR
    assert main(["wp", str(files / "ec.dope"), str(files / "missing.json")]) == EXIT_DATAERR
    err = capsys.readouterr().err
    assert "missing.dope" in err and "2:" in err


@pytest.mark.parametrize("command", ["seq", "wp"])
def test_run_time_errors_are_input_errors(files, capsys, command):
    assert main([command, str(files / "div.dope"), str(files / "empty.json")]) == EXIT_DATAERR
    assert "division by zero" in capsys.readouterr().err


def test_table_filters(capsys):
    code, out = run(capsys, "table", "--nox-step", "0.05", "--program", "ec", "--property", "robust")
    assert code == 0
    rows = [line for line in out.splitlines()[2:] if line.strip()]
    assert len(rows) == 1 and "clean" in rows[0] and "strengthened" in rows[0]
    code, out = run(capsys, "table", "--nox-step", "0.05", "--program", "aec", "--json")
    data = json.loads(out)
    assert code == 0 and data["mismatches"] == 0 and len(data["rows"]) == 8
    assert {r["verdict"] for r in data["rows"]} == {"doped"}


def test_report_writes_csv_and_figures(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path), "--nox-step", "0.05", "--jobs", "1"]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"verdict_table.csv", "verdict_table.png", "seq_outputs.csv", "seq_outputs.png",
            "seq_distances.png", "react_constant_inputs.png", "seq_verdicts.csv"} <= names
    header = (tmp_path / "verdict_table.csv").read_text().splitlines()[0]
    assert header.startswith("property,program,nox_step,instance")


def test_console_script_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "dopecheck.cli", "seq", str(files / "aec.dope"),
                           str(files / "ex1.json")], capture_output=True, text=True)
    assert proc.returncode == 1 and "verdict: DOPED" in proc.stdout
