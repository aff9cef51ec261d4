import csv
import io
import json

import pytest

from twistorlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_curvature_s4(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "s4_round", "--samples", "5", "--seed", "1")
    rep = json.loads(out)
    assert code == 0
    assert rep["command"] == "curvature" and rep["seed"] == 1
    assert len(rep["rows"]) == 5
    assert all(r["w_plus_norm"] <= 1e-8 for r in rep["rows"])
    assert set(rep) == {"command", "inputs", "rows", "summary", "seed", "tool_version"}


def test_curvature_flat_point(capsys):
    code, out, err = run(capsys, "curvature", "--metric", "flat", "--point", "0,0,0,0")
    assert code == 0
    assert json.loads(out)["rows"][0]["scalar"] == 0
    assert "scalar=0" in err


def test_curvature_cp2(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "cp2_fubini_study", "--samples", "5",
                       "--seed", "1", "--quiet")
    rows = json.loads(out)["rows"]
    assert all(r["w_minus_norm"] <= 1e-8 and r["w_plus_norm"] > 1e-3 for r in rows)
    assert all(abs(r["scalar"] - 24) < 1e-8 and r["einstein_residual"] < 1e-8 for r in rows)


def test_curvature_csv(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "s2xs2", "--samples", "3", "--output", "csv",
                       "--quiet")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3
    assert len(rows[0]["point"].split(";")) == 4


def test_quiet_silences_stderr(capsys):
    _, _, err = run(capsys, "curvature", "--metric", "flat", "--samples", "2", "--quiet")
    assert err == ""


def test_domain_violation_exit_3(capsys):
    code, _, err = run(capsys, "curvature", "--metric", "s4_round", "--point", "3,0,0,0")
    assert code == 3 and "outside" in err


def test_bad_inputs_exit_2(capsys, tmp_path):
    assert run(capsys, "curvature", "--metric", "torus")[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("g11 = 1 +\n")
    assert run(capsys, "curvature", "--file", str(bad))[0] == 2
    assert run(capsys, "curvature", "--file", str(tmp_path / "missing.txt"))[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["curvature", "--point", "1,2"])
    assert info.value.code == 2


def test_metric_file(capsys, tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("domain = ball(1)\ng11 = exp(x1); g22 = exp(x1); g33 = exp(x1); g44 = exp(x1)\n")
    code, out, _ = run(capsys, "curvature", "--file", str(path), "--samples", "3", "--quiet")
    assert code == 0
    # conformally flat: Weyl vanishes
    assert all(r["w_plus_norm"] < 1e-8 and r["w_minus_norm"] < 1e-8 for r in json.loads(out)["rows"])


def test_twistor_check_flat(capsys):
    code, out, err = run(capsys, "twistor-check", "--metric", "flat", "--samples", "5")
    rep = json.loads(out)
    assert code == 0
    assert "integrable-consistent: yes" in err
    assert rep["summary"]["integrable_consistent"] == "yes"
    assert rep["summary"]["max_nijenhuis"] <= 1e-4


def test_twistor_check_cp2_and_reversed(capsys):
    _, out, err = run(capsys, "twistor-check", "--metric", "cp2_fubini_study", "--samples", "5")
    assert "integrable-consistent: no" in err
    assert json.loads(out)["summary"]["checks"]["nijenhuis_matches_weyl"]
    _, out, err = run(capsys, "twistor-check", "--metric", "cp2_fubini_study", "--reversed",
                      "--samples", "5")
    assert "integrable-consistent: yes" in err


def test_gysin_s4(capsys):
    code, out, err = run(capsys, "gysin", "--preset", "s4")
    row = json.loads(out)["rows"][0]
    assert code == 0
    assert row["H_Z"] == ["Z", "0", "Z", "0", "Z", "0", "Z"]
    assert all(row["conditions"].values())
    assert "H*(Z): Z, 0, Z, 0, Z, 0, Z" in err


def test_gysin_random(capsys):
    code, out, err = run(capsys, "gysin", "--random", "200", "--seed", "7")
    assert code == 0
    assert json.loads(out)["summary"]["equivalence"] == "equivalence held on 200/200"
    assert "equivalence held on 200/200" in err


def test_gysin_inconsistent_exit_4(capsys, tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"H": [{"rank": 1}, {"rank": 0, "torsion": [2]}, {"rank": 0},
                                   {"rank": 0}, {"rank": 1}]}))
    code, _, err = run(capsys, "gysin", "--input", str(p))
    assert code == 4 and "torsion-free" in err


def test_gysin_malformed_exit_2(capsys, tmp_path):
    p = tmp_path / "h.json"
    p.write_text("[")
    assert run(capsys, "gysin", "--input", str(p))[0] == 2


def test_lattice_s4(capsys):
    code, out, _ = run(capsys, "lattice", "--preset", "s4")
    s = json.loads(out)["summary"]
    assert code == 0
    assert s["todd"] == "1/2" and not s["todd_integral"]
    assert s["almost_complex"] == "no" and s["spin"]


def test_lattice_cp2(capsys):
    _, out, _ = run(capsys, "lattice", "--preset", "cp2", "--bound", "5")
    rows = json.loads(out)["rows"]
    assert [r["c"] for r in rows] == [[-3], [3]]
    assert [r["index_c2"] for r in rows] == [0, 0]


def test_lattice_k3(capsys):
    _, out, _ = run(capsys, "lattice", "--preset", "k3", "--bound", "2", "--max-solutions", "5")
    rep = json.loads(out)
    assert rep["summary"]["spin"] and rep["summary"]["todd"] == "2"
    assert rep["rows"][0]["c"] == [0] * 22


def test_lattice_budget_exit_5(capsys):
    assert run(capsys, "lattice", "--preset", "k3", "--budget", "100")[0] == 5


def test_lattice_input(capsys, tmp_path):
    p = tmp_path / "l.json"
    p.write_text(json.dumps({"gram": [[0, 1], [1, 0]], "b1": 1, "w2": [0, 0]}))
    code, out, _ = run(capsys, "lattice", "--input", str(p), "--bound", "3")
    s = json.loads(out)["summary"]
    assert (s["chi"], s["tau"]) == (2, 0)
    p.write_text(json.dumps({"gram": [[2]], "b1": 0}))
    assert run(capsys, "lattice", "--input", str(p))[0] == 2


def test_reports_are_deterministic(capsys):
    argv = ["twistor-check", "--metric", "s2xs2", "--samples", "3", "--seed", "4", "--quiet"]
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    assert a == b


def test_threads_do_not_change_report(capsys, monkeypatch):
    argv = ["twistor-check", "--metric", "s4_round", "--samples", "4", "--quiet"]
    a = run(capsys, *argv)[1]
    monkeypatch.setenv("TWISTOR_THREADS", "4")
    b = run(capsys, *argv)[1]
    assert a == b
