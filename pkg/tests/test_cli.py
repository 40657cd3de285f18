import json
from importlib import resources

import pytest

from ldlcert import __version__
from ldlcert.cli import main
from ldlcert.correlations import Scenario, deterministic_behavior
from ldlcert.fileio import document, write_json

TABLE = str(resources.files("ldlcert.data").joinpath("table1.json"))


@pytest.fixture
def hardy_file(tmp_path):
    path = tmp_path / "hardy.json"
    assert main(["quantum", "--emit", "behavior", "--out", str(path)]) == 0
    return path


def read(path):
    with open(path) as fh:
        return json.load(fh)


def test_analyze_table(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["analyze", TABLE, "--out", str(out)]) == 0
    rep = read(out)
    assert rep["critical_ratio"] == pytest.approx(0.267, abs=0.001)
    assert rep["mdl_ldl_threshold"] == pytest.approx(0.15529, abs=1e-5)
    assert rep["version"] == __version__ and rep["flags"]["input"] == TABLE
    assert "critical" in capsys.readouterr().out


def test_analyze_hardy(hardy_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["analyze", str(hardy_file), "--errors", "none", "--out", str(out)]) == 0
    assert read(out)["critical_ratio"] < 1e-12


def test_bad_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert main(["analyze", str(bad)]) == 2
    assert main(["analyze", str(tmp_path / "absent.json")]) == 2
    sc = Scenario((3, 2), (2, 2))
    odd = tmp_path / "odd.json"
    write_json(odd, document(deterministic_behavior(sc, [[0, 0, 0], [0, 0]])))
    assert main(["analyze", str(odd)]) == 3


def test_membership_exit_codes(hardy_file, tmp_path):
    out = tmp_path / "m.json"
    assert main(["membership", str(hardy_file), "--eta-min", "0.1", "--eta-max", "1", "--out", str(out)]) == 1
    cert = read(out)["certificate"]
    assert cert["status"] == "infeasible" and cert["dual"] and cert["inequality"]["coefficients"]
    det = tmp_path / "det.json"
    write_json(det, document(deterministic_behavior(Scenario.binary(), [[0, 1], [1, 1]])))
    assert main(["membership", str(det), "--eta-min", "0.3", "--eta-max", "0.9"]) == 0
    assert main(["membership", TABLE, "--eta-min", "0", "--eta-max", "1"]) == 0
    assert main(["membership", str(hardy_file), "--mdl", "1/4", "1/4", "--mode", "exact"]) == 1
    assert main(["membership", str(hardy_file)]) == 2


def test_membership_with_efficiency_file(hardy_file, tmp_path):
    eff = tmp_path / "eff.json"
    eff.write_text(json.dumps({"efficiencies": [[0.09, 0.09], [0.09, 0.09]]}))
    assert main(["membership", str(hardy_file), "--eta-min", "0.3", "--eta-max", "0.3",
                 "--efficiencies", str(eff)]) == 1
    lossy = tmp_path / "lossy.json"
    assert main(["quantum", "--loss", "0.3", "0.3", "--out", str(lossy)]) == 0
    assert main(["membership", str(lossy), "--eta-min", "0.3", "--eta-max", "0.3",
                 "--efficiencies", "observed"]) == 1


def test_quantum_counts(tmp_path):
    counts = tmp_path / "c.json"
    assert main(["quantum", "--emit", "counts", "--shots", "1000000", "--loss", "0.3", "0.3",
                 "--seed", "1", "--out", str(counts)]) == 0
    assert read(counts)["kind"] == "counts"
    rep = tmp_path / "r.json"
    assert main(["analyze", str(counts), "--out", str(rep)]) == 0
    assert read(rep)["critical_ratio"] < 0.05
    again = tmp_path / "c2.json"
    main(["quantum", "--emit", "counts", "--shots", "1000000", "--loss", "0.3", "0.3",
          "--seed", "1", "--out", str(again)])
    strip = lambda d: {k: v for k, v in d.items() if k != "generator"}  # noqa: E731
    assert strip(read(again)) == strip(read(counts))
    assert main(["quantum", "--shots", "0"]) == 2
    assert main(["quantum", "--emit", "counts"]) == 2


def test_vertices(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["vertices", "--eta-min", "0.5", "--eta-max", "1", "--out", str(out)]) == 0
    assert read(out)["count"] == 256
    assert main(["vertices"]) == 0
    assert main(["vertices", "--mdl", "0.2", "0.3"]) == 0
    assert capsys.readouterr().out.split("\n")[1:3] == ["16 vertices", "96 vertices"]
    assert main(["vertices", "--inputs", "4", "4", "--outcomes", "4", "4", "--eta-min", "0.5"]) == 3


def test_bridge(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["bridge", "--trials", "20", "--seed", "3", "--out", str(a)]) == 0
    monkeypatch.setenv("LDLCERT_THREADS", "2")
    assert main(["bridge", "--trials", "20", "--seed", "3", "--out", str(b)]) == 0
    ra, rb = read(a), read(b)
    assert ra["failures"] == 0
    assert (ra["threads"], rb["threads"]) == (1, 2)
    body = lambda d: {k: v for k, v in d.items() if k not in ("flags", "threads")}  # noqa: E731
    assert body(ra) == body(rb)
    assert main(["bridge", "--eta-min", "0"]) == 3


def test_strategy(hardy_file, tmp_path):
    out = tmp_path / "s.json"
    assert main(["strategy", str(hardy_file), "--eta", "0.5", "--eta-min-target", "0", "--out", str(out)]) == 0
    assert read(out)["kind"] == "behavior"
    local = tmp_path / "la.json"
    local.write_text(json.dumps({"table": [[1, 1], [0, 0]]}))
    assert main(["strategy", str(hardy_file), "--eta", "0.5", "--eta-min-target", "1",
                 "--local-a", str(local), "--out", str(out)]) == 0
