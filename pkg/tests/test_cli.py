import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from carleman_gen.cli import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_INCONCLUSIVE, EXIT_OK, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, name="c.json", **doc):
    body = {"schema_version": 1, "sequence": {"preset": "gevrey", "beta": 2}, **doc}
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return path


def load(path):
    return json.loads(Path(path).read_text())


def test_analyze_factorial(tmp_path):
    assert run(["analyze-seq", "--config", str(CONFIGS / "factorial.json"), "--out", str(tmp_path)]) == EXIT_OK
    rep = load(tmp_path / "analyze_seq.json")
    bc = rep["conditions"]["BC"]
    assert bc["verdict"] == "holds-with-witness"
    assert bc["witnesses"]["h"] == pytest.approx(2.0, rel=1e-12)
    assert bc["witnesses"]["l"] == pytest.approx(1.0, rel=1e-8)
    assert rep["conditions"]["SGR"]["verdict"] == "fails-with-counterexample"
    rows = list(csv.reader((tmp_path / "m_samples.csv").open()))
    assert rows[0] == ["lambda", "M", "log_S", "log_P"]
    assert float(rows[1][1]) == pytest.approx(float(rows[1][0]), rel=1e-12)


def test_analyze_constant_reports_wgr_failure(tmp_path):
    cfg = write_config(tmp_path, sequence={"preset": "constant"}, output=str(tmp_path / "o"))
    assert run(["analyze-seq", "--config", str(cfg)]) == EXIT_OK
    rep = load(tmp_path / "o" / "analyze_seq.json")
    assert rep["conditions"]["WGR"]["verdict"] == "fails-with-counterexample"
    assert rep["m_samples"]["series_diverges_from"] == 1.0


def test_analyze_gevrey(tmp_path):
    cfg = write_config(tmp_path, output=str(tmp_path / "o"))
    assert run(["analyze-seq", "--config", str(cfg)]) == EXIT_OK
    rep = load(tmp_path / "o" / "analyze_seq.json")
    for cond in ("SGR", "BC"):
        assert rep["conditions"][cond]["verdict"] == "holds-with-witness"
    assert rep["inequalities"]["BC2"]["violations"] == 0
    assert set(rep["inequalities"]["SGR-consequence"]) == {"1", "4", "16"}


@pytest.mark.parametrize("name,mode,verdict", [
    ("gevrey2_k06", "beurling", "generates"),
    ("gevrey2_sqrt", "beurling", "does-not-generate"),
    ("gevrey2_sqrt", "roumieu", "generates"),
    ("gevrey2_imag", "roumieu", "does-not-generate"),
])
def test_decide(tmp_path, name, mode, verdict):
    assert run(["decide", "--config", str(CONFIGS / f"{name}.json"), "--mode", mode, "--out", str(tmp_path)]) == EXIT_OK
    rep = load(tmp_path / f"decide_{mode}.json")
    assert rep["verdict"]["verdict"] == verdict
    rows = list(csv.reader((tmp_path / f"a_of_b_{mode}.csv").open()))
    assert rows[0] == ["b", "a_star", "trend", "attained_k"] and len(rows) == 18


def test_classify_small(tmp_path):
    cfg = write_config(
        tmp_path,
        evaluator={"kind": "proxy"},
        spectrum={"rule": {"c": 0, "p": 1, "q": 1}},
        truncation={"K": 10000},
        grids={"s": [0.5, 2], "t": [1, 2]},
        output=str(tmp_path / "o"),
    )
    assert run(["classify", "--config", str(cfg)]) == EXIT_OK
    rep = load(tmp_path / "o" / "classify.json")
    assert rep["decide_beurling"] == "does-not-generate"
    assert rep["consistency"]["consistent"]
    verdicts = {c["vector"]: c["verdict"] for c in rep["orbit_classes"]}
    assert verdicts == {"1/k^2": "non-member", "exp(-k)": "Beurling-member", "1/k": "non-member"}
    traces = tmp_path / "o" / "traces"
    assert (traces / "derivative_norms_1_k_2_t1.csv").read_text().startswith("n,log_norm\n")
    assert (traces / "orbit_1_k_2.csv").read_text().startswith("t,k,re,im\n")


def test_classify_inconclusive_exit(tmp_path):
    cfg = write_config(
        tmp_path,
        spectrum={"rule": {"c": 1, "p": 0.5, "q": 1}},
        truncation={"K": 10000},
        grids={"s": [0.5, 2], "t": [0.5, 2]},
        basket=["inv_square"],
        output=str(tmp_path / "o"),
    )
    assert run(["classify", "--config", str(cfg)]) == EXIT_INCONCLUSIVE


def test_counterexample(tmp_path):
    assert run(["counterexample", "--config", str(CONFIGS / "factorial.json"), "--out", str(tmp_path)]) == EXIT_OK
    rep = load(tmp_path / "counterexample.json")
    assert rep["demo"]["verdict"] == "diverging"
    # with M = identity the control terms e^((sqrt(10) - 3) n) / n^4 turn upward
    # near n = 25, so at K = 100 it stays below the threshold without settling
    assert rep["control"]["crossing_index"] is None
    assert rep["control"]["verdict"] != "diverging"
    assert rep["conclusion"]["t"] == 1.0
    assert rep["decide"]["Beurling"] == "does-not-generate"
    assert (tmp_path / "trace.csv").read_text().startswith("k,log_partial_sum,log_term\n")


def test_counterexample_rejects_bad_b(tmp_path, capsys):
    assert run(["counterexample", "--config", str(CONFIGS / "factorial.json"), "--b", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "--b: must be positive" in capsys.readouterr().err


def test_boundary(tmp_path):
    assert run(["boundary", "--config", str(CONFIGS / "factorial.json"), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "boundary.csv").open()))
    assert rows[0] == ["im", "re"] and len(rows) == 202
    assert [float(x) for x in rows[1]] == [-10.0, -10.0]


@pytest.mark.parametrize("doc,field", [
    ({"sequence": {"preset": "gevrey", "beta": 2}}, "schema_version"),
    ({"schema_version": 2, "sequence": {"preset": "factorial"}}, "schema_version"),
    ({"schema_version": 1, "sequence": {"preset": "bessel"}}, "sequence.preset"),
    ({"schema_version": 1, "sequence": {"preset": "factorial"}, "truncation": {"K": 10 ** 8}}, "truncation.K"),
    ({"schema_version": 1, "sequence": {"preset": "factorial"}, "truncation": {"N": 20000}}, "truncation.N"),
    ({"schema_version": 1, "sequence": {"preset": "factorial"}, "grids": {"b": []}}, "grids.b"),
    ({"schema_version": 1, "sequence": {"preset": "factorial"}, "grids": {"t": [-1]}}, "grids.t"),
    ({"schema_version": 1, "sequence": {"preset": "factorial"}, "colour": 1}, "unknown key"),
])
def test_config_errors(tmp_path, capsys, doc, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run(["decide", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 1,\n "sequence": }')
    assert run(["decide", "--config", str(path)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert run(["decide", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_divergence_exit(tmp_path, capsys):
    cfg = write_config(tmp_path, spectrum={"points": [[800, 1], [-1, 2]]}, grids={"t": [1]},
                       output=str(tmp_path / "o"))
    assert run(["classify", "--config", str(cfg)]) == EXIT_DIVERGENCE
    assert "numerical divergence" in capsys.readouterr().err


def test_report_round_trip(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(["decide", "--config", str(CONFIGS / "gevrey2_sqrt.json"), "--mode", "roumieu", "--out", str(first)]) == 0
    report = first / "decide_roumieu.json"
    assert load(report)["config"]["spectrum"]["rule"]["p"] == 0.5
    assert run(["decide", "--config", str(report), "--mode", "roumieu", "--out", str(second)]) == 0
    for name in ("decide_roumieu.json", "a_of_b_roumieu.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_figures(tmp_path):
    assert run(["boundary", "--config", str(CONFIGS / "factorial.json"), "--out", str(tmp_path), "--figures"]) == 0
    assert run(["counterexample", "--config", str(CONFIGS / "factorial.json"), "--out", str(tmp_path), "--figures"]) == 0
    for name in ("boundary.png", "partial_sums.png"):
        data = (tmp_path / name).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
    plain = tmp_path / "plain"
    assert run(["boundary", "--config", str(CONFIGS / "factorial.json"), "--out", str(plain)]) == 0
    assert not list(plain.glob("*.png"))


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "carleman_gen.cli", "boundary", "--config", str(CONFIGS / "factorial.json"),
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "carleman_gen.cli", "nonsense", "--config", "x"],
                         capture_output=True, text=True)
    assert bad.returncode == 2
