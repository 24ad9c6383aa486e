import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

import graphforms
from graphforms import AnalysisConfig, Graph, GraphFamily, GraphWithBoundary, InputError, Report
from graphforms.cli import main
from graphforms.report import csv_rows, emit_report, parse_graph_data, parse_graph_spec, run_analysis, to_json

DATA = Path(graphforms.__file__).parent / "data"
CHAIN_CFG = {"schedule": [10, 14, 18, 22, 26]}


def test_parse_examples(tmp_path):
    g = parse_graph_data({"vertices": [{"id": "a"}, {"id": "b"}], "edges": [["a", "b", 2.0]]})
    assert isinstance(g, Graph) and g.n == 2 and g.b[0, 1] == 2.0
    fam = parse_graph_data({"generator": {"kind": "lattice", "params": {"d": 3}}})
    assert isinstance(fam, GraphFamily)
    with pytest.raises(InputError, match=r"asymmetric weights on pair \('b', 'a'\)"):
        parse_graph_data({"vertices": [{"id": "a"}, {"id": "b"}],
                          "edges": [["a", "b", 1.0], ["b", "a", 2.0]]})
    gb, beta = parse_graph_spec(DATA / "three_vertex.json")
    assert isinstance(gb, GraphWithBoundary) and gb.n_interior == 1
    np.testing.assert_array_equal(beta.beta, [1.0, 1.0])
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": [\n  {"id": 0},\n  oops]}')
    with pytest.raises(InputError, match="line 3"):
        parse_graph_spec(bad)


def test_boundary_spec_reorders_and_reads_mu():
    data = {"vertices": [{"id": "z"}, {"id": "x", "m": 2.0}], "edges": [["x", "z", 1.0]],
            "boundary": ["z"], "mu": {"z": 0.5}}
    gb = parse_graph_data(data)
    assert list(gb.host.labels) == ["x", "z"] and gb.m[0] == 2.0 and gb.mu[0] == 0.5


def test_command_object_mismatch():
    g = Graph.from_edges(2, [(0, 1, 1.0)])
    with pytest.raises(InputError):
        run_analysis(g, "boundary:dtn")
    gb, _ = parse_graph_spec(DATA / "three_vertex.json")
    with pytest.raises(InputError):
        run_analysis(gb, "recurrence")
    with pytest.raises(InputError):
        run_analysis(g, "no-such-command")


def test_config_validation():
    with pytest.raises(InputError):
        AnalysisConfig.from_dict({"tol_recc": 1.0})
    assert AnalysisConfig.from_dict({"beta": "inf"}).beta == math.inf


def test_dtn_report_and_round_trip():
    gb, beta = parse_graph_spec(DATA / "three_vertex.json")
    rep = run_analysis(gb, "boundary:dtn", AnalysisConfig(), beta)
    q = rep.tables["q_dn"]
    assert q[0]["col_z1"] == pytest.approx(2 / 3) and q[0]["col_z2"] == pytest.approx(-1 / 3)
    assert rep.verdicts["dirichlet_to_neumann"]["label"] == "exact for the finite model only"
    text = to_json(rep)
    again = Report.from_dict(json.loads(text))
    assert to_json(again) == text


def test_robin_report():
    gb, beta = parse_graph_spec(DATA / "three_vertex.json")
    rep = run_analysis(gb, "boundary:robin", AnalysisConfig(), beta)
    assert json.dumps(rep.tables)  # plain data
    flat = json.loads(to_json(rep))
    assert "robin_operator" in flat["tables"] or any("robin" in k for k in flat["tables"])


def test_csv_row_count():
    g = parse_graph_data(json.loads((DATA / "path3.json").read_text()))
    rep = run_analysis(g, "capacity")
    expected = sum(len([k for k in row if k != "level"]) for rows in rep.tables.values() for row in rows)
    assert len(csv_rows(rep)) == expected
    parsed = list(csv.reader(io.StringIO(emit_report(rep, "csv"))))
    assert len(parsed) == 1 + len(rep.verdicts) + expected


def test_empty_evidence(tmp_path):
    rep = Report("capacity", {"capacity": {"verdict": "Computed"}}, {}, {})
    path = tmp_path / "r.json"
    emit_report(rep, "json", path)
    assert json.loads(path.read_text())["verdicts"]["capacity"]["verdict"] == "Computed"
    assert emit_report(rep, "csv").splitlines() == ["table,level,quantity,value", "verdict,capacity,verdict,Computed"]


def test_non_finite_floats_are_strings():
    rep = Report("x", {}, {"t": [{"level": 1, "v": math.inf}]}, {})
    assert json.loads(to_json(rep))["tables"]["t"][0]["v"] == "inf"


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "o.json"
    assert main(["boundary:dtn", "--input", str(DATA / "three_vertex.json"), "--output", str(out)]) == 0
    assert json.loads(out.read_text())["command"] == "boundary:dtn"
    assert main(["recurrence", "--input", str(tmp_path / "missing.json")]) == 2
    assert main(["boundary:dtn", "--input", str(DATA / "path3.json")]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text('{"max_vertices": 5}')
    assert main(["recurrence", "--input", str(DATA / "z3.json"), "--config", str(cfg)]) == 3
    err = capsys.readouterr().err
    assert "input error" in err and "solver failure" in err


def test_cli_csv_stdout(capsys):
    assert main(["capacity", "--input", str(DATA / "path3.json"), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("table,level,quantity,value\n")


def test_chain_completeness_report(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(CHAIN_CFG))
    out = tmp_path / "o.json"
    assert main(["completeness", "--input", str(DATA / "chain4.json"), "--config", str(cfg),
                 "--output", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["verdicts"]["stochastic_completeness"]["verdict"] == "IncompleteCertified"
    assert rep["config"]["schedule"] == CHAIN_CFG["schedule"]


def test_determinism(tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"{k}.json"
        assert main(["liouville-hypotheses", "--input", str(DATA / "z1.json"), "--output", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
