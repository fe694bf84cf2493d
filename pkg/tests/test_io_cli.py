import json
import math
import subprocess
import sys

import numpy as np
import pytest

from objlearn.cli import main
from objlearn.core import Bounds, ErrorRecord, RunLedger
from objlearn.experiments import SummaryTable
from objlearn.io import (ParseError, emit_ledger_csv, emit_plot_csv, emit_plot_svg,
                         emit_summary_json, load_ledger_csv, load_summary_json, parse_tntp,
                         parse_tsplib_lite)

TNTP = """<NUMBER OF ZONES> 2
<NUMBER OF NODES> 4
<FIRST THRU NODE> 3
<NUMBER OF LINKS> 3
<END OF METADATA>
~ init term capacity length fft b power speed toll type ;
1 3 100 1 2.5 0.15 4 0 0 1 ;
3 4 100 1 1.0 0.15 4 0 0 1 ;
4 2 100 1 3.0 0.15 4 0 0 1 ;
"""

TSP = """NAME: tiny
TYPE: OP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
3 0 8
NODE_SCORE_SECTION
1 0
2 10
3 20
DEPOT_SECTION
1
-1
EOF
"""


class TestTntp:
    def test_links(self):
        net = parse_tntp(TNTP)
        assert net.node_count == 4 and net.arc_count == 3
        np.testing.assert_array_equal(net.free_flow, [2.5, 1.0, 3.0])
        assert net.first_thru_node == 3
        g = net.graph()
        assert g.tails.tolist() == [0, 2, 3] and g.heads.tolist() == [2, 3, 1]

    def test_link_count_mismatch(self):
        with pytest.raises(ParseError, match="declares 4 links but the body has 3"):
            parse_tntp(TNTP.replace("<NUMBER OF LINKS> 3", "<NUMBER OF LINKS> 4"))

    def test_zone_threshold(self):
        net = parse_tntp(TNTP, zone_threshold=2)
        assert net.arc_count == 1
        assert (net.init_node[0], net.term_node[0]) == (3, 4)

    def test_malformed_row_names_line(self):
        with pytest.raises(ParseError, match="line 8"):
            parse_tntp(TNTP.replace("3 4 100 1 1.0", "3 x 100 1 1.0"))
        with pytest.raises(ParseError, match="line 8"):
            parse_tntp(TNTP.replace("3 4 100 1 1.0", "3 4 100 1 -1.0"))
        with pytest.raises(ParseError, match="outside"):
            parse_tntp(TNTP.replace("4 2 100", "9 2 100"))


class TestTsplib:
    def test_cost_rounding(self):
        inst = parse_tsplib_lite(TSP)
        assert inst.dimension == 3 and inst.depot == 1 and inst.name == "tiny"
        assert inst.cost(1, 2) == 5
        assert inst.cost(2, 3) == 5 and inst.cost(1, 3) == 8

    def test_to_pctsp(self):
        p = parse_tsplib_lite(TSP).to_pctsp(4.0)
        np.testing.assert_array_equal(p.revenues, [40, 80])
        np.testing.assert_array_equal(p.edge_costs, [5, 8, 5])

    def test_missing_prizes(self):
        text = TSP.replace("NODE_SCORE_SECTION\n1 0\n2 10\n3 20\n", "")
        with pytest.raises(ParseError, match="prize section"):
            parse_tsplib_lite(text)

    def test_depot_twice(self):
        with pytest.raises(ParseError, match="exactly one depot"):
            parse_tsplib_lite(TSP.replace("1\n-1", "1\n2\n-1"))

    def test_edge_weight_type(self):
        with pytest.raises(ParseError, match="EUC_2D"):
            parse_tsplib_lite(TSP.replace("EUC_2D", "GEO"))

    def test_dimension_mismatch(self):
        with pytest.raises(ParseError, match="DIMENSION"):
            parse_tsplib_lite(TSP.replace("DIMENSION: 3", "DIMENSION: 4"))


def _ledger(values):
    return RunLedger([ErrorRecord(t, a, b, a + b, bool(m))
                      for t, (a, b, m) in enumerate(values, start=1)])


class TestResultFiles:
    def test_single_zero_round(self, tmp_path):
        path = tmp_path / "l.csv"
        emit_ledger_csv(_ledger([(0.0, 0.0, 0)]), path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("round,objective_error,solution_error,total_error,"
                            "avg_objective_error,avg_solution_error,avg_total_error,mismatch")
        assert lines[1] == "1,0.0,0.0,0.0,0.0,0.0,0.0,0"
        assert len(lines) == 2

    def test_ledger_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        led = _ledger([(a, b, m) for a, b, m in zip(rng.random(20), rng.random(20),
                                                    rng.integers(0, 2, 20))])
        emit_ledger_csv(led, tmp_path / "l.csv")
        back = load_ledger_csv(tmp_path / "l.csv")
        assert [r.objective_error for r in back.records] == [r.objective_error for r in led.records]
        assert back.mismatch_count == led.mismatch_count

    def test_summary_round_trip(self, tmp_path):
        t = SummaryTable([5, 50], [0.1 / 3, 2 / 7], [0.0, 1e-17], [1.0, 2.0], [0.5, 0.25],
                         [math.pi, math.e], [0.0, 0.0], replications=3)
        emit_summary_json(t, tmp_path / "s.json", config={"a": 1}, seed=9)
        assert load_summary_json(tmp_path / "s.json") == t
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["seed"] == 9 and doc["config"] == {"a": 1}

    def test_plot_bound_column(self, tmp_path):
        led = _ledger([(0.1, 0.1, 1)] * 500)
        bounds = Bounds(1.0, 50, 500)
        emit_plot_csv(led, tmp_path / "p.csv", bounds.mwu_bound)
        rows = (tmp_path / "p.csv").read_text().splitlines()[1:]
        assert len(rows) == 500
        for row in rows:
            t, _, b = row.split(",")
            assert float(b) == pytest.approx(2 * math.sqrt(math.log(50) / int(t)), rel=1e-15)

    def test_svg(self, tmp_path):
        led = _ledger([(1.0 / t, 0.0, 0) for t in range(1, 30)])
        emit_plot_svg(led, tmp_path / "p.svg", Bounds(1.0, 5, 30).mwu_bound)
        text = (tmp_path / "p.svg").read_text()
        assert text.startswith("<svg") and text.count("<polyline") == 2

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            emit_ledger_csv(_ledger([(0, 0, 0)]), tmp_path / "missing" / "l.csv")


def _write_config(tmp_path, **kw):
    cfg = {"problem": "knapsack-lp", "learner": "mwu", "seed": 3, "replications": 2,
           "checkpoints": [5, 20], "output_dir": str(tmp_path / "out"),
           "generator": {"n": 6, "T": 20}}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


class TestCli:
    def test_run_writes_outputs(self, tmp_path, capsys):
        assert main(["run", "--config", str(_write_config(tmp_path, plot_svg=True))]) == 0
        out = tmp_path / "out"
        names = sorted(p.name for p in out.iterdir())
        assert names == ["ledger_0.csv", "ledger_1.csv", "plot_0.csv", "plot_0.svg",
                         "plot_1.csv", "plot_1.svg", "summary.json"]
        assert load_summary_json(out / "summary.json").checkpoints == [5, 20]

    def test_run_is_byte_identical(self, tmp_path):
        first = []
        for k in range(2):
            cfg = _write_config(tmp_path, output_dir=str(tmp_path / f"o{k}"))
            assert main(["run", "--config", str(cfg)]) == 0
            first.append((tmp_path / f"o{k}" / "ledger_1.csv").read_bytes())
        assert first[0] == first[1]

    @pytest.mark.parametrize("problem, learner, gen", [
        ("knapsack-lp", "lp-ftl", {"n": 4, "T": 10}),
        ("knapsack-ip", "ogd-dynamic", {"n": 5, "T": 10}),
        ("shortest-path", "mwu", {"T": 15, "grid_rows": 3, "grid_cols": 3,
                                  "schedule": {"kind": "abrupt"}}),
        ("pctsp", "ogd-fixed", {"node_count": 5, "T": 10}),
    ])
    def test_run_each_family(self, tmp_path, problem, learner, gen):
        cfg = _write_config(tmp_path, problem=problem, learner=learner, generator=gen,
                            replications=1, checkpoints=[5, 10])
        assert main(["run", "--config", str(cfg)]) == 0
        assert (tmp_path / "out" / "ledger_0.csv").exists()

    def test_project(self, capsys):
        assert main(["project", "--set", "simplex", "--vector", "1.2,0.4"]) == 0
        assert capsys.readouterr().out.strip() == "0.9,0.1"
        assert main(["project", "--set", "box", "--vector=-1,3", "--lo", "0,0",
                     "--hi", "1,2"]) == 0
        assert capsys.readouterr().out.strip() == "0,2"

    def test_lp_solve(self, tmp_path, capsys):
        path = tmp_path / "lp.json"
        path.write_text(json.dumps({"c": [-2, -1], "ub_lhs": [[1, 1]], "ub_rhs": [1]}))
        assert main(["lp-solve", str(path)]) == 0
        out = capsys.readouterr().out.split()
        assert out == ["status=optimal", "value=-2", "x=1,0"]

    def test_parse_check(self, tmp_path, capsys):
        (tmp_path / "n.tntp").write_text(TNTP)
        (tmp_path / "i.tsp").write_text(TSP)
        assert main(["parse-check", "tntp", str(tmp_path / "n.tntp")]) == 0
        assert "arcs=3" in capsys.readouterr().out
        assert main(["parse-check", "tsplib", str(tmp_path / "i.tsp")]) == 0
        assert "dimension=3" in capsys.readouterr().out

    def test_slope(self, tmp_path, capsys):
        led = _ledger([(t ** -0.5 * (1 if t == 1 else 0), 0.0, 0) for t in range(1, 3)])
        emit_ledger_csv(led, tmp_path / "l.csv")
        assert main(["slope", str(tmp_path / "l.csv"), "--window", "1,2"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(-1.0)

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1
        assert "not found" in capsys.readouterr().err

    @pytest.mark.parametrize("bad", [
        {"lerner": "mwu"},
        {"generator": {"n": 6, "T": 20, "budget": 3}},
        {"learner": "lp-ftl", "problem": "pctsp", "generator": {}},
        {"problem": "tsp"},
        {"replications": 0},
        {"learner_options": {"G": "huge"}},
        {"problem": "shortest-path", "generator": {"schedule": {"kind": "abrupt", "x": 1}}},
    ])
    def test_bad_configs(self, tmp_path, bad):
        assert main(["run", "--config", str(_write_config(tmp_path, **bad))]) == 1

    def test_unknown_flag(self, capsys):
        assert main(["project", "--set", "simplex", "--vector", "1", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_runtime_failure_exits_2(self, tmp_path):
        cfg = _write_config(tmp_path, problem="shortest-path",
                            generator={"T": 5, "network_file": str(tmp_path / "none.tntp")})
        assert main(["run", "--config", str(cfg)]) == 2

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "objlearn", "project", "--set", "simplex",
                              "--vector", "2,0"], capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.strip() == "1,0"
