"""End-to-end command-line runs against temp directories."""

import json

import numpy as np
import pytest
import yaml

from resonet.cli import main
from resonet.graph_core import dump_edge_list, load_edge_list, \
    random_complete_graph


def run(tmp_path, command, cfg, out="out", seed=None):
    cfg_path = tmp_path / f"{command}.yaml"
    cfg_path.write_text(yaml.safe_dump(cfg))
    args = [command, "--config", str(cfg_path), "--out", str(tmp_path / out)]
    if seed is not None:
        args += ["--seed", str(seed)]
    return main(args)


@pytest.fixture()
def graph_file(tmp_path):
    g = random_complete_graph(6, 0.3, seed=5)
    path = tmp_path / "main.edges"
    path.write_text(dump_edge_list(g))
    return path


class TestGenerate:
    def test_complete_graph_deterministic_bytes(self, tmp_path):
        cfg = {"kind": "complete", "n": 10, "w_p": 0.3, "seed": 1}
        assert run(tmp_path, "generate", cfg, out="a") == 0
        assert run(tmp_path, "generate", cfg, out="b") == 0
        a = (tmp_path / "a" / "graph.edges").read_bytes()
        b = (tmp_path / "b" / "graph.edges").read_bytes()
        assert a == b
        g = load_edge_list(a.decode())
        assert g.n == 10 and g.m == 45

    def test_incomplete_maximal_is_complete(self, tmp_path):
        cfg = {"kind": "incomplete", "n": 4, "n_e": 6, "w_p": 0.0, "seed": 0}
        assert run(tmp_path, "generate", cfg) == 0
        g = load_edge_list((tmp_path / "out" / "graph.edges").read_text())
        assert g.m == 6

    def test_ego_subgraph_bfs(self, tmp_path, graph_file):
        cfg = {"kind": "ego", "input": str(graph_file), "center": 1, "radius": 1}
        assert run(tmp_path, "generate", cfg) == 0
        doc = json.loads((tmp_path / "out" / "graph.json").read_text())
        # complete main graph: radius 1 reaches everything
        assert doc["n"] == 6
        assert "vertex_map" in doc

    def test_ego_radius_two_matches_bfs_oracle(self, tmp_path):
        from resonet.graph_core import dump_edge_list, random_incomplete_graph

        g = random_incomplete_graph(15, 20, 0.3, seed=9)
        src = tmp_path / "big.edges"
        src.write_text(dump_edge_list(g))
        cfg = {"kind": "ego", "input": str(src), "center": 3, "radius": 2}
        assert run(tmp_path, "generate", cfg) == 0
        doc = json.loads((tmp_path / "out" / "graph.json").read_text())
        # independent BFS over the edge list
        adj = {}
        for (i, j) in g.edges:
            adj.setdefault(i, set()).add(j)
            adj.setdefault(j, set()).add(i)
        dist = {3: 0}
        frontier = [3]
        for d in (1, 2):
            nxt = []
            for u in frontier:
                for v in adj.get(u, ()):
                    if v not in dist:
                        dist[v] = d
                        nxt.append(v)
            frontier = nxt
        assert set(map(int, doc["vertex_map"])) == set(dist)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = {"kind": "complete", "n": 5, "w_p": 0.3, "seed": 1}
        assert run(tmp_path, "generate", cfg, out="a", seed=2) == 0
        assert run(tmp_path, "generate", {**cfg, "seed": 2}, out="b") == 0
        assert ((tmp_path / "a" / "graph.edges").read_bytes()
                == (tmp_path / "b" / "graph.edges").read_bytes())

    def test_unknown_key_rejected(self, tmp_path):
        cfg = {"kind": "complete", "n": 5, "w_p": 0.3, "bogus": 1}
        assert run(tmp_path, "generate", cfg) == 1


class TestAnalyze:
    def test_single_vertex_objective_value(self, tmp_path):
        # a 2-vertex graph is the smallest edge-list-expressible system;
        # use the forced single-vertex value through a direct weight file
        path = tmp_path / "one.edges"
        path.write_text("1 2 1.0\n")
        cfg = {"graph": str(path), "epsilon": 10.0, "gamma": 1e-6, "h": 0.1,
               "bins": 4}
        assert run(tmp_path, "analyze", cfg) == 0
        doc = json.loads((tmp_path / "out" / "analysis.json").read_text())
        assert doc["J"] > 0
        rows = (tmp_path / "out" / "spectrum.csv").read_text().strip().splitlines()
        counts = [int(r.split(",")[2]) for r in rows[1:]]
        assert sum(counts) == 2

    def test_decoupled_combined_matches_main(self, tmp_path, graph_file):
        base = {"graph": str(graph_file), "epsilon": 10.0, "gamma": 1e-6,
                "h": 0.1}
        assert run(tmp_path, "analyze", base, out="main") == 0
        j_main = json.loads((tmp_path / "main" / "analysis.json").read_text())["J"]
        cfg = {**base, "c": 0.0, "aux_kind": "complete", "gamma_aux": 1e-6}
        assert run(tmp_path, "analyze", cfg, out="combined") == 0
        j_aux = json.loads((tmp_path / "combined" / "analysis.json").read_text())["J_aux"]
        assert j_aux == pytest.approx(j_main, rel=1e-9)

    def test_missing_graph_is_ingestion_error(self, tmp_path):
        cfg = {"graph": str(tmp_path / "nope.edges"), "epsilon": 10.0,
               "gamma": 1e-6, "h": 0.1}
        assert run(tmp_path, "analyze", cfg) == 2

    def test_malformed_graph_is_ingestion_error(self, tmp_path):
        bad = tmp_path / "bad.edges"
        bad.write_text("1 1 3.0\n")
        cfg = {"graph": str(bad), "epsilon": 10.0, "gamma": 1e-6, "h": 0.1}
        assert run(tmp_path, "analyze", cfg) == 2


class TestOptimize:
    def test_weights_run_writes_results(self, tmp_path, graph_file):
        cfg = {"method": "weights", "graph": str(graph_file), "epsilon": 10.0,
               "gamma": 1e-4, "h": 0.1, "w_min": 1e-3, "max_iter": 200}
        assert run(tmp_path, "optimize", cfg) == 0
        doc = json.loads((tmp_path / "out" / "result.json").read_text())
        assert doc["converged"] and doc["percent_decrease"] > 10
        g = load_edge_list((tmp_path / "out" / "optimized.edges").read_text())
        assert g.m == 15

    def test_nonconvergence_exit_code_still_writes(self, tmp_path, graph_file):
        cfg = {"method": "weights", "graph": str(graph_file), "epsilon": 10.0,
               "gamma": 1e-4, "h": 0.1, "w_min": 1e-3, "max_iter": 2}
        assert run(tmp_path, "optimize", cfg) == 4
        assert (tmp_path / "out" / "result.json").exists()
        assert (tmp_path / "out" / "optimized.edges").exists()

    def test_infeasible_budget_exit_code(self, tmp_path, graph_file):
        cfg = {"method": "weights", "graph": str(graph_file), "epsilon": 10.0,
               "gamma": 1e-4, "h": 0.1, "w_min": 10.0, "w_tot": 1.0}
        assert run(tmp_path, "optimize", cfg) == 3

    def test_absorber_run(self, tmp_path, graph_file):
        cfg = {"method": "absorber", "graph": str(graph_file), "epsilon": 10.0,
               "gamma": 1e-6, "h": 0.1, "gamma_aux": 1e-6, "r_m": 5.0,
               "c": 0.4, "aux_kind": "complete", "max_iter": 40}
        code = run(tmp_path, "optimize", cfg)
        assert code in (0, 4)
        doc = json.loads((tmp_path / "out" / "result.json").read_text())
        assert doc["c_star"] is not None
        assert doc["J_star"] <= doc["J0"] + 1e-12


class TestValidate:
    def test_row_count_matches_batches(self, tmp_path, graph_file):
        cfg = {"graph": str(graph_file), "epsilon": 10.0, "gamma": 1e-3,
               "h": 0.1, "samples": 30_000, "batch": 10_000, "seed": 4}
        assert run(tmp_path, "validate", cfg) == 0
        rows = (tmp_path / "out" / "running_mean.csv").read_text().strip().splitlines()
        assert rows[0] == "samples,running_mean,reference"
        assert len(rows) == 4

    def test_rerun_bytes_identical(self, tmp_path, graph_file):
        cfg = {"graph": str(graph_file), "epsilon": 10.0, "gamma": 1e-3,
               "h": 0.1, "samples": 20_000, "batch": 10_000, "seed": 4}
        assert run(tmp_path, "validate", cfg, out="a") == 0
        assert run(tmp_path, "validate", cfg, out="b") == 0
        assert ((tmp_path / "a" / "running_mean.csv").read_bytes()
                == (tmp_path / "b" / "running_mean.csv").read_bytes())


class TestSimulate:
    def test_traces_and_summary(self, tmp_path):
        g = random_complete_graph(4, 0.3, seed=2)
        path = tmp_path / "g.edges"
        path.write_text(dump_edge_list(g))
        cfg = {"graph": str(path), "epsilon": 10.0, "gamma": 1e-2, "h": 0.1,
               "trajectories": 2, "seed": 3}
        assert run(tmp_path, "simulate", cfg) == 0
        summary = json.loads((tmp_path / "out" / "simulate_summary.json").read_text())
        assert summary["initial"]["trajectories"] == 2
        assert summary["initial"]["mean_normalized_envelope"] == pytest.approx(1.0, abs=5e-3)
        trace = (tmp_path / "out" / "trace_initial_0.csv").read_text()
        assert trace.splitlines()[0] == "t,norm2,ratio"


class TestSweep:
    def test_param_singleton(self, tmp_path):
        cfg = {"kind": "param", "param": "h", "values": [0.1],
               "base": {"n": 5, "gamma": 1e-4, "graph_kind": "complete",
                         "method": "weights"},
               "max_iter": 60, "seed": 2}
        assert run(tmp_path, "sweep", cfg) == 0
        rows = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
        assert rows[0] == "param,value,percent_decrease,converged"
        assert len(rows) == 2

    def test_damping_sweep_flags(self, tmp_path, graph_file):
        cfg = {"kind": "damping", "graph": str(graph_file), "epsilon": 10.0,
               "gamma": 1e-6, "h": 0.1, "gamma_aux": 1e-6, "c": 0.5,
               "aux_kind": "complete", "grid": [1e-6, 1e-2]}
        assert run(tmp_path, "sweep", cfg) == 0
        rows = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
        assert rows[0] == "gamma_aux,J_aux,method"
        assert rows[1].endswith("residue")
        assert rows[2].endswith("quadrature")

    def test_unknown_kind_rejected(self, tmp_path):
        assert run(tmp_path, "sweep", {"kind": "弦"}) == 1
