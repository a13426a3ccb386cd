"""Batch command-line interface.

Subcommands: generate | analyze | optimize | validate | simulate | sweep.
Each run is driven by a YAML config file; --seed and --out override the
config's seed and output directory. Outputs are CSV (numerics at 17
significant digits) and JSON, so re-running a command with the same config
and seed rewrites byte-identical numeric fields.

Exit codes: 0 success; 1 bad config or internal error; 2 ingestion error;
3 infeasible constraint system; 4 optimizer hit its iteration cap (results
are still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .absorber import AbsorberProblem, absorber_problem_from_system, \
    complete_aux, coupled_vulnerability, damping_sweep, mirrored_aux, \
    sweep_to_csv
from .errors import FeasibilityError, GraphFormatError, ResonetError
from .graph_core import DynamicsParams, WeightedGraph, dump_edge_list, \
    ego_subgraph, graph_to_json, load_edge_list, random_complete_graph, \
    random_incomplete_graph
from .optimize import OptOptions, StudyBase, optimize_absorber, \
    optimize_weights, param_study, study_to_csv
from .response import CombinedSystem, MainSystem, monte_carlo_vulnerability, \
    simulate_dynamics
from .attack import AttackModel, sample_attack
from .rng import make_rng
from .spectral import natural_frequencies, spectrum_histogram, sym_eig
from .vulnerability import WeightProblem, vulnerability
from .graph_core import laplacian

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INGEST = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGE = 4


class ConfigError(ResonetError):
    pass


def _check_keys(cfg: dict, allowed: set, command: str):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"{command}: unknown config keys {sorted(unknown)}")


def _require(cfg: dict, keys, command: str):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{command}: missing config keys {missing}")


def _read_graph(path) -> WeightedGraph:
    return load_edge_list(Path(path).read_text())


def _params(cfg) -> DynamicsParams:
    return DynamicsParams(epsilon=float(cfg["epsilon"]), gamma=float(cfg["gamma"]))


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _aux_graph(cfg, main: WeightedGraph) -> WeightedGraph:
    kind = cfg.get("aux_kind", "complete")
    if "aux_graph" in cfg:
        return _read_graph(cfg["aux_graph"])
    if kind == "mirrored":
        w = cfg.get("aux_weight")
        if w is None:
            return mirrored_aux(main)
        return mirrored_aux(main, np.full(main.m, float(w)))
    if kind == "complete":
        m_aux = main.n * (main.n - 1) // 2
        w = float(cfg.get("aux_weight",
                          float(np.sum(main.weights)) / m_aux))
        return complete_aux(main.n, np.full(m_aux, w))
    raise ConfigError(f"unknown aux_kind {kind!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

GENERATE_KEYS = {"kind", "n", "w_p", "n_e", "seed", "input", "center", "radius"}


def cmd_generate(cfg: dict, out: Path) -> int:
    _check_keys(cfg, GENERATE_KEYS, "generate")
    kind = cfg.get("kind")
    seed = int(cfg.get("seed", 0))
    if kind == "complete":
        _require(cfg, ["n", "w_p"], "generate")
        g = random_complete_graph(int(cfg["n"]), float(cfg["w_p"]), seed)
        mapping = None
    elif kind == "incomplete":
        _require(cfg, ["n", "n_e", "w_p"], "generate")
        g = random_incomplete_graph(int(cfg["n"]), int(cfg["n_e"]),
                                    float(cfg["w_p"]), seed)
        mapping = None
    elif kind == "ego":
        _require(cfg, ["input", "center", "radius"], "generate")
        base = _read_graph(cfg["input"])
        g, mapping = ego_subgraph(base, int(cfg["center"]), int(cfg["radius"]))
    else:
        raise ConfigError(f"generate: unknown kind {kind!r}")
    _write(out / "graph.edges", dump_edge_list(g))
    _write(out / "graph.json", graph_to_json(g, vertex_map=mapping) + "\n")
    return EXIT_OK


ANALYZE_KEYS = {"graph", "epsilon", "gamma", "h", "bins", "aux_graph",
                "aux_kind", "aux_weight", "c", "gamma_aux", "seed"}


def cmd_analyze(cfg: dict, out: Path) -> int:
    _check_keys(cfg, ANALYZE_KEYS, "analyze")
    _require(cfg, ["graph", "epsilon", "gamma", "h"], "analyze")
    g = _read_graph(cfg["graph"])
    p = _params(cfg)
    h = float(cfg["h"])
    bins = int(cfg.get("bins", 10))
    eig = sym_eig(laplacian(g))
    report = spectrum_histogram(eig.values + p.epsilon, bins)
    doc = {"n": g.n, "m": g.m, "epsilon": p.epsilon, "gamma": p.gamma, "h": h}
    combined = "c" in cfg or "aux_graph" in cfg or "aux_kind" in cfg
    if combined:
        aux = _aux_graph(cfg, g)
        c = float(cfg.get("c", 0.0))
        gamma_aux = float(cfg.get("gamma_aux", p.gamma))
        sys_ = CombinedSystem(main=MainSystem(graph=g, params=p), aux=aux,
                              c=c, gamma_aux=gamma_aux)
        problem = absorber_problem_from_system(sys_, h=h)
        doc["J_aux"] = coupled_vulnerability(problem)
    else:
        problem = WeightProblem(graph=g, epsilon=p.epsilon, gamma=p.gamma, h=h,
                                w_min=min(float(np.min(g.weights)), 1.0) if g.m else 1.0)
        doc["J"] = vulnerability(problem)
    _write(out / "analysis.json", json.dumps(doc, indent=2) + "\n")
    _write(out / "spectrum.csv", report.to_csv())
    return EXIT_OK


OPTIMIZE_KEYS = {"method", "graph", "epsilon", "gamma", "h", "w_min", "w_tot",
                 "aux_kind", "aux_graph", "aux_weight", "c", "gamma_aux",
                 "r_m", "max_iter", "tol", "multi_start", "seed"}


def cmd_optimize(cfg: dict, out: Path) -> int:
    _check_keys(cfg, OPTIMIZE_KEYS, "optimize")
    _require(cfg, ["method", "graph", "epsilon", "gamma", "h"], "optimize")
    g = _read_graph(cfg["graph"])
    p = _params(cfg)
    h = float(cfg["h"])
    opts = OptOptions(max_iter=int(cfg.get("max_iter", 2000)),
                      tol=float(cfg.get("tol", 1e-8)),
                      multi_start=int(cfg.get("multi_start", 1)),
                      seed=int(cfg.get("seed", 0)))
    method = cfg["method"]
    if method == "weights":
        _require(cfg, ["w_min"], "optimize")
        problem = WeightProblem(graph=g, epsilon=p.epsilon, gamma=p.gamma, h=h,
                                w_min=float(cfg["w_min"]),
                                w_tot=float(cfg["w_tot"]) if "w_tot" in cfg else None)
        res = optimize_weights(problem, opts)
        optimized = g.reweighted(res.w_star)
    elif method == "absorber":
        _require(cfg, ["r_m", "gamma_aux"], "optimize")
        aux = _aux_graph(cfg, g)
        sys_ = CombinedSystem(main=MainSystem(graph=g, params=p), aux=aux,
                              c=float(cfg.get("c", 0.0)),
                              gamma_aux=float(cfg["gamma_aux"]))
        problem = absorber_problem_from_system(sys_, h=h, r_m=float(cfg["r_m"]))
        res = optimize_absorber(problem, opts)
        # zero-weight edges cannot live in a WeightedGraph; keep the rest
        keep = res.w_star > 0.0
        edges = tuple(e for e, k in zip(aux.edges, keep) if k)
        optimized = WeightedGraph(aux.n, edges, res.w_star[keep])
    else:
        raise ConfigError(f"optimize: unknown method {method!r}")
    _write(out / "result.json", json.dumps(res.to_json_dict(), indent=2) + "\n")
    _write(out / "optimized.edges", dump_edge_list(optimized))
    return EXIT_OK if res.converged else EXIT_NO_CONVERGE


VALIDATE_KEYS = {"graph", "epsilon", "gamma", "h", "samples", "batch",
                 "aux_graph", "aux_kind", "aux_weight", "c", "gamma_aux", "seed"}


def cmd_validate(cfg: dict, out: Path) -> int:
    _check_keys(cfg, VALIDATE_KEYS, "validate")
    _require(cfg, ["graph", "epsilon", "gamma", "h", "samples"], "validate")
    g = _read_graph(cfg["graph"])
    p = _params(cfg)
    h = float(cfg["h"])
    seed = int(cfg.get("seed", 0))
    batch = int(cfg.get("batch", 100_000))
    samples = int(cfg["samples"])
    model = AttackModel(h=h, omegas=natural_frequencies(g, p))
    main = MainSystem(graph=g, params=p)
    combined = "c" in cfg or "aux_graph" in cfg or "aux_kind" in cfg
    if combined:
        aux = _aux_graph(cfg, g)
        system = CombinedSystem(main=main, aux=aux, c=float(cfg.get("c", 0.0)),
                                gamma_aux=float(cfg.get("gamma_aux", p.gamma)))
        problem = absorber_problem_from_system(system, h=h)
        reference = coupled_vulnerability(problem)
    else:
        system = main
        reference = vulnerability(WeightProblem(
            graph=g, epsilon=p.epsilon, gamma=p.gamma, h=h,
            w_min=min(float(np.min(g.weights)), 1.0) if g.m else 1.0))
    _, _, running = monte_carlo_vulnerability(system, model, samples, seed,
                                              batch=batch, keep_running=True)
    lines = ["samples,running_mean,reference"]
    for count, mean in running:
        lines.append(f"{count},{mean:.17g},{reference:.17g}")
    _write(out / "running_mean.csv", "\n".join(lines) + "\n")
    return EXIT_OK


SIMULATE_KEYS = {"graph", "optimized_graph", "epsilon", "gamma", "h",
                 "trajectories", "dt", "t_end", "seed"}


def cmd_simulate(cfg: dict, out: Path) -> int:
    _check_keys(cfg, SIMULATE_KEYS, "simulate")
    _require(cfg, ["graph", "epsilon", "gamma", "h", "trajectories"], "simulate")
    p = _params(cfg)
    h = float(cfg["h"])
    seed = int(cfg.get("seed", 0))
    n_traj = int(cfg["trajectories"])
    dt = float(cfg["dt"]) if "dt" in cfg else None
    t_end = float(cfg["t_end"]) if "t_end" in cfg else None
    graphs = {"initial": _read_graph(cfg["graph"])}
    if "optimized_graph" in cfg:
        graphs["optimized"] = _read_graph(cfg["optimized_graph"])
    summary = {}
    for label, g in graphs.items():
        system = MainSystem(graph=g, params=p)
        model = AttackModel(h=h, omegas=natural_frequencies(g, p))
        rng = make_rng(seed)
        envelopes = []
        ratios = []
        for k in range(n_traj):
            atk = sample_attack(model, g.n, rng)
            trace = simulate_dynamics(system, atk.f, atk.nu, dt=dt, t_end=t_end)
            _write(out / f"trace_{label}_{k}.csv", trace.to_csv())
            envelopes.append(trace.envelope)
            ratios.append(trace.envelope / trace.envelope_ref
                          if trace.envelope_ref > 0 else 0.0)
        summary[label] = {
            "mean_steady_amplitude": float(np.mean(envelopes)),
            "mean_normalized_envelope": float(np.mean(ratios)),
            "trajectories": n_traj,
        }
    _write(out / "simulate_summary.json", json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


SWEEP_KEYS = {"kind", "param", "values", "base", "seed", "max_iter", "tol",
              "graph", "epsilon", "gamma", "h", "aux_graph", "aux_kind",
              "aux_weight", "c", "gamma_aux", "grid"}


def cmd_sweep(cfg: dict, out: Path) -> int:
    _check_keys(cfg, SWEEP_KEYS, "sweep")
    kind = cfg.get("kind")
    seed = int(cfg.get("seed", 0))
    if kind == "param":
        _require(cfg, ["param", "values"], "sweep")
        base_cfg = cfg.get("base", {})
        if not isinstance(base_cfg, dict):
            raise ConfigError("sweep: 'base' must be a mapping")
        try:
            base = StudyBase(**base_cfg)
        except TypeError as exc:
            raise ConfigError(f"sweep: bad base parameters: {exc}")
        opts = OptOptions(max_iter=int(cfg.get("max_iter", 2000)),
                          tol=float(cfg.get("tol", 1e-8)), seed=seed)
        rows = param_study(base, cfg["param"], [float(v) for v in cfg["values"]],
                           seed=seed, options=opts)
        _write(out / "sweep.csv", study_to_csv(rows))
        return EXIT_OK
    if kind == "damping":
        _require(cfg, ["graph", "epsilon", "gamma", "h", "gamma_aux", "grid"], "sweep")
        g = _read_graph(cfg["graph"])
        p = _params(cfg)
        aux = _aux_graph(cfg, g)
        sys_ = CombinedSystem(main=MainSystem(graph=g, params=p), aux=aux,
                              c=float(cfg.get("c", 0.0)),
                              gamma_aux=float(cfg["gamma_aux"]))
        problem = absorber_problem_from_system(sys_, h=float(cfg["h"]))
        grid_cfg = cfg["grid"]
        if isinstance(grid_cfg, dict):
            grid = np.logspace(math.log10(float(grid_cfg["lo"])),
                               math.log10(float(grid_cfg["hi"])),
                               int(grid_cfg["points"]))
        else:
            grid = np.asarray([float(v) for v in grid_cfg])
        rows = damping_sweep(problem, grid)
        _write(out / "sweep.csv", sweep_to_csv(rows))
        return EXIT_OK
    raise ConfigError(f"sweep: unknown kind {kind!r}")


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resonet",
        description="Resonance-attack vulnerability analysis and mitigation")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        cfg = yaml.safe_load(Path(args.config).read_text())
        if cfg is None:
            cfg = {}
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a mapping")
        if args.seed is not None:
            cfg["seed"] = args.seed
        return COMMANDS[args.command](cfg, Path(args.out))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except FeasibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResonetError, ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
