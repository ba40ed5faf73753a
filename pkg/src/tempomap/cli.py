"""Batch command-line interface.

Subcommands: simulate, propagation, source-detect, vaccinate, percolation,
scaling, generate-graph. Settings come from a config file (``--config``)
and/or per-key flags; every run writes its resolved configuration alongside
the CSV outputs, and re-running a resolved config reproduces the outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import config as cfgmod
from .analysis import (characteristic_timescale, disorder_scaling,
                       outbreak_curve, propagation_matrix)
from .applications import (source_detect_direct_mc, source_detect_temporal,
                           source_detect_topological,
                           source_detection_evaluation, read_snapshot,
                           vaccination_compare, STRATEGIES)
from .distributions import Exponential, Geometric, from_config as dist_from_config
from .ensemble import EnsembleEstimate
from .errors import TempomapError
from .graphs import (format_value, write_csv, write_distance_matrix_csv,
                     write_edge_list, write_label_map)
from .percolation import (bond_percolation_mean_size, p_nk_general,
                          p_nk_poisson, transmissibility)


def _write_summary(outdir: Path, data: dict, as_json: bool) -> Path:
    if as_json:
        path = outdir / "summary.json"
        clean = {k: (format_value(v) if isinstance(v, float) and not math.isfinite(v)
                     else v) for k, v in data.items()}
        path.write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    else:
        path = outdir / "summary.txt"
        lines = [f"{k} = {format_value(v)}" for k, v in sorted(data.items())]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _stderr_cell(est: EnsembleEstimate, index=None):
    if est.n < 2:
        return ""
    err = est.stderr if index is None else np.asarray(est.stderr)[index]
    return float(err)


def cmd_simulate(cfg: dict, outdir: Path) -> dict:
    net = cfgmod.build_network_from(cfg)
    spec = cfgmod.build_mapping_spec(cfg)
    source = cfgmod.source_id(cfg, net)
    grid = cfgmod.parse_time_grid(cfg)
    n = cfgmod.as_int(cfg, "n_samples", 1)
    est = outbreak_curve(net, spec, source, grid, cfg["master_seed"], n,
                         sampler=cfg["sampler"], burn_in=cfg.get("burn_in"),
                         thinning=cfg.get("thinning"),
                         workers=cfgmod.as_int(cfg, "workers", 1))
    mean = np.atleast_1d(est.mean)
    rows = [(grid[i], mean[i], _stderr_cell(est, i)) for i in range(grid.size)]
    write_csv(outdir / "outbreak_curve.csv", ["t", "mean_infected", "stderr"], rows)
    summary = {"nodes": net.n, "edges": net.n_edges, "n_samples": n,
               "final_mean_infected": float(mean[-1]),
               "stderr_available": n >= 2}
    if spec.phi is not None:
        p = transmissibility(spec.psi, spec.phi)
        bond = bond_percolation_mean_size(net, p, source, cfg["master_seed"], n,
                                          workers=cfgmod.as_int(cfg, "workers", 1))
        summary.update(percolation_p=p,
                       percolation_mean_size=float(bond.mean),
                       percolation_stderr=float(bond.stderr))
    return summary


def cmd_propagation(cfg: dict, outdir: Path) -> dict:
    net = cfgmod.build_network_from(cfg)
    spec = cfgmod.build_mapping_spec(cfg)
    n = cfgmod.as_int(cfg, "n_samples", 1)
    conditional = bool(cfg.get("conditional", False))
    prop = propagation_matrix(net, spec, cfg["master_seed"], n,
                              sampler=cfg["sampler"], conditional=conditional,
                              burn_in=cfg.get("burn_in"), thinning=cfg.get("thinning"),
                              workers=cfgmod.as_int(cfg, "workers", 1))
    n_bar = int(cfg["n_bar"]) if cfg.get("n_bar") is not None else max(1, net.n // 2)
    ranking = characteristic_timescale(prop, n_bar)
    write_distance_matrix_csv(outdir / "propagation_matrix.csv", net, prop.matrix)
    order = ranking.ordering
    ordered = prop.matrix[np.ix_(order, order)]
    write_csv(outdir / "propagation_matrix_ordered.csv",
              ["source"] + [net.labels[i] for i in order],
              ([net.labels[order[i]]] + list(ordered[i]) for i in range(net.n)))
    write_csv(outdir / "timescale_ranking.csv",
              ["rank", "node", "tau", "finite_pairs"],
              ((r + 1, net.labels[i], ranking.tau[i],
                int(np.sum(prop.finite_counts[i] > 0)) - 1)
               for r, i in enumerate(order)))
    if prop.conditional:
        write_distance_matrix_csv(outdir / "reach_probability.csv", net,
                                  prop.reach_prob)
    return {"nodes": net.n, "n_samples": n, "n_bar": n_bar,
            "conditional": prop.conditional,
            "fastest_node": net.labels[int(order[0])],
            "tau_min": float(ranking.tau[order[0]])}


def _geometric_rates(spec) -> tuple[float, float] | None:
    if isinstance(spec.psi, Geometric) and (spec.phi is None or
                                            isinstance(spec.phi, Geometric)):
        return spec.psi.p, (0.0 if spec.phi is None else spec.phi.p)
    return None


def cmd_source_detect(cfg: dict, outdir: Path) -> dict:
    net = cfgmod.build_network_from(cfg)
    spec = cfgmod.build_mapping_spec(cfg)
    seed = cfg["master_seed"]
    workers = cfgmod.as_int(cfg, "workers", 1)
    bandwidth = float(cfg.get("bandwidth") or 0.125)
    n = cfgmod.as_int(cfg, "n_samples", 1)

    if cfg.get("evaluate"):
        rates = _geometric_rates(spec)
        if rates is None:
            raise cfgmod.ConfigError("evaluation mode runs discrete dynamics; "
                                     "psi (and phi, if present) must be geometric")
        beta, gamma = rates
        report = source_detection_evaluation(
            net, beta, gamma, cfgmod.source_id(cfg, net, "true_source"),
            cfgmod.as_int(cfg, "t_obs", 1),
            int(cfg.get("n_realizations") or 30), seed,
            n_temporal=n, n_mc_per_candidate=int(cfg.get("n_mc") or 10_000),
            bandwidth=bandwidth, workers=workers)
        methods = ("temporal", "direct-mc", "topological")
        write_csv(outdir / "evaluation_rank_cdf.csv",
                  ["rank"] + [f"cdf_{m}" for m in methods],
                  ((int(r),) + tuple(report.rank_cdf[m][i] for m in methods)
                   for i, r in enumerate(report.rank_grid)))
        header = ["rank"]
        for m in methods:
            header += [f"mean_{m}", f"std_{m}"]
        write_csv(outdir / "evaluation_shared_rank.csv", header,
                  ((int(r),) + tuple(x for m in methods
                                     for x in (report.shared_rank_mean[m][i],
                                               report.shared_rank_std[m][i]))
                   for i, r in enumerate(report.rank_grid)))
        finite_rho = report.spearman_temporal_mc[np.isfinite(report.spearman_temporal_mc)]
        return {"mode": "evaluate", "realizations": report.n_realizations,
                "mean_spearman_temporal_mc": float(finite_rho.mean()) if finite_rho.size else float("nan"),
                "temporal_dominates_topological": report.dominates("temporal", "topological")}

    observed = read_snapshot(net, cfgmod.require(cfg, "snapshot"))
    results = {}
    results["temporal"] = source_detect_temporal(net, spec, observed, seed, n,
                                                 bandwidth=bandwidth, workers=workers)
    results["topological"] = source_detect_topological(net, observed)
    rates = _geometric_rates(spec)
    if rates is not None and float(observed.time).is_integer() and observed.time > 0:
        results["direct-mc"] = source_detect_direct_mc(
            net, rates[0], rates[1], observed, seed,
            int(cfg.get("n_mc") or 10_000), workers=workers, allow_zero=True)
    summary = {"mode": "snapshot", "methods_run": ",".join(sorted(results)),
               "candidates": int(observed.non_susceptible.size)}
    for name, scores in results.items():
        write_csv(outdir / f"scores_{name.replace('-', '_')}.csv",
                  ["node", "score", "raw"],
                  ((net.labels[c], scores.scores[i], scores.raw[i])
                   for i, c in enumerate(scores.candidates)))
        summary[f"best_{name}"] = net.labels[scores.best()]
    return summary


def cmd_vaccinate(cfg: dict, outdir: Path) -> dict:
    net = cfgmod.build_network_from(cfg)
    spec = cfgmod.build_mapping_spec(cfg)
    source = cfgmod.source_id(cfg, net)
    t0 = cfgmod.as_int(cfg, "t0", 0)
    delta_t = cfgmod.as_int(cfg, "delta_t", 0)
    m_raw = cfgmod.as_float(cfg, "m", 0)
    m = int(round(m_raw * net.n)) if 0 < m_raw < 1 else int(m_raw)
    strategies = cfg.get("strategies") or list(STRATEGIES)
    if isinstance(strategies, str):
        strategies = [strategies]
    horizon = int(cfg.get("horizon") or (t0 + delta_t + 50))
    outcomes = vaccination_compare(
        net, spec, source, t0, delta_t, m, cfg["master_seed"],
        cfgmod.as_int(cfg, "n_trials", 1), horizon, strategies=tuple(strategies),
        top_m=bool(cfg.get("top_m", False)),
        survival_samples=int(cfg.get("survival_samples") or 2000),
        paired=bool(cfg.get("paired", True)),
        workers=cfgmod.as_int(cfg, "workers", 1))

    grid = outcomes[strategies[0]].grid
    header = ["t"]
    for s in strategies:
        header += [f"mean_{s}", f"stderr_{s}"]
    rows = []
    for i, t in enumerate(grid):
        row = [t]
        for s in strategies:
            est = outcomes[s].curve
            row += [float(np.atleast_1d(est.mean)[i]), _stderr_cell(est, i)]
        rows.append(row)
    write_csv(outdir / "vaccination_curves.csv", header, rows)
    write_csv(outdir / "vaccination_final.csv",
              ["strategy", "mean_final_infected", "stderr"],
              ((s, float(outcomes[s].final_counts.mean()),
                float(EnsembleEstimate.from_values(outcomes[s].final_counts).stderr))
               for s in strategies))
    summary = {"m": m, "t0": t0, "delta_t": delta_t,
               "n_trials": int(cfg["n_trials"])}
    for s in strategies:
        summary[f"final_{s}"] = float(outcomes[s].final_counts.mean())
    for a, b in zip(strategies, strategies[1:]):
        diff = outcomes[b].final_counts - outcomes[a].final_counts
        est = EnsembleEstimate.from_values(diff)
        summary[f"paired_diff_{b}_minus_{a}"] = float(est.mean)
        summary[f"paired_diff_{b}_minus_{a}_stderr"] = float(est.stderr)
    return summary


def cmd_percolation(cfg: dict, outdir: Path) -> dict:
    spec = cfgmod.build_mapping_spec(cfg)
    p = transmissibility(spec.psi, spec.phi)
    n_values = cfg.get("pnk_n") or [1, 2, 3, 5, 10]
    if isinstance(n_values, int):
        n_values = [n_values]
    closed_form = isinstance(spec.psi, Exponential) and isinstance(spec.phi, Exponential)
    rows = []
    for nn in n_values:
        table = p_nk_general(spec.psi, spec.phi, int(nn))
        closed = p_nk_poisson(spec.psi.rate, spec.phi.rate, int(nn)) if closed_form else None
        for k in range(int(nn) + 1):
            rows.append((int(nn), k, table[k],
                         closed[k] if closed is not None else ""))
    write_csv(outdir / "pnk_tables.csv", ["n", "k", "p_nk", "p_nk_closed_form"], rows)
    summary = {"transmissibility": p, "closed_form_available": closed_form}

    if cfg.get("comparison"):
        net = cfgmod.build_network_from(cfg)
        source = cfgmod.source_id(cfg, net)
        grid = cfgmod.parse_time_grid(cfg)
        if not np.isinf(grid[-1]):
            grid = np.concatenate([grid, [np.inf]])
        n = cfgmod.as_int(cfg, "n_samples", 1)
        workers = cfgmod.as_int(cfg, "workers", 1)
        est = outbreak_curve(net, spec, source, grid, cfg["master_seed"], n,
                             sampler=cfg["sampler"], workers=workers)
        bond = bond_percolation_mean_size(net, p, source, cfg["master_seed"], n,
                                          workers=workers)
        mean = np.atleast_1d(est.mean)
        write_csv(outdir / "percolation_comparison.csv",
                  ["t", "mean_outbreak", "stderr", "fraction", "fraction_stderr",
                   "bond_mean", "bond_stderr", "bond_fraction"],
                  ((grid[i], mean[i], _stderr_cell(est, i), mean[i] / net.n,
                    (_stderr_cell(est, i) or 0) / net.n if est.n >= 2 else "",
                    float(bond.mean), float(bond.stderr), float(bond.mean) / net.n)
                   for i in range(grid.size)))
        summary.update(late_time_mean=float(mean[-1]), bond_mean=float(bond.mean),
                       nodes=net.n)
    return summary


def cmd_scaling(cfg: dict, outdir: Path) -> dict:
    sizes = cfgmod.require(cfg, "sizes")
    weights = dist_from_config(cfgmod.require(cfg, "weights"), "weights")
    report = disorder_scaling(sizes, cfgmod.as_float(cfg, "mean_degree", 0.0),
                              weights, cfg["master_seed"],
                              int(cfg.get("n_instances") or 100),
                              workers=cfgmod.as_int(cfg, "workers", 1))
    write_csv(outdir / "scaling_data.csv",
              ["n", "mean_distance", "stderr", "mean_delay"],
              zip(report.sizes, report.mean_distance, report.stderr,
                  report.mean_delay))
    return {"coef_log": report.coef_log, "residual_log": report.residual_log,
            "coef_cbrt": report.coef_cbrt, "residual_cbrt": report.residual_cbrt,
            "better_model": report.better_model}


def cmd_generate_graph(cfg: dict, outdir: Path) -> dict:
    net = cfgmod.build_network_from(cfg)
    write_edge_list(net, outdir / "edges.txt")
    write_label_map(net, outdir / "label_map.txt")
    return {"nodes": net.n, "edges": net.n_edges}


_COMMANDS = {
    "simulate": cmd_simulate,
    "propagation": cmd_propagation,
    "source-detect": cmd_source_detect,
    "vaccinate": cmd_vaccinate,
    "percolation": cmd_percolation,
    "scaling": cmd_scaling,
    "generate-graph": cmd_generate_graph,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempomap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _COMMANDS:
        sp = sub.add_parser(command)
        sp.add_argument("--config", help="key = value config file")
        for key in cfgmod.keys_for(command):
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"key_{key}",
                            metavar="VALUE", help=f"override config key {key}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = cfgmod.parse_config_file(args.config) if args.config else {}
        overrides = {}
        for key in cfgmod.keys_for(args.command):
            raw = getattr(args, f"key_{key}", None)
            if raw is not None:
                overrides[key] = yaml.safe_load(raw)
        cfg = cfgmod.resolve(args.command, file_values, overrides)
        outdir = Path(cfg["output_dir"])
        outdir.mkdir(parents=True, exist_ok=True)
        cfgmod.dump_resolved(cfg, outdir / "resolved_config.txt")
        summary = _COMMANDS[args.command](cfg, outdir)
        _write_summary(outdir, summary, bool(cfg.get("json")))
    except TempomapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
