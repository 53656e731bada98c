"""Command line front end.

Subcommands: build-graph (graph summary, node/edge lists, cached
eigendecomposition), run (Monte Carlo plus theory curves to CSV with a
manifest), theory (theory curves only), compare (tail deviation report for
a results CSV).

Exit codes: 0 success, 2 configuration or usage error, 3 input data error.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import io as gio
from ._version import __version__
from .graph import band_select, build_knn_graph, gft_basis, laplacian
from .harness import (DEFAULT_BURN_IN, ConfigError, _to_db, prepare_experiment,
                      run_experiment, synthetic_stations)
from .theory import lms_theory_exact, lms_theory_paper, rls_theory_exact, rls_theory_paper

DEFAULT_CACHE_DIR = ".gspest-cache"


def _resolve_stations(config, stations_flag):
    path = stations_flag or config.stations_csv
    if path is not None:
        return gio.read_station_csv(path)
    return synthetic_stations(config.n_stations, config.stations_seed)


def _cached_basis(cache_dir, stations, k):
    if cache_dir is None:
        return None
    hit = gio.load_graph_cache(cache_dir, stations, k)
    if hit is not None:
        return hit[1]
    graph = build_knn_graph(stations, k)
    basis = gft_basis(laplacian(graph))
    gio.save_graph_cache(cache_dir, stations, k, graph, basis)
    return basis


def _apply_overrides(config, args):
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    return config.with_overrides(**overrides) if overrides else config


def cmd_build_graph(args) -> int:
    stations = gio.read_station_csv(args.stations_csv)
    graph = build_knn_graph(stations, args.k)
    basis = gft_basis(laplacian(graph))
    cache_path = gio.save_graph_cache(args.cache_dir, stations, args.k, graph, basis)
    degrees = graph.adjacency.sum(axis=1)
    digest = gio.station_digest(stations)
    nodes_path = cache_path[:-4] + "_nodes.csv"
    edges_path = cache_path[:-4] + "_edges.csv"
    gio.write_node_list(nodes_path, stations)
    gio.write_edge_list(edges_path, stations, graph)
    print(f"stations: {stations.n} (digest {digest[:16]})")
    print(f"edges: {graph.n_edges}")
    print(f"degree: min {int(degrees.min())}, mean {degrees.mean():.2f}, max {int(degrees.max())}")
    print(f"spectrum: [{basis.eigenvalues[0]:.3e}, {basis.eigenvalues[-1]:.6g}]")
    print(f"cache: {cache_path}")
    print(f"nodes: {nodes_path}")
    print(f"edges: {edges_path}")
    return 0


def cmd_run(args) -> int:
    config = _apply_overrides(gio.load_config(args.config), args)
    stations = _resolve_stations(config, args.stations)
    basis = _cached_basis(args.cache_dir, stations, config.k)
    started = time.monotonic()
    result = run_experiment(config, stations, basis)
    duration = time.monotonic() - started
    gio.write_results_csv(args.out, result)
    manifest_path = args.manifest or (args.out + ".manifest.json")
    gio.write_manifest(manifest_path, gio.build_manifest(result, stations, duration))
    dev = result.deviation
    print(f"wrote {args.out} ({config.iterations} iterations, {config.runs} runs)")
    print(f"manifest: {manifest_path}")
    print(f"tail mean |emp - theory| dB: paper {dev.paper_mean_abs_db:.3f}, "
          f"exact {dev.exact_mean_abs_db:.3f} (burn-in {dev.burn_in_fraction:g})")
    return 0


def cmd_theory(args) -> int:
    config = _apply_overrides(gio.load_config(args.config), args)
    stations = _resolve_stations(config, args.stations)
    basis = _cached_basis(args.cache_dir, stations, config.k)
    exp = prepare_experiment(config, stations, basis)
    model = exp.model
    if config.algorithm == "lms":
        paper = lms_theory_paper(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                 config.param, config.iterations)
        exact = lms_theory_exact(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                 config.param, config.iterations)
    else:
        paper = rls_theory_paper(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                 config.param, config.iterations)
        exact = rls_theory_exact(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                 config.param, config.iterations)
    t = np.arange(1, config.iterations + 1)
    gio.write_theory_csv(args.out, t, _to_db(paper.values), _to_db(exact.values))
    print(f"wrote {args.out} ({config.iterations} iterations, no simulation)")
    return 0


def cmd_compare(args) -> int:
    cols = gio.read_results_csv(args.results_csv)
    if not 0 <= args.burn_in < 1:
        raise ConfigError([f"--burn-in must lie in [0, 1), got {args.burn_in}"])
    t_count = cols["t"].shape[0]
    start = int(args.burn_in * t_count)
    tail = slice(start, t_count)
    emp = cols["msd_emp_db"][tail]
    report = {"burn_in_fraction": args.burn_in, "n_tail": t_count - start, "modes": {}}
    for mode, col in (("paper", "msd_theory_paper_db"), ("exact", "msd_theory_exact_db")):
        dev = np.abs(emp - cols[col][tail])
        report["modes"][mode] = {
            "max_abs_db": float(np.max(dev)),
            "mean_abs_db": float(np.mean(dev)),
        }
        print(f"{mode}: tail mean |emp - theory| = {np.mean(dev):.4f} dB, "
              f"max = {np.max(dev):.4f} dB over {t_count - start} iterations")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report: {args.json}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gspest",
        description="Adaptive estimation of bandlimited graph signals: simulate, predict, compare.")
    parser.add_argument("--version", action="version", version=f"gspest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build the station graph and cache its spectrum")
    p.add_argument("stations_csv", help="station table (id,lat,lon,value)")
    p.add_argument("--k", type=int, required=True, help="neighbours per station")
    p.add_argument("--cache-dir", default=DEFAULT_CACHE_DIR)
    p.set_defaults(func=cmd_build_graph)

    for name, helptext in (("run", "simulate and write empirical plus theory curves"),
                           ("theory", "write theory curves only")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="experiment config (flat JSON)")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--stations", default=None, help="station CSV overriding the config")
        p.add_argument("--cache-dir", default=DEFAULT_CACHE_DIR)
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--runs", type=int, default=None, help="override run count")
        p.add_argument("--iterations", type=int, default=None, help="override iteration count")
        if name == "run":
            p.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")
            p.set_defaults(func=cmd_run)
        else:
            p.set_defaults(func=cmd_theory)

    p = sub.add_parser("compare", help="tail deviation report for a results CSV")
    p.add_argument("results_csv")
    p.add_argument("--burn-in", type=float, default=DEFAULT_BURN_IN)
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except gio.DataError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
