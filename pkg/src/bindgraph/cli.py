"""Command-line entry point (``bindgraph`` or ``python -m bindgraph``).

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
input), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .fitting import FitError, FitObjective, fit_binding, fit_binding_joint
from .graph import (EdgeListError, ccdf_rows, compute_stats, empirical_overlap, read_edge_list,
                    stats_record, write_edge_list)
from .models import (fit_cl, fit_er, fit_sb, load_kr, load_model, model_to_dict, read_partition,
                     save_model)
from .motifs import TripleSpec, analytic_overlap, expected_counts, motif3
from .oracle import SWEEP_SCHEMES, oracle_sweep, sweep_specs
from .realization import DEFAULT_ROUNDS, BindingParams, derive_seed, generate_batch, sample

log = logging.getLogger("bindgraph")

THREADS_ENV = "BINDGRAPH_THREADS"
DEFAULT_SEED = 0

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- output helpers -------------------------------------------------------------

def _emit(record: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        json.dump(record, out, indent=2)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(record.keys())
        w.writerow(record.values())
    else:
        for k, v in record.items():
            out.write(f"{k}: {v}\n")


def _write_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _seed(args) -> int:
    if args.seed is None:
        log.info("no --seed given; using default seed %d", DEFAULT_SEED)
        return DEFAULT_SEED
    return args.seed


def _load_graphs(directory) -> list:
    files = sorted(Path(directory).glob("*.txt"))
    if not files:
        raise EdgeListError(f"no edge-list files (*.txt) in {directory}")
    return [read_edge_list(f) for f in files]


# -- subcommands ----------------------------------------------------------------

def cmd_fit_model(args) -> int:
    g = read_edge_list(args.graph)
    if args.model == "er":
        m = fit_er(g)
    elif args.model == "cl":
        m = fit_cl(g)
    elif args.model == "sb":
        if not args.partition:
            raise UsageError("--model sb needs --partition")
        m = fit_sb(g, read_partition(args.partition, g.n))
    else:
        if args.theta is None or args.k is None:
            raise UsageError("--model kr needs --theta and --k (seed estimation is not provided)")
        m = load_kr(np.loadtxt(args.theta, ndmin=2), args.k)
    d = model_to_dict(m)
    if args.out:
        save_model(m, args.out)
    json.dump(d, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_fit_binding(args) -> int:
    model = load_model(args.model)
    kind = args.objective or ("triangles_plus_wedges" if args.joint else "triangles")
    if args.graph:
        obj = FitObjective.from_graph(read_edge_list(args.graph), kind=kind)
    elif args.triangles is not None:
        obj = FitObjective(kind, args.triangles, args.wedges, args.edges)
    else:
        raise UsageError("give a target graph or --triangles")
    R = args.R if args.R is not None else DEFAULT_ROUNDS[args.scheme]
    opts = dict(residual=args.residual, step=args.step, max_iter=args.max_iter, tol=args.tol)
    if args.joint:
        report = fit_binding_joint(model, args.scheme, R, obj, edge_penalty=args.edge_penalty, **opts)
    else:
        report = fit_binding(model, args.scheme, R, obj, **opts)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    report.binding_params(seed=args.seed).save(args.out)
    if args.report:
        _write_json(args.report, report.to_dict())
    if args.joint and args.model_out:
        save_model(report.fitted_model(model), args.model_out)
    _emit({"iterations": report.iterations, "converged": report.converged,
           "objective": report.objective_trace[-1], "expected_triangles": report.achieved.triangles,
           "expected_wedges": report.achieved.wedges}, args.format)
    return EXIT_OK


def cmd_generate(args) -> int:
    model = load_model(args.model)
    params = BindingParams.load(args.binding)
    seed = args.seed if args.seed is not None else (params.seed if params.seed is not None else _seed(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(args.count - 1)))
    rows = []
    for i in range(args.count):
        t0 = time.perf_counter()
        g = sample(model, params, derive_seed(seed, "graph", i), threads=args.threads)
        elapsed = time.perf_counter() - t0
        write_edge_list(g, out / f"graph_{i:0{width}d}.txt")
        s = compute_stats(g, distance_sample=1)
        rows.append({"graph": i, "edges": s.num_edges, "triangles": s.triangle_count,
                     "gcc": s.gcc, "alcc": s.alcc, "seconds": elapsed})
    _write_csv(out / "summary.csv", rows)
    print(f"wrote {args.count} graphs to {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    g = read_edge_list(args.graph)
    s = compute_stats(g, distance_sample=args.distance_sample, seed=args.seed or 0)
    _emit(stats_record(s), args.format)
    if args.ccdf_out:
        _write_csv(args.ccdf_out, ccdf_rows("degree", [s.degree_ccdf]) + ccdf_rows("distance", [s.distance_ccdf]))
    return EXIT_OK


def cmd_compare(args) -> int:
    ref = compute_stats(read_edge_list(args.reference), distance_sample=args.distance_sample)
    graphs = _load_graphs(args.generated)
    stats = [compute_stats(g, distance_sample=args.distance_sample) for g in graphs]
    tri = np.array([s.triangle_count for s in stats], dtype=float)
    record = {
        "graphs": len(stats),
        "normalized_triangles": float(tri.mean() / ref.triangle_count) if ref.triangle_count else float("nan"),
        "normalized_triangles_std": float(tri.std() / ref.triangle_count) if ref.triangle_count else float("nan"),
        "gcc": float(np.mean([s.gcc for s in stats])),
        "alcc": float(np.mean([s.alcc for s in stats])),
        "reference_gcc": ref.gcc,
        "reference_alcc": ref.alcc,
        "overlap": empirical_overlap(graphs) if len(graphs) > 1 else float("nan"),
    }
    _emit(record, args.format)
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        _write_csv(d / "degree_ccdf.csv", ccdf_rows("degree", [s.degree_ccdf for s in stats]))
        _write_csv(d / "distance_ccdf.csv", ccdf_rows("distance", [s.distance_ccdf for s in stats]))
        _write_csv(d / "reference_ccdf.csv",
                   ccdf_rows("degree", [ref.degree_ccdf]) + ccdf_rows("distance", [ref.distance_ccdf]))
    return EXIT_OK


def cmd_overlap(args) -> int:
    record = {}
    if args.model:
        record["analytic"] = analytic_overlap(load_model(args.model))
    if args.generated:
        record["empirical"] = empirical_overlap(_load_graphs(args.generated))
    if not record:
        raise UsageError("give --model and/or --generated")
    _emit(record, args.format)
    return EXIT_OK


def cmd_motif_probs(args) -> int:
    if args.binding:
        params = BindingParams.load(args.binding)
        scheme, R, residual = params.scheme, params.R, params.residual
    else:
        scheme, R, residual = args.scheme, args.R, args.residual
    if scheme == "eigm":
        R = 1
    elif R is None:
        R = DEFAULT_ROUNDS.get(scheme, 1)
    t = TripleSpec(*args.p, *args.g, R=R, scheme=scheme, residual=residual)
    _emit(motif3(t).as_dict(), args.format)
    return EXIT_OK


def cmd_expected_counts(args) -> int:
    model = load_model(args.model)
    params = BindingParams.load(args.binding) if args.binding else BindingParams("eigm", 0.0)
    c = expected_counts(model, params)
    _emit({"triangles": c.triangles, "wedges": c.wedges, "edges": c.edges,
           "overlap": analytic_overlap(model)}, args.format)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    seed = _seed(args)
    specs = sweep_specs(args.configs, seed=seed, schemes=args.schemes)
    rows = oracle_sweep(specs, trials=args.trials, seed=seed, bound=args.bound)
    if args.out:
        _write_csv(args.out, rows)
    else:
        _write_csv_stream(rows)
    failed = sum(not r["pass"] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} comparisons within {args.bound} standard errors", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def _write_csv_stream(rows):
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def cmd_benchmark(args) -> int:
    model = load_model(args.model)
    seed = _seed(args)
    variants = []
    for path in args.binding or []:
        p = BindingParams.load(path)
        if p.scheme == "parallel":
            variants.append(("parallel-serial", p, 1))
            variants.append(("parallel-threaded", p, args.threads))
        else:
            variants.append((p.scheme, p, 1))
    variants.insert(0, ("eigm", BindingParams("eigm", 0.0), 1))
    rows = []
    for name, params, threads in variants:
        # warm-up compiles the kernels so timings reflect sampling only
        sample(model, params, seed, threads=threads)
        t0 = time.perf_counter()
        generate_batch(model, params, args.count, seed=seed, threads=threads)
        per_graph = (time.perf_counter() - t0) / args.count
        rows.append({"variant": name, "threads": threads, "graphs": args.count, "seconds_per_graph": per_graph})
    order = sorted(rows, key=lambda r: r["seconds_per_graph"])
    for rank, r in enumerate(order, 1):
        r["rank"] = rank
    if args.out:
        _write_csv(args.out, rows)
    _write_csv_stream(rows)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bindgraph", description="Edge-probability graph models with binding realizations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    threads = _default_threads()

    def fmt(sp):
        sp.add_argument("--format", choices=["text", "csv", "json"], default="text")

    s = sub.add_parser("fit-model", help="fit edge probabilities of a model to a graph")
    s.add_argument("graph")
    s.add_argument("--model", choices=["er", "cl", "sb", "kr"], required=True)
    s.add_argument("--partition", help="node-to-block file (sb)")
    s.add_argument("--theta", help="2x2 seed matrix file (kr)")
    s.add_argument("--k", type=int, help="Kronecker power (kr)")
    s.add_argument("--out", help="write the model JSON here")
    s.set_defaults(func=cmd_fit_model)

    s = sub.add_parser("fit-binding", help="fit node-sampling probabilities to triangle (and wedge) targets")
    s.add_argument("model")
    s.add_argument("--graph", help="target graph (counts taken from it)")
    s.add_argument("--triangles", type=float)
    s.add_argument("--wedges", type=float)
    s.add_argument("--edges", type=float)
    s.add_argument("--scheme", choices=["local", "parallel"], required=True)
    s.add_argument("--R", type=int)
    s.add_argument("--residual", choices=["shared", "independent"], default="shared")
    s.add_argument("--objective", choices=["triangles", "triangles_plus_wedges"])
    s.add_argument("--joint", action="store_true", help="also fit class-pair edge probabilities")
    s.add_argument("--edge-penalty", type=float, default=1.0)
    s.add_argument("--step", type=float, default=0.1)
    s.add_argument("--max-iter", type=int, default=2000)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--seed", type=int, help="seed recorded in the binding file")
    s.add_argument("--out", required=True, help="binding-parameter JSON")
    s.add_argument("--report", help="fit report JSON")
    s.add_argument("--model-out", help="joint mode: adjusted model JSON")
    fmt(s)
    s.set_defaults(func=cmd_fit_binding)

    s = sub.add_parser("generate", help="sample a batch of graphs")
    s.add_argument("model")
    s.add_argument("binding")
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=threads)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="clustering and distribution statistics of a graph")
    s.add_argument("graph")
    s.add_argument("--distance-sample", type=int, help="BFS source budget (default: all nodes)")
    s.add_argument("--seed", type=int)
    s.add_argument("--ccdf-out", help="CSV of degree and distance CCDF points")
    fmt(s)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("compare", help="compare generated graphs with a reference graph")
    s.add_argument("reference")
    s.add_argument("generated", help="directory of generated edge lists")
    s.add_argument("--distance-sample", type=int, default=100)
    s.add_argument("--out-dir", help="write CCDF CSVs here")
    fmt(s)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("overlap", help="analytic and/or empirical overlap")
    s.add_argument("--model")
    s.add_argument("--generated")
    fmt(s)
    s.set_defaults(func=cmd_overlap)

    s = sub.add_parser("motif-probs", help="probabilities of the 8 labeled edge subsets of a node triple")
    s.add_argument("--p", type=float, nargs=3, required=True, metavar=("P12", "P13", "P23"))
    s.add_argument("--g", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("G1", "G2", "G3"))
    s.add_argument("--binding", help="take scheme, R and residual coupling from this file")
    s.add_argument("--scheme", choices=["eigm", "maximal", "local", "parallel"], default="eigm")
    s.add_argument("--R", type=int)
    s.add_argument("--residual", choices=["shared", "independent"], default="shared")
    fmt(s)
    s.set_defaults(func=cmd_motif_probs)

    s = sub.add_parser("expected-counts", help="expected triangles, wedges, edges and analytic overlap")
    s.add_argument("model")
    s.add_argument("--binding")
    fmt(s)
    s.set_defaults(func=cmd_expected_counts)

    s = sub.add_parser("oracle-check", help="closed forms vs Monte Carlo on random triples")
    s.add_argument("--configs", type=int, default=10, help="configurations per scheme")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--schemes", nargs="+", choices=SWEEP_SCHEMES, default=list(SWEEP_SCHEMES))
    s.add_argument("--bound", type=float, default=4.0)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("benchmark", help="generation time per scheme")
    s.add_argument("model")
    s.add_argument("--binding", nargs="*", help="binding files to time besides the edge-independent baseline")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--threads", type=int, default=max(threads, 2))
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"bindgraph: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, FloatingPointError) as e:
        print(f"bindgraph: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, EdgeListError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"bindgraph: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
