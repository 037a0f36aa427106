"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 resource error, 4 numerical error,
5 integrity error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import enumerator, instances, pipeline, quantum, sa, stats, topology
from .errors import GsdError, InputError


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root RNG seed")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--out-dir", default=".", help="artifact directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsd",
        description="Ground-state distribution laboratory for planted Ising spin glasses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="build an interaction graph")
    topo_sub = p.add_subparsers(dest="topology_kind", required=True)
    pc = topo_sub.add_parser("chimera", help="grid of K_{k,k} cells")
    pc.add_argument("--rows", type=int, required=True)
    pc.add_argument("--cols", type=int, required=True)
    pc.add_argument("--k", type=int, default=4)
    pc.add_argument("--dead", help="file listing dead vertex indices")
    pc.add_argument("--out", required=True, help="graph file to write")
    _common(pc)

    p = sub.add_parser("gen", help="generate planted instances (filtered by solution count)")
    p.add_argument("--graph", required=True, help="graph file")
    p.add_argument("--density", type=float, default=0.35, help="terms per spin")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-solutions", type=int, default=500)
    p.add_argument("--loop-limit", type=int, default=8)
    _common(p)

    p = sub.add_parser("enumerate", help="list all ground states")
    p.add_argument("--instance", help="basename of .ising/.terms/.planted files")
    p.add_argument("--constraints", help="raw constraint table file (alternative input)")
    p.add_argument("--nvars", type=int, help="bit count for --constraints input")
    p.add_argument("--cap", type=int, default=500)
    p.add_argument("--out", required=True, help="solution file to write")
    _common(p)

    p = sub.add_parser("sa", help="sample an empirical GSD with simulated annealing")
    p.add_argument("--instance", required=True, help="basename of instance files")
    p.add_argument("--solutions", required=True)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--anneals", type=int, default=10000)
    p.add_argument("--beta-max", type=float, default=20.0)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("sa-tts", help="per-solution time-to-solution over a sweep grid")
    p.add_argument("--instance", required=True)
    p.add_argument("--solutions", required=True)
    p.add_argument("--sweeps-grid", required=True, help="comma-separated sweep counts")
    p.add_argument("--anneals", type=int, default=2000, help="anneals per grid point")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("qgs", help="exact quantum-annealing GSD at s -> 1")
    p.add_argument("--instance", required=True)
    p.add_argument("--solutions", required=True)
    p.add_argument("--driver", choices=("tf", "ns"), required=True)
    p.add_argument("--sign-seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-6, help="final 1-s of the anneal grid")
    p.add_argument("--no-extrapolate", action="store_true")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("compare", help="test whether two GSD files differ")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--bootstrap", type=int, default=10000)
    _common(p)

    p = sub.add_parser("report", help="aggregate comparisons under an artifact directory")
    p.add_argument("--dir", required=True)
    _common(p)

    p = sub.add_parser("plotdata", help="emit figure-backing CSVs")
    p.add_argument("--dir", required=True)
    p.add_argument("--kind", choices=pipeline.PLOT_KINDS, required=True)
    p.add_argument("--a", default="sa")
    p.add_argument("--b", default="tf")
    p.add_argument("--instance-id")
    _common(p)

    p = sub.add_parser("pipeline", help="run the full experiment from a manifest")
    p.add_argument("--manifest", help="manifest JSON (written back with statuses)")
    p.add_argument("--init", action="store_true", help="write a default manifest and exit")
    p.add_argument("--count", type=int, default=4, help="ensemble size for --init")
    _common(p)

    return parser


def _load_gsd_any(path):
    with open(path) as fh:
        fh.readline()
        flag = fh.readline().strip()
    if flag == "analytic":
        return quantum.load_analytic_gsd(path)
    return sa.load_gsd(path)


def _cmd_topology(args) -> int:
    dead: tuple[int, ...] = ()
    if args.dead:
        with open(args.dead) as fh:
            dead = tuple(int(t) for t in fh.read().split())
    spec = topology.ChimeraSpec(rows=args.rows, cols=args.cols, k=args.k, dead_vertices=dead)
    graph = topology.build_chimera(spec)
    topology.save_graph(graph, args.out)
    print(f"wrote {args.out}: {graph.vertex_count} vertices, {len(graph.edges)} edges")
    return 0


def _cmd_gen(args) -> int:
    graph = topology.load_graph(args.graph)
    os.makedirs(args.out_dir, exist_ok=True)
    kept = 0
    attempt = 0
    while kept < args.count:
        seed = pipeline.derive_seed(args.seed, 0, kept, attempt)
        attempt += 1
        if attempt > 200 * args.count:
            raise InputError("generation kept discarding instances; lower the density?")
        planted = instances.generate_planted(graph, args.density, args.loop_limit, seed)
        sols = enumerator.find_ground_states(
            planted, cap=args.max_solutions, rng_seed=seed, instance_id=f"inst{kept:04d}"
        )
        if sols.truncated:
            continue
        base = os.path.join(args.out_dir, f"inst{kept:04d}")
        instances.save_instance(planted.instance, base + ".ising")
        instances.save_planted(planted, base + ".planted")
        instances.save_terms(planted.terms, base + ".terms")
        enumerator.save_solutions(sols, base + ".sol")
        print(f"{base}: {len(sols)} solutions, ground energy {planted.ground_energy}")
        kept += 1
    return 0


def _load_instance_triplet(base: str):
    inst = instances.load_instance(base + ".ising")
    planted_config, e0 = instances.load_planted(base + ".planted")
    terms = instances.load_terms(base + ".terms")
    return instances.PlantedInstance(
        instance=inst, terms=terms, planted=planted_config, ground_energy=e0
    )


def _cmd_enumerate(args) -> int:
    if args.constraints:
        if args.nvars is None:
            raise InputError("--constraints requires --nvars")
        constraints = enumerator.load_constraints(args.constraints)
        record = enumerator.eliminate_all(constraints, args.nvars, rng_seed=args.seed)
        if record.contradiction:
            sols = enumerator.SolutionSet(
                instance_id="",
                ground_energy=0,
                solutions=np.zeros((0, args.nvars), dtype=np.int8),
                truncated=False,
            )
        else:
            sols = enumerator.enumerate_solutions(record, args.cap)
    elif args.instance:
        planted = _load_instance_triplet(args.instance)
        sols = enumerator.find_ground_states(planted, cap=args.cap, rng_seed=args.seed)
    else:
        raise InputError("provide --instance or --constraints")
    enumerator.save_solutions(sols, args.out)
    print(f"wrote {args.out}: {len(sols)} solutions, truncated={sols.truncated}")
    return 0


def _cmd_sa(args) -> int:
    planted = _load_instance_triplet(args.instance)
    sols = enumerator.load_solutions(args.solutions)
    schedule = sa.SaSchedule(sweeps=args.sweeps, beta_max=args.beta_max)
    gsd = sa.sample_gsd(planted.instance, sols, schedule, args.anneals, args.seed)
    sa.save_gsd(gsd, args.out)
    print(f"wrote {args.out}: {gsd.ground_hits}/{gsd.anneals} ground hits")
    return 0


def _cmd_sa_tts(args) -> int:
    planted = _load_instance_triplet(args.instance)
    sols = enumerator.load_solutions(args.solutions)
    grid = sorted(int(t) for t in args.sweeps_grid.split(","))
    tts, _ = sa.tts_curve(planted.instance, sols, grid, args.anneals, args.seed)
    pipeline.write_tts_csv(grid, tts, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_qgs(args) -> int:
    planted = _load_instance_triplet(args.instance)
    sols = enumerator.load_solutions(args.solutions)
    driver = quantum.make_driver(planted.instance, args.driver, sign_seed=args.sign_seed)
    config = quantum.QgsConfig(
        eps_final=args.eps, extrapolate=not args.no_extrapolate, rng_seed=args.seed
    )
    gsd = quantum.quantum_gsd(planted.instance, sols, driver, config)
    quantum.save_analytic_gsd(gsd, args.out)
    print(
        f"wrote {args.out}: level {gsd.residual['basis_level']} basis, "
        f"dimension {gsd.residual['dimension']}"
    )
    return 0


def _cmd_compare(args) -> int:
    a = _load_gsd_any(args.a)
    b = _load_gsd_any(args.b)
    a_emp = isinstance(a, sa.EmpiricalGSD)
    b_emp = isinstance(b, sa.EmpiricalGSD)
    if not a_emp and not b_emp:
        tv = stats.tv_distance(a, b)
        out = {"statistic": tv, "kind": "total_variation", "identical": tv <= 1e-12}
    else:
        result = stats.bootstrap_ks(a, b, args.bootstrap, args.seed)
        out = {
            "statistic": result.statistic,
            "kind": "bootstrap_chi2",
            "p_value": result.p_value,
            "p_floor": 1.0 / result.n_bootstrap,
            "asymptotic_p": result.asymptotic_p,
        }
        if result.p_value < 1.0 / result.n_bootstrap:
            out["note"] = f"p < 1/{result.n_bootstrap}"
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_report(args) -> int:
    rows = pipeline.read_report_csv(os.path.join(args.dir, "report", "report.csv"))
    manifest = pipeline.load_manifest(os.path.join(args.dir, "manifest.json"))
    summary = stats.pairwise_report(rows, manifest["compare"]["p_threshold"])
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_plotdata(args) -> int:
    path = pipeline.emit_plot_data(
        args.dir, args.kind, method_a=args.a, method_b=args.b, instance_id=args.instance_id
    )
    print(f"wrote {path}")
    return 0


def _cmd_pipeline(args) -> int:
    manifest_path = args.manifest or os.path.join(args.out_dir, "manifest.json")
    if args.init:
        manifest = pipeline.default_manifest(seed=args.seed, count=args.count)
        os.makedirs(args.out_dir, exist_ok=True)
        pipeline.save_manifest(manifest, manifest_path)
        print(f"wrote {manifest_path}")
        return 0
    manifest = pipeline.load_manifest(manifest_path)
    try:
        pipeline.run_pipeline(manifest, args.out_dir, threads=args.threads)
    finally:
        pipeline.save_manifest(manifest, os.path.join(args.out_dir, "manifest.json"))
    print(json.dumps(manifest["status"], indent=2, sort_keys=True))
    return 0


_DISPATCH = {
    "topology": _cmd_topology,
    "gen": _cmd_gen,
    "enumerate": _cmd_enumerate,
    "sa": _cmd_sa,
    "sa-tts": _cmd_sa_tts,
    "qgs": _cmd_qgs,
    "compare": _cmd_compare,
    "report": _cmd_report,
    "plotdata": _cmd_plotdata,
    "pipeline": _cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except GsdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
