"""End-to-end experiment pipeline: generate, enumerate, sample, compare.

A manifest (JSON) pins every parameter and the root seed; stage seeds are
derived from the root through named spawn keys, so a rerun with the same
manifest reproduces every artifact byte for byte regardless of worker count.
Artifacts are plain text files under the output directory:

    graph.txt                     interaction graph
    instances/<id>.ising/.planted/.terms
    solutions/<id>.sol
    gsd/<id>.sa.gsd, <id>.tf.gsd, <id>.ns.gsd, <id>.tts.csv
    report/report.csv, report/summary.json
    plotdata/<kind>*.csv
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import enumerator, instances, quantum, sa, stats, topology
from .errors import GenerationError, GsdError, InputError, IntegrityError

STAGES = ("graph", "instances", "sa", "quantum", "compare", "report")

# spawn-key stage codes for seed derivation
_GEN, _ENUM, _PILOT, _SA, _QGS, _COMPARE = range(6)


def derive_seed(root_seed: int, *key: int) -> int:
    """Stable integer sub-seed for a named stage/instance slot."""
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def default_manifest(seed: int = 0, count: int = 4) -> dict:
    return {
        "ensemble_id": "ensemble",
        "seed": seed,
        "graph": {"rows": 1, "cols": 2, "k": 4, "dead": []},
        "generation": {
            "density": 1.0,
            "count": count,
            "loop_length_limit": 8,
            "max_solutions": 500,
            "max_attempts_per_slot": 200,
        },
        "sa": {
            "beta_min": 0.0,
            "beta_max": 20.0,
            "anneals": 2000,
            "pilot_grid": [2**k for k in range(4, 15)],
            "pilot_anneals": 200,
        },
        "quantum": {
            "ns_sign_seed": 7,
            "eps_final": 1e-6,
            "grid_points_per_decade": 4,
            "s_star": 0.1,
            "anneal_grid": True,
        },
        "compare": {"n_bootstrap": 10000, "p_threshold": 0.01},
        "status": {stage: "pending" for stage in STAGES},
        "instances": [],
    }


def load_manifest(path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    for stage in STAGES:
        manifest.setdefault("status", {}).setdefault(stage, "pending")
    return manifest


def save_manifest(manifest: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _paths(out_dir: str, inst_id: str) -> dict:
    return {
        "ising": os.path.join(out_dir, "instances", f"{inst_id}.ising"),
        "planted": os.path.join(out_dir, "instances", f"{inst_id}.planted"),
        "terms": os.path.join(out_dir, "instances", f"{inst_id}.terms"),
        "solutions": os.path.join(out_dir, "solutions", f"{inst_id}.sol"),
        "sa": os.path.join(out_dir, "gsd", f"{inst_id}.sa.gsd"),
        "tf": os.path.join(out_dir, "gsd", f"{inst_id}.tf.gsd"),
        "ns": os.path.join(out_dir, "gsd", f"{inst_id}.ns.gsd"),
        "tts": os.path.join(out_dir, "gsd", f"{inst_id}.tts.csv"),
    }


def _load_planted(out_dir: str, inst_id: str) -> tuple[instances.IsingInstance, np.ndarray, int]:
    paths = _paths(out_dir, inst_id)
    inst = instances.load_instance(paths["ising"])
    planted_config, e0 = instances.load_planted(paths["planted"])
    return inst, planted_config, e0


def _instance_worker(args: tuple) -> dict:
    """Generate one kept instance: draw, enumerate, discard oversized, retry."""
    manifest, out_dir, slot = args
    gen = manifest["generation"]
    spec = topology.ChimeraSpec(
        rows=manifest["graph"]["rows"],
        cols=manifest["graph"]["cols"],
        k=manifest["graph"]["k"],
        dead_vertices=tuple(manifest["graph"]["dead"]),
    )
    graph = topology.build_chimera(spec)
    root = manifest["seed"]
    inst_id = f"inst{slot:04d}"
    paths = _paths(out_dir, inst_id)
    discarded = 0
    for attempt in range(gen["max_attempts_per_slot"]):
        seed = derive_seed(root, _GEN, slot, attempt)
        planted = instances.generate_planted(
            graph, gen["density"], gen["loop_length_limit"], seed
        )
        sols = enumerator.find_ground_states(
            planted,
            cap=gen["max_solutions"],
            rng_seed=derive_seed(root, _ENUM, slot, attempt),
            instance_id=inst_id,
        )
        if sols.truncated:
            discarded += 1
            continue
        instances.save_instance(planted.instance, paths["ising"])
        instances.save_planted(planted, paths["planted"])
        instances.save_terms(planted.terms, paths["terms"])
        enumerator.save_solutions(sols, paths["solutions"])
        return {
            "id": inst_id,
            "n_solutions": len(sols),
            "ground_energy": planted.ground_energy,
            "discarded_before_kept": discarded,
            "flags": [],
        }
    raise GenerationError(
        f"slot {slot}: all {gen['max_attempts_per_slot']} candidates exceeded "
        f"{gen['max_solutions']} solutions"
    )


def _sa_worker(args: tuple) -> dict:
    manifest, out_dir, slot = args
    entry = manifest["instances"][slot]
    inst_id = entry["id"]
    paths = _paths(out_dir, inst_id)
    inst, _, e0 = _load_planted(out_dir, inst_id)
    sols = enumerator.load_solutions(paths["solutions"], instance_id=inst_id)
    cfg = manifest["sa"]
    root = manifest["seed"]
    sweeps = sa.pilot_sweeps(
        inst,
        e0,
        cfg["pilot_grid"],
        cfg["pilot_anneals"],
        derive_seed(root, _PILOT, slot),
        beta_min=cfg["beta_min"],
        beta_max=cfg["beta_max"],
    )
    schedule = sa.SaSchedule(sweeps=sweeps, beta_min=cfg["beta_min"], beta_max=cfg["beta_max"])
    gsd = sa.sample_gsd(inst, sols, schedule, cfg["anneals"], derive_seed(root, _SA, slot))
    sa.save_gsd(gsd, paths["sa"])
    return {"id": inst_id, "sweeps": sweeps, "ground_hits": gsd.ground_hits}


def _qgs_worker(args: tuple) -> dict:
    manifest, out_dir, slot = args
    entry = manifest["instances"][slot]
    inst_id = entry["id"]
    paths = _paths(out_dir, inst_id)
    inst, _, _ = _load_planted(out_dir, inst_id)
    sols = enumerator.load_solutions(paths["solutions"], instance_id=inst_id)
    qcfg = manifest["quantum"]
    root = manifest["seed"]
    out: dict = {"id": inst_id, "flags": []}
    for kind_idx, kind in enumerate(("tf", "ns")):
        driver = quantum.make_driver(inst, kind, sign_seed=qcfg["ns_sign_seed"])
        config = quantum.QgsConfig(
            s_star=qcfg["s_star"],
            eps_final=qcfg["eps_final"],
            grid_points_per_decade=qcfg["grid_points_per_decade"],
            anneal_grid=qcfg.get("anneal_grid", True),
            rng_seed=derive_seed(root, _QGS, slot, kind_idx),
        )
        try:
            gsd = quantum.quantum_gsd(inst, sols, driver, config)
        except quantum.UnresolvedDegeneracyError:
            out["flags"].append(f"unresolved_degeneracy_{kind}")
            continue
        quantum.save_analytic_gsd(gsd, paths[kind])
        out[f"{kind}_basis_level"] = gsd.residual["basis_level"]
    return out


def _validate_gsd(gsd, n_solutions: int, label: str) -> None:
    p = stats.probabilities_of(gsd)
    if len(p) != n_solutions:
        raise IntegrityError(f"{label}: GSD indexes {len(p)} solutions, expected {n_solutions}")
    if p.sum() > 0 and abs(p.sum() - 1.0) > 1e-9:
        raise IntegrityError(f"{label}: probabilities sum to {p.sum()}")


def _compare_worker(args: tuple) -> list[dict]:
    manifest, out_dir, slot = args
    entry = manifest["instances"][slot]
    inst_id = entry["id"]
    paths = _paths(out_dir, inst_id)
    d = entry["n_solutions"]
    ccfg = manifest["compare"]
    root = manifest["seed"]
    loaded: dict = {}
    if os.path.exists(paths["sa"]):
        loaded["sa"] = sa.load_gsd(paths["sa"])
    for kind in ("tf", "ns"):
        if os.path.exists(paths[kind]):
            loaded[kind] = quantum.load_analytic_gsd(paths[kind])
    for label, gsd in loaded.items():
        _validate_gsd(gsd, d, f"{inst_id}.{label}")
    rows = []
    pair_list = [("sa", "tf"), ("sa", "ns"), ("tf", "ns")]
    for pair_idx, (ma, mb) in enumerate(pair_list):
        if ma not in loaded or mb not in loaded:
            continue
        a, b = loaded[ma], loaded[mb]
        pa, pb = stats.probabilities_of(a), stats.probabilities_of(b)
        analytic_pair = not (isinstance(a, sa.EmpiricalGSD) or isinstance(b, sa.EmpiricalGSD))
        if analytic_pair:
            tv = stats.tv_distance(a, b)
            statistic, p_value = tv, (0.0 if tv > 1e-12 else 1.0)
        else:
            result = stats.bootstrap_ks(
                a, b, ccfg["n_bootstrap"], derive_seed(root, _COMPARE, slot, pair_idx)
            )
            statistic, p_value = result.statistic, result.p_value
        rows.append(
            {
                "instance_id": inst_id,
                "method_a": ma,
                "method_b": mb,
                "chi2": statistic,
                "p_value": p_value,
                "bias_a": stats.bias(pa) if d > 1 else 0.0,
                "bias_b": stats.bias(pb) if d > 1 else 0.0,
                "bias_combined": stats.bias(stats.combine_gsds([pa, pb])) if d > 1 else 0.0,
            }
        )
    return rows


def _run_stage_items(worker, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, items))


def _support_mismatches(manifest: dict, out_dir: str) -> int:
    count = 0
    for entry in manifest["instances"]:
        paths = _paths(out_dir, entry["id"])
        if not (os.path.exists(paths["tf"]) and os.path.exists(paths["ns"])):
            continue
        ptf = quantum.load_analytic_gsd(paths["tf"]).probabilities
        pns = quantum.load_analytic_gsd(paths["ns"]).probabilities
        zero_tf = ptf < 1e-12
        zero_ns = pns < 1e-12
        if np.any(zero_tf & ~zero_ns) or np.any(zero_ns & ~zero_tf):
            count += 1
    return count


def run_pipeline(manifest: dict, out_dir: str, threads: int = 1) -> dict:
    """Execute pending stages in dependency order; completed stages are
    skipped, so rerunning a finished manifest touches nothing."""
    for sub in ("instances", "solutions", "gsd", "report", "plotdata"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    status = manifest["status"]
    try:
        if status["graph"] != "done":
            spec = topology.ChimeraSpec(
                rows=manifest["graph"]["rows"],
                cols=manifest["graph"]["cols"],
                k=manifest["graph"]["k"],
                dead_vertices=tuple(manifest["graph"]["dead"]),
            )
            topology.save_graph(topology.build_chimera(spec), os.path.join(out_dir, "graph.txt"))
            status["graph"] = "done"

        count = manifest["generation"]["count"]
        if status["instances"] != "done":
            items = [(manifest, out_dir, slot) for slot in range(count)]
            manifest["instances"] = _run_stage_items(_instance_worker, items, threads)
            status["instances"] = "done"

        if status["sa"] != "done":
            items = [(manifest, out_dir, slot) for slot in range(len(manifest["instances"]))]
            for result in _run_stage_items(_sa_worker, items, threads):
                for entry in manifest["instances"]:
                    if entry["id"] == result["id"]:
                        entry["sa_sweeps"] = result["sweeps"]
                        entry["sa_ground_hits"] = result["ground_hits"]
            status["sa"] = "done"

        if status["quantum"] != "done":
            items = [(manifest, out_dir, slot) for slot in range(len(manifest["instances"]))]
            for result in _run_stage_items(_qgs_worker, items, threads):
                for entry in manifest["instances"]:
                    if entry["id"] == result["id"]:
                        entry["flags"] = sorted(set(entry.get("flags", [])) | set(result["flags"]))
                        for key in ("tf_basis_level", "ns_basis_level"):
                            if key in result:
                                entry[key] = result[key]
            status["quantum"] = "done"

        if status["compare"] != "done":
            items = [(manifest, out_dir, slot) for slot in range(len(manifest["instances"]))]
            rows: list[dict] = []
            for chunk in _run_stage_items(_compare_worker, items, threads):
                rows.extend(chunk)
            _write_report_csv(rows, os.path.join(out_dir, "report", "report.csv"))
            status["compare"] = "done"

        if status["report"] != "done":
            rows = read_report_csv(os.path.join(out_dir, "report", "report.csv"))
            summary = stats.pairwise_report(rows, manifest["compare"]["p_threshold"])
            summary["ensemble_id"] = manifest["ensemble_id"]
            summary["instances"] = len(manifest["instances"])
            summary["discarded_oversized"] = sum(
                e.get("discarded_before_kept", 0) for e in manifest["instances"]
            )
            summary["support_mismatch_instances"] = _support_mismatches(manifest, out_dir)
            summary["solution_histogram"] = _solution_histogram(manifest)
            with open(os.path.join(out_dir, "report", "summary.json"), "w") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True)
                fh.write("\n")
            status["report"] = "done"
    except GsdError as exc:
        failed = next(stage for stage in STAGES if status[stage] != "done")
        status[failed] = f"failed: {exc}"
        raise
    return manifest


def _solution_histogram(manifest: dict) -> dict:
    hist: dict[str, int] = {}
    for entry in manifest["instances"]:
        key = str(entry["n_solutions"])
        hist[key] = hist.get(key, 0) + 1
    return hist


_REPORT_FIELDS = (
    "instance_id",
    "method_a",
    "method_b",
    "chi2",
    "p_value",
    "bias_a",
    "bias_b",
    "bias_combined",
)


def _write_report_csv(rows: list[dict], path) -> None:
    rows = sorted(rows, key=lambda r: (r["instance_id"], r["method_a"], r["method_b"]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r["instance_id"],
                    r["method_a"],
                    r["method_b"],
                    f"{r['chi2']:.17g}",
                    f"{r['p_value']:.17g}",
                    f"{r['bias_a']:.17g}",
                    f"{r['bias_b']:.17g}",
                    f"{r['bias_combined']:.17g}",
                ]
            )


def read_report_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            rows.append(
                {
                    "instance_id": record["instance_id"],
                    "method_a": record["method_a"],
                    "method_b": record["method_b"],
                    "chi2": float(record["chi2"]),
                    "p_value": float(record["p_value"]),
                    "bias_a": float(record["bias_a"]),
                    "bias_b": float(record["bias_b"]),
                    "bias_combined": float(record["bias_combined"]),
                }
            )
    return rows


PLOT_KINDS = ("bias_scatter", "tts_curves", "gsd_bars", "solution_histogram", "pvalue_matrix")


def emit_plot_data(
    out_dir: str,
    kind: str,
    method_a: str = "sa",
    method_b: str = "tf",
    instance_id: str | None = None,
) -> str:
    """Write the CSV backing one figure kind; returns the written path."""
    if kind not in PLOT_KINDS:
        raise InputError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    plot_dir = os.path.join(out_dir, "plotdata")
    os.makedirs(plot_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise InputError(f"no manifest at {manifest_path}")
    manifest = load_manifest(manifest_path)

    if kind == "solution_histogram":
        path = os.path.join(plot_dir, "solution_histogram.csv")
        hist = _solution_histogram(manifest)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_solutions", "n_instances"])
            for key in sorted(hist, key=int):
                writer.writerow([key, hist[key]])
        return path

    if kind == "pvalue_matrix":
        rows = read_report_csv(os.path.join(out_dir, "report", "report.csv"))
        path = os.path.join(plot_dir, "pvalue_matrix.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "pair", "p_value"])
            for r in rows:
                writer.writerow(
                    [r["instance_id"], f"{r['method_a']}-{r['method_b']}", f"{r['p_value']:.17g}"]
                )
        return path

    if kind == "bias_scatter":
        path = os.path.join(plot_dir, f"bias_scatter_{method_a}_{method_b}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["instance_id", "bias_a", "bias_b", "bias_combined", "ref_equal", "ref_half"]
            )
            for entry in manifest["instances"]:
                paths = _paths(out_dir, entry["id"])
                gsds = {}
                for label in (method_a, method_b):
                    gsd_path = paths.get(label)
                    if gsd_path is None or not os.path.exists(gsd_path):
                        break
                    gsds[label] = (
                        sa.load_gsd(gsd_path)
                        if label == "sa"
                        else quantum.load_analytic_gsd(gsd_path)
                    )
                if len(gsds) < 2 or entry["n_solutions"] < 2:
                    continue
                pa = stats.probabilities_of(gsds[method_a])
                pb = stats.probabilities_of(gsds[method_b])
                ba = stats.bias(pa)
                writer.writerow(
                    [
                        entry["id"],
                        f"{ba:.17g}",
                        f"{stats.bias(pb):.17g}",
                        f"{stats.bias(stats.combine_gsds([pa, pb])):.17g}",
                        f"{ba:.17g}",
                        f"{ba / 2:.17g}",
                    ]
                )
        return path

    if kind == "gsd_bars":
        if instance_id is None:
            raise InputError("gsd_bars requires an instance id")
        paths = _paths(out_dir, instance_id)
        columns: dict[str, np.ndarray] = {}
        for label in ("sa", "tf", "ns"):
            if os.path.exists(paths[label]):
                gsd = sa.load_gsd(paths[label]) if label == "sa" else quantum.load_analytic_gsd(paths[label])
                columns[label] = stats.probabilities_of(gsd)
        if not columns:
            raise InputError(f"no GSD artifacts for instance {instance_id}")
        d = len(next(iter(columns.values())))
        path = os.path.join(plot_dir, f"gsd_bars_{instance_id}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["solution_index"] + [f"p_{label}" for label in columns])
            for i in range(d):
                writer.writerow([i] + [f"{columns[label][i]:.17g}" for label in columns])
        return path

    # tts_curves
    if instance_id is None:
        raise InputError("tts_curves requires an instance id")
    src = _paths(out_dir, instance_id)["tts"]
    if not os.path.exists(src):
        raise InputError(f"no TTS artifact for {instance_id}; run 'gsd sa-tts' first")
    path = os.path.join(plot_dir, f"tts_curves_{instance_id}.csv")
    with open(src) as fh_in, open(path, "w") as fh_out:
        fh_out.write(fh_in.read())
    return path


def write_tts_csv(sweeps_list: list[int], tts: np.ndarray, path) -> None:
    """Columns: sweeps, then one average-time column per solution."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweeps"] + [f"tts_sol{i}" for i in range(tts.shape[0])])
        for k, sweeps in enumerate(sweeps_list):
            writer.writerow(
                [sweeps] + [("inf" if np.isinf(v) else f"{v:.17g}") for v in tts[:, k]]
            )
