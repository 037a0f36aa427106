import filecmp
import json
import os

import numpy as np
import pytest

from gsdlab import pipeline
from gsdlab.cli import main
from gsdlab.quantum import load_analytic_gsd
from gsdlab.sa import load_gsd
from gsdlab.stats import probabilities_of


def small_manifest(seed=0, count=3):
    manifest = pipeline.default_manifest(seed=seed, count=count)
    manifest["sa"]["pilot_grid"] = [16, 64]
    manifest["sa"]["pilot_anneals"] = 100
    manifest["sa"]["anneals"] = 400
    manifest["compare"]["n_bootstrap"] = 500
    return manifest


def tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            with open(path, "rb") as fh:
                out[rel] = fh.read()
    return out


def test_pipeline_end_to_end(tmp_path):
    out = tmp_path / "run"
    manifest = small_manifest()
    pipeline.run_pipeline(manifest, str(out))
    assert all(v == "done" for v in manifest["status"].values())
    assert len(manifest["instances"]) == 3
    for entry in manifest["instances"]:
        paths = pipeline._paths(str(out), entry["id"])
        for key in ("ising", "planted", "terms", "solutions", "sa", "tf", "ns"):
            assert os.path.exists(paths[key]), key
        d = entry["n_solutions"]
        sa_gsd = load_gsd(paths["sa"])
        assert len(sa_gsd.counts) == d
        for kind in ("tf", "ns"):
            p = probabilities_of(load_analytic_gsd(paths[kind]))
            assert len(p) == d
            assert abs(p.sum() - 1.0) < 1e-9
    report = (out / "report" / "report.csv").read_text().splitlines()
    assert report[0].startswith("instance_id,")
    assert len(report) == 1 + 3 * 3  # three method pairs per instance
    summary = json.loads((out / "report" / "summary.json").read_text())
    assert summary["instances"] == 3
    assert "sa-tf" in summary["pairs"]


def test_pipeline_empty_ensemble(tmp_path):
    manifest = small_manifest(count=0)
    pipeline.run_pipeline(manifest, str(tmp_path / "e"))
    assert all(v == "done" for v in manifest["status"].values())
    assert manifest["instances"] == []


def test_pipeline_rerun_is_noop(tmp_path):
    out = tmp_path / "run"
    manifest = small_manifest(seed=5)
    pipeline.run_pipeline(manifest, str(out))
    before = tree_bytes(out)
    snapshot = json.dumps(manifest, sort_keys=True)
    pipeline.run_pipeline(manifest, str(out))
    assert tree_bytes(out) == before
    assert json.dumps(manifest, sort_keys=True) == snapshot


def test_pipeline_deterministic_across_thread_counts(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    m1 = small_manifest(seed=11)
    m2 = small_manifest(seed=11)
    pipeline.run_pipeline(m1, str(out1), threads=1)
    pipeline.run_pipeline(m2, str(out2), threads=3)
    t1, t2 = tree_bytes(out1), tree_bytes(out2)
    assert t1.keys() == t2.keys()
    for rel in t1:
        assert t1[rel] == t2[rel], rel
    assert json.dumps(m1, sort_keys=True) == json.dumps(m2, sort_keys=True)


def test_pipeline_reruns_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    pipeline.run_pipeline(small_manifest(seed=2), str(out1))
    pipeline.run_pipeline(small_manifest(seed=2), str(out2))
    t1, t2 = tree_bytes(out1), tree_bytes(out2)
    assert t1 == t2


def test_derive_seed_stable():
    assert pipeline.derive_seed(3, 1, 4) == pipeline.derive_seed(3, 1, 4)
    assert pipeline.derive_seed(3, 1, 4) != pipeline.derive_seed(3, 1, 5)


def test_plotdata_kinds(tmp_path):
    out = tmp_path / "run"
    manifest = small_manifest(seed=1)
    pipeline.run_pipeline(manifest, str(out))
    pipeline.save_manifest(manifest, out / "manifest.json")

    hist = pipeline.emit_plot_data(str(out), "solution_histogram")
    lines = open(hist).read().splitlines()
    assert lines[0] == "n_solutions,n_instances"
    assert sum(int(ln.split(",")[1]) for ln in lines[1:]) == 3

    pv = pipeline.emit_plot_data(str(out), "pvalue_matrix")
    assert open(pv).read().splitlines()[0] == "instance_id,pair,p_value"

    scatter = pipeline.emit_plot_data(str(out), "bias_scatter", method_a="sa", method_b="tf")
    rows = open(scatter).read().splitlines()
    assert rows[0].split(",")[:2] == ["instance_id", "bias_a"]
    for ln in rows[1:]:
        fields = ln.split(",")
        assert float(fields[4]) == pytest.approx(float(fields[1]))  # y = x line
        assert float(fields[5]) == pytest.approx(float(fields[1]) / 2)  # y = x/2

    bars = pipeline.emit_plot_data(
        str(out), "gsd_bars", instance_id=manifest["instances"][0]["id"]
    )
    header = open(bars).read().splitlines()[0]
    assert header.startswith("solution_index,p_sa")


def test_plotdata_missing_artifacts_rejected(tmp_path):
    out = tmp_path / "run"
    manifest = small_manifest(seed=1)
    pipeline.run_pipeline(manifest, str(out))
    pipeline.save_manifest(manifest, out / "manifest.json")
    from gsdlab.errors import InputError

    with pytest.raises(InputError):
        pipeline.emit_plot_data(str(out), "tts_curves", instance_id="inst0000")
    with pytest.raises(InputError):
        pipeline.emit_plot_data(str(out), "nonsense")


# ---------------------------------------------------------------------------
# CLI


def test_cli_topology_gen_enumerate_roundtrip(tmp_path, capsys):
    graph_path = tmp_path / "graph.txt"
    assert main(
        ["topology", "chimera", "--rows", "1", "--cols", "2", "--k", "4", "--out", str(graph_path)]
    ) == 0
    assert graph_path.exists()

    gen_dir = tmp_path / "gen"
    assert main(
        [
            "gen",
            "--graph", str(graph_path),
            "--density", "1.0",
            "--count", "2",
            "--seed", "4",
            "--out-dir", str(gen_dir),
        ]
    ) == 0
    base = gen_dir / "inst0000"
    assert (gen_dir / "inst0001.sol").exists()

    sol_out = tmp_path / "re.sol"
    assert main(
        ["enumerate", "--instance", str(base), "--cap", "500", "--out", str(sol_out)]
    ) == 0
    assert sol_out.read_text() == (gen_dir / "inst0000.sol").read_text()

    gsd_out = tmp_path / "x.sa.gsd"
    assert main(
        [
            "sa",
            "--instance", str(base),
            "--solutions", str(sol_out),
            "--sweeps", "64",
            "--anneals", "300",
            "--seed", "1",
            "--out", str(gsd_out),
        ]
    ) == 0

    tf_out = tmp_path / "x.tf.gsd"
    assert main(
        [
            "qgs",
            "--instance", str(base),
            "--solutions", str(sol_out),
            "--driver", "tf",
            "--out", str(tf_out),
        ]
    ) == 0

    assert main(
        ["compare", "--a", str(gsd_out), "--b", str(tf_out), "--bootstrap", "400"]
    ) == 0
    out = capsys.readouterr().out
    assert '"p_value"' in out

    tts_out = tmp_path / "x.tts.csv"
    assert main(
        [
            "sa-tts",
            "--instance", str(base),
            "--solutions", str(sol_out),
            "--sweeps-grid", "16,64",
            "--anneals", "100",
            "--out", str(tts_out),
        ]
    ) == 0
    assert tts_out.read_text().startswith("sweeps,tts_sol0")


def test_cli_missing_file_is_input_error(tmp_path, capsys):
    code = main(
        ["enumerate", "--instance", str(tmp_path / "nope"), "--out", str(tmp_path / "x")]
    )
    assert code == 2


def test_cli_exit_codes_for_bad_input(tmp_path):
    bad_graph = tmp_path / "g.txt"
    bad_graph.write_text("not a graph\n")
    code = main(
        ["gen", "--graph", str(bad_graph), "--count", "1", "--out-dir", str(tmp_path)]
    )
    assert code == 2


def test_cli_pipeline_init_and_run(tmp_path, capsys):
    out = tmp_path / "exp"
    manifest_path = out / "manifest.json"
    assert main(
        ["pipeline", "--init", "--count", "2", "--seed", "3", "--out-dir", str(out)]
    ) == 0
    manifest = pipeline.load_manifest(manifest_path)
    manifest["sa"]["pilot_grid"] = [16, 64]
    manifest["sa"]["pilot_anneals"] = 50
    manifest["sa"]["anneals"] = 200
    manifest["compare"]["n_bootstrap"] = 300
    pipeline.save_manifest(manifest, manifest_path)
    assert main(
        ["pipeline", "--manifest", str(manifest_path), "--out-dir", str(out)]
    ) == 0
    status = pipeline.load_manifest(manifest_path)["status"]
    assert all(v == "done" for v in status.values())
    assert main(["report", "--dir", str(out)]) == 0
    assert '"pairs"' in capsys.readouterr().out
    assert main(["plotdata", "--dir", str(out), "--kind", "solution_histogram"]) == 0
