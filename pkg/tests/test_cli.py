import json
import subprocess
import sys

import numpy as np
import pytest

from cholspectral.cli import main
from cholspectral.clustering import read_labels, write_labels
from cholspectral.report import read_embedding, write_embedding


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["synth", "--layers", "3", "--clusters", "5", "--per-cluster", "100", "--seed", "7",
                 "--out", str(out)]) == 0
    return out


def strip_timing(path):
    d = json.loads(path.read_text())
    d.pop("seconds", None)
    for row in d.get("rows", []):
        row.pop("seconds", None)
    return d


def test_synth_outputs(synth_dir):
    names = sorted(p.name for p in synth_dir.iterdir())
    assert names == ["layer_0.tsv", "layer_1.tsv", "layer_2.tsv", "manifest.json", "truth.txt"]
    man = json.loads((synth_dir / "manifest.json").read_text())
    assert man["layers"] == ["layer_0.tsv", "layer_1.tsv", "layer_2.tsv"]
    assert (man["alpha"], man["k"], man["n_vertices"]) == (0.5, 5, 500)
    assert read_labels(synth_dir / "truth.txt").size == 500


def test_synth_single_layer(tmp_path):
    assert main(["synth", "--layers", "1", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["layers"] == ["layer_0.tsv"]


def test_synth_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        main(["synth", "--seed", "3", "--out", str(tmp_path / name)])
    for f in ("layer_0.tsv", "layer_2.tsv", "truth.txt", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.parametrize("solver", ["eigen", "fb_qr", "sgd_cholesky"])
def test_embed_manifest_deterministic(synth_dir, tmp_path, solver, capsys):
    args = ["embed", "--manifest", str(synth_dir / "manifest.json"), "--solver", solver, "--iters", "200"]
    assert main(args + ["--out", str(tmp_path / "r1")]) == 0
    assert main(args + ["--out", str(tmp_path / "r2")]) == 0
    a, b = tmp_path / "r1", tmp_path / "r2"
    assert (a / "embedding.csv").read_bytes() == (b / "embedding.csv").read_bytes()
    assert strip_timing(a / "report.json") == strip_timing(b / "report.json")
    U = read_embedding(a / "embedding.csv")
    assert U.shape == (500, 5)
    assert np.linalg.norm(U.T @ U - np.eye(5)) <= 1e-8
    report = json.loads((a / "report.json").read_text())
    assert report["solver"] == solver and {"objective", "iterations", "seconds", "trace"} <= set(report)


def test_embed_path_eigen_constant_column(tmp_path):
    (tmp_path / "p.tsv").write_text("0\t1\t1.0\n")
    assert main(["embed", "--graph", str(tmp_path / "p.tsv"), "--solver", "eigen", "--k", "1",
                 "--out", str(tmp_path)]) == 0
    U = read_embedding(tmp_path / "embedding.csv")
    np.testing.assert_allclose(np.abs(U[:, 0]), [2 ** -0.5] * 2, atol=1e-12)


def test_embed_csv_has_17_digits(tmp_path):
    (tmp_path / "p.tsv").write_text("0\t1\t1.0\n1\t2\t1.0\n")
    main(["embed", "--graph", str(tmp_path / "p.tsv"), "--solver", "eigen", "--k", "2", "--out", str(tmp_path)])
    first = (tmp_path / "embedding.csv").read_text().splitlines()[0].split(",")
    assert len(first) == 2 and all(len(v.lstrip("-").replace(".", "").split("e")[0]) >= 15 for v in first)


def test_sgd_defaults_recorded(synth_dir, tmp_path):
    main(["embed", "--manifest", str(synth_dir / "manifest.json"), "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    assert (report["solver"], report["iterations"], report["gamma"], report["batch_size"]) == \
        ("sgd_cholesky", 500, 1e-3, 4000)


def test_config_file_with_flag_override(synth_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"manifest": str(synth_dir / "manifest.json"), "solver": "fb_qr", "iters": 50,
                               "batch-size": 100}))
    assert main(["embed", "--config", str(cfg), "--iters", "20", "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["solver"] == "fb_qr" and report["iterations"] == 20


def test_cluster_perfect_embedding(tmp_path, capsys):
    truth = np.repeat(np.arange(3), 10)
    write_embedding(np.eye(3)[truth], tmp_path / "e.csv")
    write_labels(truth, tmp_path / "t.txt")
    assert main(["cluster", "--embedding", str(tmp_path / "e.csv"), "--truth", str(tmp_path / "t.txt"),
                 "--out", str(tmp_path)]) == 0
    text = (tmp_path / "metrics.json").read_text()
    assert text == '{"purity": 1.000000, "nmi": 1.000000, "rand_index": 1.000000}\n'
    assert read_labels(tmp_path / "labels.txt").size == 30


def test_cluster_shuffled_truth_purity_near_chance(tmp_path):
    K, rng = 5, np.random.default_rng(0)
    truth = np.repeat(np.arange(K), 200)
    write_embedding(np.eye(K)[truth], tmp_path / "e.csv")
    write_labels(rng.permutation(truth), tmp_path / "t.txt")
    main(["cluster", "--embedding", str(tmp_path / "e.csv"), "--truth", str(tmp_path / "t.txt"),
          "--out", str(tmp_path)])
    assert json.loads((tmp_path / "metrics.json").read_text())["purity"] == pytest.approx(1 / K, abs=0.05)


def test_bench_table(synth_dir, tmp_path, capsys):
    assert main(["bench", "--manifest", str(synth_dir / "manifest.json"), "--iters", "200",
                 "--fb-iters", "200", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "bench.json").read_text())
    assert [r["solver"] for r in data["rows"]] == ["eigen", "fb_qr", "sgd_cholesky"]
    for r in data["rows"]:
        assert all(0.0 <= r[m] <= 1.0 for m in ("purity", "nmi", "rand_index"))
    table = (tmp_path / "bench.txt").read_text().splitlines()
    assert table[0].split() == ["Method", "Time", "Iter.", "Purity", "NMI", "RI"]
    assert len(table) == 5


@pytest.mark.parametrize("argv,category", [
    (["embed", "--graph", "missing.tsv", "--k", "2"], "io"),
    (["embed", "--k", "2"], "config"),
    (["cluster"], "config"),
])
def test_errors_are_one_line(argv, category, capsys, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith(f"error: {category}: ")


def test_parse_error_reports_line(tmp_path, capsys):
    (tmp_path / "bad.tsv").write_text("0\t1\t1\n0\t1\n")
    assert main(["embed", "--graph", str(tmp_path / "bad.tsv"), "--k", "1", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: parse: ") and "bad.tsv:2:" in err


def test_bad_flag_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["embed", "--solver", "nope"])
    assert exc.value.code == 2
    assert capsys.readouterr().err.startswith("error: usage: ")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cholspectral", "synth", "--layers", "1", "--per-cluster", "5",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "manifest.json").exists()
