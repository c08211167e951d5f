import json
import subprocess
import sys

import numpy as np
import pytest

from pnmf.cli import main
from pnmf.fileio import read_labels, read_matrix, read_vector, write_matrix
from pnmf.numerics import pairwise_distances

from _oracles import union_find_merges


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def blobs(tmp_path_factory):
    root = tmp_path_factory.mktemp("blobs")
    assert run("gen", "--generator", "blobs", "--k", 3, "--n-per", 6, "--dim", 4, "--seed", 1,
               "--out", root / "g") == 0
    assert run("factorize", "--data", root / "g/data.csv", "--out", root / "r",
               "--preset", "clustering", "--max-outer", 3) == 0
    return root


# ----------------------------------------------------------------------- gen

def test_gen_circles_shape_and_determinism(tmp_path):
    assert run("gen", "--seed", 0, "--out", tmp_path / "a") == 0
    assert run("gen", "--seed", 0, "--out", tmp_path / "b") == 0
    X = read_matrix(tmp_path / "a/data.csv")
    assert X.shape == (80, 100)
    assert read_labels(tmp_path / "a/labels.csv").size == 80
    for name in ("data.csv", "labels.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gen_blobs_labels(blobs):
    assert sorted(set(read_labels(blobs / "g/labels.csv").tolist())) == [0, 1, 2]
    m = json.loads((blobs / "g/manifest.json").read_text())
    assert m["seeds"]["data"] == 1


# -------------------------------------------------------------------- scales

def test_scales_two_points(tmp_path):
    write_matrix(tmp_path / "x.csv", np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert run("scales", "--data", tmp_path / "x.csv", "--out", tmp_path / "s") == 0
    lam = read_vector(tmp_path / "s/lambda_star.csv")
    np.testing.assert_allclose(lam, [5.0, 1.05 * 5.0], rtol=1e-15)


def test_scales_match_oracle(blobs, tmp_path):
    assert run("scales", "--data", blobs / "g/data.csv", "--out", tmp_path / "s") == 0
    X = read_matrix(blobs / "g/data.csv").T
    D = pairwise_distances(X)
    merges = np.sort(union_find_merges(D))
    deaths = read_vector(tmp_path / "s/deaths.csv")
    np.testing.assert_allclose(np.sort(deaths)[: merges.size], merges, rtol=1e-12)
    text = (tmp_path / "s/lambda_star.csv").read_text()
    assert text.startswith("#") and "data.csv" in text


def test_scales_margin_forwarded(tmp_path):
    write_matrix(tmp_path / "x.csv", np.array([[0.0], [2.0]]))
    assert run("scales", "--data", tmp_path / "x.csv", "--margin", 0.5, "--out", tmp_path / "s") == 0
    assert read_vector(tmp_path / "s/lambda_star.csv")[-1] == pytest.approx(3.0)


# --------------------------------------------------------------- factorize

def test_factorize_run_layout(blobs):
    r = blobs / "r"
    scales = read_vector(r / "scales.csv")
    assert len(list(r.glob("H_*.csv"))) == scales.size == len(list(r.glob("W_*.csv")))
    H1 = read_matrix(r / "H_0001.csv")
    assert H1.shape == (18, 5)  # samples x d, clustering preset d = ceil(sqrt(n))
    trace = read_matrix(r / "objective_trace.csv")
    assert trace.shape[1] == 4 and trace[0, 1] == 0
    assert np.all(np.diff(trace[:, 3]) <= 1e-12 * np.abs(trace[:-1, 3]))
    m = json.loads((r / "manifest.json").read_text())
    assert m["config"]["d"] in (None, 5) and "outputs" in m and "manifest.json" not in m["outputs"]


def test_factorize_csv_roundtrip_exact(tmp_path):
    M = np.random.default_rng(3).uniform(size=(4, 3)) * 10.0 ** np.arange(-5, 7, 3)[:, None]
    write_matrix(tmp_path / "m.csv", M, header="test")
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), M)


def test_no_geom_equals_lambda1_zero(blobs, tmp_path):
    common = ["factorize", "--data", blobs / "g/data.csv", "--d", 2, "--max-outer", 2, "--max-scales", 4]
    assert run(*common, "--no-geom", "--out", tmp_path / "a") == 0
    assert run(*common, "--lambda1", 0, "--out", tmp_path / "b") == 0
    for f in ("H_0002.csv", "W_0003.csv", "objective_trace.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_presets_recorded(blobs, tmp_path):
    assert run("factorize", "--data", blobs / "g/data.csv", "--preset", "simulation", "--max-outer", 1,
               "--max-scales", 3, "--out", tmp_path / "r") == 0
    cfg = json.loads((tmp_path / "r/manifest.json").read_text())["config"]
    assert (cfg["lambda1"], cfg["lambda2"], cfg["lambda3"], cfg["d"]) == (100, 100, 1, 2)


def test_negative_data_exit_1(tmp_path, capsys):
    write_matrix(tmp_path / "x.csv", np.array([[1.0, 2.0], [-0.5, 1.0], [2.0, 2.0]]))
    assert run("factorize", "--data", tmp_path / "x.csv", "--out", tmp_path / "r") == 1
    assert "negative" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path, capsys):
    assert run("factorize", "--data", tmp_path / "nope.csv", "--out", tmp_path / "r") == 2
    assert "nope.csv" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("1,2\n3,4\n5,abc\n")
    assert run("scales", "--data", tmp_path / "x.csv", "--out", tmp_path / "s") == 2
    assert "x.csv:3" in capsys.readouterr().err


# ---------------------------------------------------------------- evaluate

def test_evaluate_blocks(blobs, capsys):
    capsys.readouterr()
    assert run("evaluate", "--run", blobs / "r", "--labels", blobs / "g/labels.csv") == 0
    out = capsys.readouterr().out
    blocks = [dict(l.split("=", 1) for l in b.splitlines()) for b in out.strip().split("\n\n")]
    scale = [b for b in blocks if b["record"] == "scale"]
    best = [b for b in blocks if b["record"] == "best"]
    inc = [b for b in blocks if b["record"] == "increment"]
    n_scales = read_vector(blobs / "r/scales.csv").size
    assert len(scale) == n_scales and len(best) == 1 and len(inc) == n_scales - 1
    means = [float(b["mean"]) for b in scale]
    assert int(best[0]["scale_index"]) == int(np.argmax(means)) + 1
    assert float(best[0]["accuracy"]) == 1.0


def test_evaluate_json(blobs, tmp_path):
    assert run("evaluate", "--run", blobs / "r", "--labels", blobs / "g/labels.csv", "--json",
               "--out", tmp_path / "e.json") == 0
    o = json.loads((tmp_path / "e.json").read_text())
    assert set(o) >= {"scales", "best", "correlations", "increments"}
    assert len(o["increments"]) == len(o["scales"]) - 1


def test_evaluate_label_mismatch(blobs, tmp_path):
    (tmp_path / "l.csv").write_text("0\n1\n")
    assert run("evaluate", "--run", blobs / "r", "--labels", tmp_path / "l.csv") == 1


# ------------------------------------------------------------------ verify

def test_verify_single_check(blobs, capsys):
    capsys.readouterr()
    assert run("verify", "--run", blobs / "r", "--checks", "spectral", "--json") == 0
    reports = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in reports] == ["spectral"]


def test_verify_corrupted_trace_exit_1(blobs, tmp_path):
    T = read_matrix(blobs / "r/objective_trace.csv")
    T[5, 3] = T[4, 3] * 2.0
    write_matrix(tmp_path / "t.csv", T)
    assert run("verify", "--run", blobs / "r", "--trace", tmp_path / "t.csv", "--checks", "solver") == 1


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "pnmf.cli", "gen", "--generator", "blobs", "--k", "2",
                          "--n-per", "3", "--dim", "2", "--out", str(tmp_path / "g")],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert read_matrix(tmp_path / "g/data.csv").shape == (6, 2)
