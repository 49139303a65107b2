import filecmp
import re

import numpy as np
import pytest

from lrtbench.cli import main
from lrtbench.io import import_dataset, read_manifest
from lrtbench.rocket import RocketModel

ERROR_LINE = re.compile(r"^error: \w+: \S.*$")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(same_tree(a / d, b / d) for d in cmp.common_dirs)


def test_generate_twice_is_identical(tmp_path, capsys):
    for name in ("g1", "g2"):
        code, out, _ = run(capsys, "generate", "--case", "a", "--setting", 1, "--seed", 7, "--paths", 100,
                           "--out", tmp_path / name)
        assert code == 0 and "digest" in out
    assert same_tree(tmp_path / "g1", tmp_path / "g2")


def test_generate_with_overrides_and_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# comment\nmodel.theta1=0.5\nsim.n_paths=40\n")
    code, _, err = run(capsys, "generate", "--case", "c", "--setting", 2, "--config", cfg,
                       "--override", "model.sigma=0.7", "--keep-fine", "--layout", "wide", "--out", tmp_path / "g")
    assert code == 0, err
    ds = import_dataset(tmp_path / "g")
    assert len(ds) == 40 and ds.dim == 2 and ds.fine is not None
    assert ds.pair.spec1.theta == (0.5,) and ds.pair.spec0.sigma == 0.7
    m = read_manifest(tmp_path / "g" / "manifest.txt")
    assert m["model.sigma"] == "0.7" and m["layout"] == "wide"


@pytest.mark.parametrize("override", ["model.bogus=1", "sim.nothing=3", "noequals", "model.theta1=abc"])
def test_bad_override_is_single_line_error(tmp_path, capsys, override):
    code, out, err = run(capsys, "generate", "--case", "a", "--override", override, "--out", tmp_path / "x")
    assert code != 0
    lines = err.strip().splitlines()
    assert len(lines) == 1 and ERROR_LINE.match(lines[0])


def test_lrt_hidden_requires_fine(tmp_path, capsys):
    run(capsys, "generate", "--case", "a", "--paths", 40, "--out", tmp_path / "g")
    code, _, err = run(capsys, "lrt", "--data", tmp_path / "g", "--mode", "hidden", "--out", tmp_path / "l")
    assert code == 1 and ERROR_LINE.match(err.strip()) and "fine" in err
    code, out, _ = run(capsys, "lrt", "--data", tmp_path / "g", "--mode", "exact", "--out", tmp_path / "l")
    assert code == 0 and "AUC" in out
    assert (tmp_path / "l" / "scores_lrt-exact.csv").exists()
    m = read_manifest(tmp_path / "l" / "manifest.txt")
    assert 0.0 <= float(m["metric.auc"]) <= 1.0


def test_lrt_exact_unavailable_for_nonlinear(tmp_path, capsys):
    run(capsys, "generate", "--case", "b", "--paths", 20, "--out", tmp_path / "g")
    code, _, err = run(capsys, "lrt", "--data", tmp_path / "g", "--mode", "exact", "--out", tmp_path / "l")
    assert code == 1 and ERROR_LINE.match(err.strip())


def test_rocket_command(tmp_path, capsys):
    run(capsys, "generate", "--case", "a", "--paths", 80, "--out", tmp_path / "g")
    code, out, err = run(capsys, "rocket", "--data", tmp_path / "g", "--kernels", 50, "--runs", 2,
                         "--out", tmp_path / "r")
    assert code == 0, err
    assert (tmp_path / "r" / "auc_runs.csv").exists()
    model = RocketModel.load(tmp_path / "r" / "rocket_run0.npz")
    assert len(model.kernels) == 50


def test_bench_report_round_trip_with_external_scores(tmp_path, capsys):
    code, out, err = run(capsys, "bench", "--case", "a", "--setting", 1, "--runs", 2, "--seed", 7, "--paths", 80,
                         "--kernels", 50, "--classifiers", "lrt-numerical,rocket", "--out", tmp_path / "b")
    assert code == 0, err and "rocket" in out
    run(capsys, "generate", "--case", "a", "--seed", 7, "--paths", 80, "--out", tmp_path / "g")
    run(capsys, "lrt", "--data", tmp_path / "g", "--mode", "exact", "--out", tmp_path / "l")
    code, out, err = run(capsys, "report", "--in", tmp_path / "b", "--out", tmp_path / "r",
                         "--scores", tmp_path / "l" / "scores_lrt-exact.csv", "--data", tmp_path / "g")
    assert code == 0, err
    assert "external:lrt-exact" in out
    assert (tmp_path / "r" / "roc_external_lrt-exact.csv").exists()


def test_report_rejects_foreign_dataset(tmp_path, capsys):
    run(capsys, "bench", "--case", "a", "--runs", 1, "--paths", 40, "--classifiers", "lrt-numerical",
        "--out", tmp_path / "b")
    run(capsys, "generate", "--case", "a", "--seed", 3, "--paths", 40, "--out", tmp_path / "g")
    run(capsys, "lrt", "--data", tmp_path / "g", "--mode", "numerical", "--out", tmp_path / "l")
    code, _, err = run(capsys, "report", "--in", tmp_path / "b", "--out", tmp_path / "r",
                       "--scores", tmp_path / "l" / "scores_lrt-numerical.csv", "--data", tmp_path / "g")
    assert code == 1 and "digest" in err


def test_sweep_command(tmp_path, capsys):
    code, out, err = run(capsys, "sweep", "--kind", "time-length", "--values", "1,2", "--case", "a", "--runs", 1,
                         "--classifiers", "numerical", "--override", "sim.n_paths=60", "--out", tmp_path / "s")
    assert code == 0, err
    text = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert text[0] == "value,classifier,auc_median,acc_star_median" and len(text) == 3
    assert (tmp_path / "s" / "time-length_2" / "summary.csv").exists()


def test_analytic_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "analytic", "--family", "bm", "--out", tmp_path / "a")
    assert code == 0 and "acc_star=0.691462" in out
    rates = np.loadtxt(tmp_path / "a" / "bm_rates.csv", delimiter=",", skiprows=1)
    mid = rates[np.isclose(rates[:, 0], 0.5)][0]
    assert mid[1] == pytest.approx(0.3085, abs=1e-4)
    code, out, _ = run(capsys, "analytic", "--family", "ou", "--samples", 1000, "--out", tmp_path / "o")
    assert code == 0 and "alpha0" in out
    m = read_manifest(tmp_path / "o" / "manifest.txt")
    assert m["model.family"] == "ou" and "result.alpha1" in m


def test_writes_only_inside_out(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    run(capsys, "generate", "--case", "a", "--paths", 20, "--out", "o")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["o"]
