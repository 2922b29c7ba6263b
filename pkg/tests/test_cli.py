import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from volnmf import cli, datagen, reproduce

DATA = Path(__file__).parent / "data"


def read_history(path):
    with open(path, newline="") as fh:
        return [float(r["objective"]) for r in csv.DictReader(fh)]


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert cli.main(["generate", "--setting", "two-dense-rows", "--seed", "4", "--out", str(out)]) == 0
    return out


def test_generate_shape(generated):
    x = datagen.load_csv(generated / "X.csv").x
    assert x.shape == (9, 500)
    manifest = json.loads((generated / "manifest.json").read_text())
    for key in ("command", "argv", "dataset_id", "seed", "config", "outputs", "metrics", "wall_time_ms"):
        assert key in manifest


def test_generate_three_dense_rows_defaults(tmp_path):
    assert cli.main(["generate", "--setting", "three-dense-rows", "--out", str(tmp_path)]) == 0
    assert datagen.load_csv(tmp_path / "X.csv").x.shape == (9, 500)


def test_generate_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["generate", "--setting", "one-dense-row", "--seed", "1", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "X.csv").read_bytes() == (tmp_path / "b" / "X.csv").read_bytes()


def test_generate_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("VOLNMF_SEED", "1")
    assert cli.main(["generate", "--setting", "one-dense-row", "--out", str(tmp_path / "env")]) == 0
    assert cli.main(["generate", "--setting", "one-dense-row", "--seed", "1", "--out", str(tmp_path / "arg")]) == 0
    assert (tmp_path / "env" / "X.csv").read_bytes() == (tmp_path / "arg" / "X.csv").read_bytes()


def test_generate_invalid_setting(tmp_path):
    assert cli.main(["generate", "--setting", "four-dense-rows", "--out", str(tmp_path)]) == 2


def test_generate_invalid_beta(tmp_path):
    assert cli.main(["generate", "--setting", "one-dense-row", "--beta", "0.7", "--out", str(tmp_path)]) == 2


def solve_args(x, out, method="mav", *extra):
    return ["solve", "--x", str(x), "--method", method, "--k", "3", "--restarts", "1",
            "--lambda-prime", "0.01", "--max-outer", "80", "--seed", "2", "--out", str(out), *extra]


def test_solve_history_non_increasing(generated, tmp_path):
    code = cli.main(solve_args(generated / "X.csv", tmp_path))
    assert code in (0, 3)
    hist = read_history(tmp_path / "history.csv")
    assert reproduce.is_monotone(hist)
    m = datagen.load_csv(tmp_path / "M.csv").x
    h = datagen.load_csv(tmp_path / "H.csv").x
    assert m.shape == (9, 3) and h.shape == (3, 500)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["converged"] == (code == 0)


def test_solve_byte_identical(generated, tmp_path):
    for d in ("a", "b"):
        cli.main(solve_args(generated / "X.csv", tmp_path / d))
    for name in ("M.csv", "H.csv", "history.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("method", ["mvc", "mav"])
def test_solve_unregularized_sanity(generated, tmp_path, method):
    args = ["solve", "--x", str(generated / "X.csv"), "--method", method, "--k", "3",
            "--lambda-prime", "0", "--restarts", "1", "--max-outer", "50", "--out", str(tmp_path)]
    assert cli.main(args) in (0, 3)
    report = json.loads((tmp_path / "manifest.json").read_text())["metrics"]
    assert report["fit_rel"] < 1


def test_solve_not_converged_exit_code(generated, tmp_path):
    args = solve_args(generated / "X.csv", tmp_path)
    args[args.index("--max-outer") + 1] = "2"
    assert cli.main(args) == 3
    assert (tmp_path / "M.csv").exists()


def test_solve_k_too_large(generated, tmp_path):
    args = solve_args(generated / "X.csv", tmp_path)
    args[args.index("--k") + 1] = "10"
    assert cli.main(args) == 2


def test_solve_missing_file(tmp_path):
    assert cli.main(solve_args(tmp_path / "nope.csv", tmp_path)) == 2


def test_solve_malformed_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert cli.main(solve_args(bad, tmp_path / "out")) == 2


def test_rerun_reproduces(generated, tmp_path):
    cli.main(solve_args(generated / "X.csv", tmp_path / "first"))
    assert cli.main(["rerun", str(tmp_path / "first" / "manifest.json"), "--out", str(tmp_path / "again")]) in (0, 3)
    for name in ("M.csv", "H.csv", "history.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_evaluate_truth_against_itself(generated, tmp_path, capsys):
    code = cli.main(["evaluate", "--m", str(generated / "M_true.csv"), "--h", str(generated / "H_true.csv"),
                     "--x", str(generated / "X.csv"), "--m-true", str(generated / "M_true.csv"),
                     "--out", str(tmp_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["alignment"]["mean_abs_error"] == pytest.approx(0, abs=1e-12)
    assert report["metrics"]["fit_rel"] == pytest.approx(0, abs=1e-9)
    assert json.loads((tmp_path / "report.json").read_text()) == report


def test_evaluate_published_factors(tmp_path, capsys):
    pub_m = datagen.load_csv(DATA / "published_time_allocation_M.csv")
    pub_h = datagen.load_csv(DATA / "published_time_allocation_Ht.csv")
    cols = [pub_m.col_labels.index(f"mav_k{i}") for i in (1, 2, 3)]
    datagen.write_csv(pub_m.x[:, cols], tmp_path / "M.csv")
    datagen.write_csv(pub_h.x[:, cols].T, tmp_path / "H.csv")
    x = datagen.normalize_columns(datagen.load_time_allocation().x)
    datagen.write_csv(x, tmp_path / "X.csv")
    code = cli.main(["evaluate", "--m", str(tmp_path / "M.csv"), "--h", str(tmp_path / "H.csv"),
                     "--x", str(tmp_path / "X.csv")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)["metrics"]
    assert report["volume_logdet"] == pytest.approx(-4.275, abs=0.01)
    assert report["fit_rel"] < 0.1


def test_evaluate_shape_mismatch(generated, tmp_path):
    datagen.write_csv(np.ones((9, 2)), tmp_path / "M2.csv")
    code = cli.main(["evaluate", "--m", str(tmp_path / "M2.csv"), "--h", str(generated / "H_true.csv"),
                     "--x", str(generated / "X.csv")])
    assert code == 4


def test_plot_simplex(generated, tmp_path):
    out = tmp_path / "plot.svg"
    code = cli.main(["plot-simplex", "--m-est", str(generated / "M_true.csv"), "--m-true",
                     str(generated / "M_true.csv"), "--x", str(generated / "X.csv"), "--out", str(out)])
    assert code == 0
    root = ET.parse(out).getroot()
    polys = root.findall(".//{http://www.w3.org/2000/svg}polygon")
    assert sum(bool(p.get("stroke-dasharray")) for p in polys) == 1
    assert sum(not p.get("stroke-dasharray") for p in polys) <= 1


def test_plot_simplex_rank_two(generated, tmp_path):
    datagen.write_csv(np.ones((9, 2)), tmp_path / "M2.csv")
    code = cli.main(["plot-simplex", "--m-est", str(tmp_path / "M2.csv"), "--x", str(generated / "X.csv"),
                     "--out", str(tmp_path / "p.svg")])
    assert code == 4


def test_plot_simplex_needs_points(generated, tmp_path):
    code = cli.main(["plot-simplex", "--m-est", str(generated / "M_true.csv"), "--out", str(tmp_path / "p.svg")])
    assert code == 2


def test_unknown_command():
    assert cli.main(["frobnicate"]) == 2
