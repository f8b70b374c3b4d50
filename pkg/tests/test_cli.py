import json

import numpy as np
import pytest

from ssl_lab import io
from ssl_lab.cli import main
from ssl_lab.config import ConfigError, RunConfig, apply_override, parse_overrides
from ssl_lab.graph import HardThreshold, build_weight_matrix

SMALL_GRID = ["--set", "grid.alpha_values=[1,4]", "--set", "grid.eps_over_tau2_values=[0.01,0.5]"]


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run("gen-data", "--seed", 1, "-o", out) == 0
    return out


def write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return path


# -- io ---------------------------------------------------------------------------------

def test_points_and_truth_round_trip(tmp_path, mixture):
    io.write_points(tmp_path / "p.csv", mixture.cloud)
    io.write_truth(tmp_path / "t.csv", mixture)
    back = io.load_mixture(tmp_path / "p.csv", tmp_path / "t.csv")
    assert back.cloud.points.tobytes() == mixture.cloud.points.tobytes()
    np.testing.assert_array_equal(back.clusters, mixture.clusters)
    np.testing.assert_array_equal(back.binary_truth, mixture.binary_truth)
    assert back.n_clusters == 3


def test_csv_dialect(tmp_path):
    io.write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1), (2, float("nan"))])
    raw = (tmp_path / "x.csv").read_bytes()
    assert b"\r" not in raw
    assert raw == b"a,b\n1,0.1\n2,nan\n"


def test_labels_and_weights(tmp_path, mixture):
    io.write_labels(tmp_path / "l.csv", [3, 7], [1, -1])
    idx, vals = io.read_labels(tmp_path / "l.csv")
    assert idx.tolist() == [3, 7] and vals.tolist() == [1, -1]
    g = build_weight_matrix(mixture.cloud, HardThreshold(0.25))
    io.write_weights(tmp_path / "w.csv", g)
    _, rows = io.read_csv(tmp_path / "w.csv")
    assert len(rows) == int(np.count_nonzero(np.triu(g.weights, 1)))


def test_bad_truth_header(tmp_path):
    (tmp_path / "t.csv").write_text("a,b,c\n0,0,1\n")
    with pytest.raises(ValueError):
        io.read_truth(tmp_path / "t.csv")


# -- config -----------------------------------------------------------------------------

def test_config_defaults_and_round_trip():
    cfg = RunConfig.from_mapping({})
    assert cfg.noise.gamma == 0.5
    assert RunConfig.from_mapping(cfg.to_dict()) == cfg


def test_overrides():
    pairs = parse_overrides(["grid.gamma=0.3", "noise.family=gaussian", "study.label_counts=[3,1,1]"])
    assert pairs[0] == ("grid.gamma", 0.3)
    assert pairs[1] == ("noise.family", "gaussian")
    raw = {}
    for k, v in pairs:
        raw = apply_override(raw, k, v)
    cfg = RunConfig.from_mapping(raw)
    assert cfg.grid.gamma == 0.3 and cfg.study.label_counts == (3, 1, 1)
    with pytest.raises(ConfigError):
        parse_overrides(["gamma"])


@pytest.mark.parametrize("raw", [{"bogus": {}}, {"cell": {"beta": 1}}, {"solver": {"method": "cg"}},
                                 {"noise": {"gamma": -1}}, {"grid": {"alpha_values": [0]}},
                                 {"dataset": {"points": "p.csv"}}])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(raw)


# -- commands -----------------------------------------------------------------------------

def test_gen_data(dataset):
    header, rows = io.read_csv(dataset / "points.csv")
    assert header == ["x0", "x1", "x2"] and len(rows) == 150
    assert (dataset / "truth.csv").exists()
    manifest = json.loads((dataset / "manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["status"] == "ok"
    assert {"numpy", "scipy", "ssl_lab"} <= set(manifest["versions"])
    assert "wall_time_s" in manifest


@pytest.mark.parametrize("command", ["probit", "onehot"])
def test_solve_from_generated_data(tmp_path, dataset, command):
    cfg = write_config(tmp_path / "cell.json", {
        "dataset": {"points": str(dataset / "points.csv"), "truth": str(dataset / "truth.csv")},
        "cell": {"alpha": 2, "eps_over_tau2": 0.01, "tau": 0.1}})
    assert run(command, "--config", cfg, "-o", tmp_path / "out") == 0
    sol = json.loads((tmp_path / "out" / "solution.json").read_text())
    assert len(sol["labels"]) == 150
    assert sol["misclassification_rate"] == 0.0
    assert sol["diagnostics"]["iterations"] >= 1


def test_sampled_labels_and_label_file(tmp_path):
    assert run("probit", "-o", tmp_path / "a", "--set", "labels.mode=sampled",
               "--set", "labels.counts=[2,2,2]") == 0
    sol = json.loads((tmp_path / "a" / "solution.json").read_text())
    assert len(sol["observed"]["indices"]) == 6
    io.write_labels(tmp_path / "l.csv", [0, 60, 120], [0, 1, 2])
    assert run("onehot", "-o", tmp_path / "b", "--set", "labels.mode=file",
               "--set", f"labels.file={tmp_path / 'l.csv'}") == 0


def test_sweep_outputs_and_manifest(tmp_path):
    assert run("sweep", "-o", tmp_path, "--seed", 4, *SMALL_GRID) == 0
    header, rows = io.read_csv(tmp_path / "heatmap.csv")
    assert header == ["alpha", "eps_over_tau2", "tau2", "rate"]
    assert len(rows) == 4
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["seed"] == 4
    assert {"key": "grid.alpha_values", "value": [1, 4]} in m["overrides"]
    assert m["config"]["grid"]["alpha_values"] == [1, 4]


def test_byte_identical_reruns(tmp_path, monkeypatch):
    for name, threads in (("a", "1"), ("b", "3")):
        monkeypatch.setenv("SSL_LAB_THREADS", threads)
        assert run("sweep", "-o", tmp_path / name, "--set", "grid.method=onehot", *SMALL_GRID) == 0
        assert run("success-prob", "-o", tmp_path / name, "--set", "study.trials=6", *SMALL_GRID) == 0
    for f in ("heatmap.csv", "success.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["threads"] == 3


def test_spectrum_command(tmp_path):
    assert run("spectrum", "-o", tmp_path, "--set", "spectrum.eps_values=[0,0.001]") == 0
    header, rows = io.read_csv(tmp_path / "spectrum.csv")
    assert header == ["epsilon", "tau2", "alpha", "k", "sigma_k", "lambda_k"]
    assert len(rows) == 2 * 6
    assert (tmp_path / "spectral_diagnostics.csv").exists()


def test_balance_command(tmp_path):
    assert run("balance", "-o", tmp_path, "--set", "study.label_counts=[3,1,1]", *SMALL_GRID) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["label_counts"] == [3, 1, 1]


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("sweep", "--config", bad, "-o", tmp_path / "o") == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "config"
    assert run("sweep", "-o", tmp_path / "o", "--set", "grid.unknown=1") == 2
    assert run("sweep", "-o", tmp_path / "o", "--threads", 0) == 2


def test_solver_failure_exit_code(tmp_path):
    code = run("probit", "-o", tmp_path, "--set", "solver.method=reduced", "--set", "cell.alpha=10",
               "--set", "cell.tau=0.01", "--set", "labels.counts=[3,3,3]")
    assert code == 3
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["partial"] is True and m["status"] == "solver_failure"


def test_failed_sweep_cells_flagged(tmp_path):
    code = run("sweep", "-o", tmp_path, "--set", "grid.rank=null", "--set", "grid.alpha_values=[8]",
               "--set", "grid.eps_over_tau2_values=[0.01]", "--set", "grid.tau_values=[0.01]",
               "--set", "grid.label_counts=[3,3,3]")
    assert code == 3
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["partial"] is True and len(m["failed_cells"]) == 1
    assert (tmp_path / "heatmap.csv").exists()
