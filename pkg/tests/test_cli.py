import json
from pathlib import Path

import pytest
import yaml

from msbp.cli import main
from msbp.config import load_config, parse_config
from msbp.errors import ModelError
from msbp.reporting import PLOTDATA_HEADER


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _base_config(kind, experiment, n=400, dt=0.01, t=1.0):
    return {
        "model": {
            "mechanism": {"b": 1.0, "c": 1.0,
                          "jumps": {"kind": "atoms", "atoms": [[1.0, 0.5]]}},
            "offspring": [0.6, 0.0, 0.4],
            "rate": {"kind": "affine", "r": 1.0,
                     "m_table": {"name": "harmonic", "y_max": 100}},
            "z0": [1.0, 3],
        },
        "scheme": {"dt": dt, "T": t, "N": n, "seed": 11,
                   "caps": [1000.0, 100000.0]},
        "experiment": {"kind": kind, **experiment},
        "output": {"directory": "unused"},
    }


def test_config_round_trip(tmp_path):
    cfg_path = _write(tmp_path, "a.yaml",
                      _base_config("martingale",
                                   {"lambda_grid": [[1.0, 1.0]],
                                    "t_grid": [0.0, 0.5, 1.0]}))
    cfg = load_config(cfg_path)
    echo = cfg.canonical()
    again = parse_config(echo)
    assert again.canonical() == echo
    assert again.sha256() == cfg.sha256()


def test_config_rejects_unknown_keys(tmp_path):
    data = _base_config("simulate", {})
    data["scheme"]["workers"] = 4
    with pytest.raises(ModelError, match="workers"):
        parse_config(data)
    data = _base_config("simulate", {})
    data["experiment"]["zz"] = 1
    with pytest.raises(ModelError, match="zz"):
        parse_config(data)


def test_cli_rejects_single_child_offspring(tmp_path, capsys):
    data = _base_config("simulate", {})
    data["model"]["offspring"] = [0.5, 0.2, 0.3]
    path = _write(tmp_path, "bad.yaml", data)
    code = main(["simulate", path, "--out", str(tmp_path / "run")])
    assert code == 2
    assert "p_1 = 0" in capsys.readouterr().err


def test_cli_kind_mismatch_is_config_error(tmp_path):
    path = _write(tmp_path, "k.yaml", _base_config("simulate", {}))
    assert main(["extinction", path]) == 2


def test_cli_generator_check_artifacts(tmp_path):
    data = {
        "model": {
            "mechanism": {"b": 0.5, "c": 0.25},
            "offspring": [0.6, 0.0, 0.4],
            "rate": {"kind": "constant", "r": 2.0},
        },
        "scheme": {"dt": 0.01, "T": 1.0, "N": 10, "seed": 3},
        "experiment": {"kind": "generator-check",
                       "k_list": [1000, 100000]},
    }
    path = _write(tmp_path, "g.yaml", data)
    out = tmp_path / "run"
    assert main(["generator-check", path, "--check", "--out",
                 str(out)]) == 0
    results = json.loads((out / "results.json").read_text())
    assert {"provenance", "per_k", "checks"} <= set(results)
    assert results["provenance"]["seed"] == 3
    assert len(results["provenance"]["config_sha256"]) == 64
    echo = json.loads((out / "config-echo.json").read_text())
    assert parse_config(echo).sha256() is not None
    assert (out / "plotdata.csv").read_text().splitlines()[0] \
        == PLOTDATA_HEADER
    assert (out / "generator-check.png").exists()


def test_cli_thread_count_invariance(tmp_path):
    data = _base_config("martingale", {"lambda_grid": [[1.0, 1.0]],
                                       "t_grid": [0.0, 0.5, 1.0]},
                        n=600, dt=0.02)
    path = _write(tmp_path, "m.yaml", data)
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"run{threads}"
        assert main(["martingale", path, "--threads", threads, "--out",
                     str(out)]) == 0
        outs.append((out / "results.json").read_bytes())
    assert outs[0] == outs[1]


def test_cli_check_failure_exit_code(tmp_path):
    data = _base_config("extinction",
                        {"horizons": [0.5], "lambda_grid": [[0.5, 0.5]],
                         "min_joint_fraction": 1.01},  # unreachable
                        n=50, dt=0.01, t=0.5)
    path = _write(tmp_path, "e.yaml", data)
    assert main(["extinction", path, "--check", "--out",
                 str(tmp_path / "rune")]) == 3
    # without --check the same run reports success
    assert main(["extinction", path, "--out",
                 str(tmp_path / "rune2")]) == 0


def test_plotdata_series_schemas(tmp_path):
    # the three emitted series families keep their fixed schemas
    mart = _base_config("martingale", {"lambda_grid": [[1.0, 1.0]],
                                       "t_grid": [0.0, 0.5, 1.0]},
                        n=100, dt=0.02)
    sim = _base_config("simulate", {"t_grid": [0.0, 0.5, 1.0]}, n=100,
                       dt=0.02)
    coup = _base_config("coupling",
                        {"z0": [1.0, 3], "zt0": [2.0, 5],
                         "t_grid": [0.5, 1.0], "w1_times": [1.0],
                         "w1_n": 64},
                        n=100, dt=0.02)
    expected = {
        "martingale": ("residual_lam=1;1",),
        "simulate": ("moment_total", "moment_envelope"),
        "coupling": ("EF", "contraction_bound"),
    }
    for name, data in (("martingale", mart), ("simulate", sim),
                       ("coupling", coup)):
        path = _write(tmp_path, f"{name}.yaml", data)
        out = tmp_path / f"run-{name}"
        assert main([name, path, "--out", str(out)]) == 0
        lines = (out / "plotdata.csv").read_text().splitlines()
        assert lines[0] == PLOTDATA_HEADER
        series = {ln.split(",")[0] for ln in lines[1:]}
        for want in expected[name]:
            assert want in series
