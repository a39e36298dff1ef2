import json
import math
import os
import pathlib
import subprocess
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[2] / "python"))
import snnc  # noqa: E402


def test_worked_example():
    for phi, emitted, residual in [(1, 3.0, 1.0), (2, 4.0, 0.0)]:
        v = np.zeros(1, dtype=np.float32)
        total = 0.0
        for current in (1.5, 1.5, 1.0):
            e, v = snnc.step(v, np.array([current], dtype=np.float32), snnc.LayerConfig(1.0, phi=phi))
            total += float(e[0])
        assert total == emitted
        assert float(v[0]) == residual


def test_formulas():
    assert snnc.clip_floor(1.3, 4, 2.0, 1) == pytest.approx(1.0)
    assert snnc.clip_floor(3.0, 2, 1.0, 2) == pytest.approx(2.0)
    assert snnc.entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert snnc.confidence([math.log(9.0), 0.0]) == pytest.approx(0.531, abs=1e-3)
    assert snnc.kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert snnc.energy(1e6, 1e-12) == pytest.approx(1e-3)
    alpha = snnc.exit_boundaries([1.5, 1.0], 0.7, 0.2, 0.5)
    assert alpha[1] == pytest.approx(0.9)
    assert alpha[0] == pytest.approx(0.7 + 0.2 * math.exp(-1.0))


def test_pareto_search():
    table = "layer,candidate,kind,S,E,N\n0,1,phi,1,1,8\n0,2,phi,0.2,3,8\n"
    assert snnc.pareto_search(table, 2.0)["values"] == [1]
    assert snnc.pareto_search(table, 3.0)["values"] == [2]


def test_config_validation():
    cfg = json.loads(snnc.default_config())
    assert cfg["timesteps"] == 4
    with pytest.raises(snnc.SnncError):
        snnc.check_config('{"timestep": 4}')


@pytest.mark.skipif("SNNC_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_artifacts_load(tmp_path):
    cli = os.environ["SNNC_CLI"]
    config = {
        "dataset": {"samples": 300, "classes": 3, "sample_shape": [4], "test_count": 100},
        "model": {"hidden": [12], "epochs": 5},
        "calibration_samples": 64,
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    for cmd in ("train", "convert"):
        subprocess.run([cli, cmd, "--config", str(tmp_path / "config.json"), "--out", str(tmp_path)], check=True)
    model = snnc.load_model(str(tmp_path / "converted.snnc"))
    configs = snnc.load_configs(str(tmp_path / "snn_config.json"))
    assert len(configs) == model.spiking_layers == 1
    batch = np.random.default_rng(0).normal(size=(5, 4)).astype(np.float32)
    logits = model.forward(batch)
    assert logits.shape == (5, 3)
    result = snnc.run_snn(model, configs, batch, 4)
    assert result["scores"].shape == (5, 3)
    assert result["spike_count"] == sum(result["layer_spikes"])
