import csv
import json

import numpy as np
import pytest

from qgan.cli import build_models, main, price_reports, worker_count
from qgan.config import (
    ConfigError,
    RunConfig,
    benchmark_preset,
    derived_seeds,
    multivariate_preset,
    presets,
    pricing_preset,
)
from qgan.generator import GeneratorModel


def tiny_config(tmp_path, **training):
    cfg = benchmark_preset("lognormal", "uniform", 1)
    cfg.target.samples = 400
    cfg.training.epochs = 2
    cfg.training.batch_size = 200
    cfg.training.shots = 200
    cfg.training.gradient_shots = 400
    cfg.training.ks_samples = 100
    for k, v in training.items():
        setattr(cfg.training, k, v)
    cfg.seeds = [0, 1]
    path = tmp_path / "cfg.json"
    cfg.save(path)
    return cfg, path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_roundtrip_for_every_preset():
    for name, cfg in presets().items():
        assert RunConfig.from_json(cfg.to_json()) == cfg, name


def test_preset_grid_complete():
    names = presets()
    for target in ("lognormal", "triangular", "bimodal"):
        for init in ("uniform", "normal", "random"):
            for k in (1, 2, 3):
                assert f"{target}-{init}-k{k}" in names
    assert pricing_preset().target.truncation == "rounded"
    assert multivariate_preset().generator.registers == [3, 3]


def test_quick_variant():
    cfg = benchmark_preset("bimodal", "uniform", 3).quick()
    assert cfg.seeds == [0, 1] and cfg.training.epochs == 300
    assert cfg.training.lr_generator == cfg.training.lr_discriminator == 1e-3
    assert multivariate_preset().quick().training.lr_discriminator == 1e-3


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"trainin": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"generator": {"init": "gaussian"}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"training": {"lr_generator": -1}})
    with pytest.raises(ConfigError):
        RunConfig.from_json("{not json")


def test_derived_seeds_stable_and_distinct():
    a = derived_seeds(3)
    assert a == derived_seeds(3)
    assert len(set(a.values())) == 4
    assert a != derived_seeds(4)


def test_train_writes_artifacts(tmp_path):
    _, path = tiny_config(tmp_path)
    assert main(["train", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
    run = tmp_path / "out" / "lognormal-uniform-k1"
    for seed in (0, 1):
        d = run / f"seed{seed}"
        for f in ("generator.json", "discriminator.json", "trace.csv", "metrics.json", "target.csv", "config.json"):
            assert (d / f).exists()
        assert len(read_rows(d / "trace.csv")) == 2
    rows = read_rows(run / "aggregate.csv")
    assert list(rows[0]) == ["cell", "runs", "mu_ks", "sigma_ks", "n_accepted", "mu_re", "sigma_re"]
    assert rows[0]["runs"] == "2"


def test_train_is_byte_reproducible(tmp_path):
    _, path = tiny_config(tmp_path)
    main(["train", "--config", str(path), "--seed", "3", "--out", str(tmp_path / "a")])
    main(["train", "--config", str(path), "--seed", "3", "--out", str(tmp_path / "b")])
    rel = "lognormal-uniform-k1/seed3/trace.csv"
    assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_zero_epochs_keeps_initialisation(tmp_path):
    cfg, path = tiny_config(tmp_path, epochs=0)
    main(["train", "--config", str(path), "--seed", "0", "--out", str(tmp_path / "o")])
    saved = GeneratorModel.load(tmp_path / "o" / "lognormal-uniform-k1" / "seed0" / "generator.json")
    _, gen, _ = build_models(cfg, 0)
    assert np.array_equal(saved.theta, gen.theta)


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"generator": {"k": -1}}))
    assert main(["train", "--config", str(bad)]) != 0
    assert "error" in capsys.readouterr().err
    assert main(["train", "--config", str(tmp_path / "missing.json")]) != 0
    assert main(["train", "--preset", "no-such-preset"]) != 0


def test_sweep_aggregates_cells(tmp_path, monkeypatch):
    _, path = tiny_config(tmp_path)
    other = RunConfig.load(path)
    other.name = "second"
    other.generator.k = 2
    other.save(tmp_path / "second.json")
    monkeypatch.setenv("QGAN_WORKERS", "1")
    assert main(["sweep", "--config", str(path), "--config", str(tmp_path / "second.json"),
                 "--out", str(tmp_path / "s")]) == 0
    rows = read_rows(tmp_path / "s" / "sweep" / "aggregate.csv")
    assert [r["cell"] for r in rows] == ["lognormal-uniform-k1", "second"]


def test_worker_env(monkeypatch):
    monkeypatch.setenv("QGAN_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("QGAN_WORKERS", "many")
    with pytest.raises(Exception):
        worker_count()


def test_price_analytic_lognormal():
    reports = price_reports(pricing_preset(), None, 2, 8, 1024, ["analytic"])
    assert abs(reports["analytic"]["estimate"] - 1.0602) < 5e-3


def test_price_mc_and_qae_on_exact_law(tmp_path, capsys):
    assert main(["price", "--preset", "pricing-lognormal", "--method", "mc", "--method", "qae",
                 "--eval-qubits", "6", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "pricing.json").read_text())
    ref = report["qae"]["analytic_reference"]
    assert report["mc"]["samples_or_m"] == 1024
    half = (report["mc"]["ci"][1] - report["mc"]["ci"][0]) / 2
    assert 0.05 < half < 0.12
    lo, hi = report["qae"]["ci"]
    assert lo <= ref <= hi


def test_price_missing_checkpoint(tmp_path):
    assert main(["price", "--checkpoint", str(tmp_path / "none.json")]) != 0


def test_plotdata_tables(tmp_path):
    _, path = tiny_config(tmp_path)
    main(["train", "--config", str(path), "--seed", "0", "--out", str(tmp_path / "o")])
    d = tmp_path / "o" / "lognormal-uniform-k1" / "seed0"
    assert main(["plotdata", "--checkpoint", str(d / "generator.json"), "--trace", str(d / "trace.csv"),
                 "--target", str(d / "target.csv"), "--out", str(tmp_path / "plots")]) == 0
    pdf = read_rows(tmp_path / "plots" / "pdf.csv")
    assert sum(float(r["trained_probability"]) for r in pdf) == pytest.approx(1, abs=1e-6)
    assert sum(float(r["target_probability"]) for r in pdf) == pytest.approx(1, abs=1e-6)
    assert len(read_rows(tmp_path / "plots" / "loss.csv")) == 2


def test_plotdata_zero_angles_uniform(tmp_path):
    cfg, _ = tiny_config(tmp_path)
    _, gen, _ = build_models(cfg, 0)
    gen.theta[:] = 0
    gen.save(tmp_path / "g.json")
    main(["plotdata", "--checkpoint", str(tmp_path / "g.json"), "--out", str(tmp_path)])
    assert all(float(r["trained_probability"]) == pytest.approx(0.125) for r in read_rows(tmp_path / "pdf.csv"))


def test_plotdata_corrupt_file(tmp_path):
    bad = tmp_path / "g.json"
    bad.write_text("{")
    assert main(["plotdata", "--checkpoint", str(bad)]) != 0
