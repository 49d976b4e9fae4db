"""Experiment configuration files and seed splitting."""

import json

import pytest

from nnadc.config import ExperimentConfig, split_seed
from nnadc.errors import ConfigError


class TestSeedSplitting:
    def test_deterministic(self):
        assert split_seed(7, "train") == split_seed(7, "train")

    def test_distinct_per_component(self):
        assert split_seed(7, "train") != split_seed(7, "mc-eval")

    def test_distinct_per_master(self):
        assert split_seed(7, "train") != split_seed(8, "train")


class TestFromDict:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        assert cfg.vdd == 1.0
        assert cfg.grid.precision_bits == 3
        assert cfg.train.total_iters == 20_000

    def test_nested_overrides(self):
        cfg = ExperimentConfig.from_dict({
            "vdd": 1.2,
            "grid": {"g_off": 1e-6, "g_on": 8e-6, "precision_bits": 4},
            "train": {"total_iters": 10, "batch_size": 8,
                      "projection_period": 2},
            "encoding": {"kind": "logarithmic"},
            "composition": [1, 1, 2],
            "seed": 42})
        assert cfg.grid.precision_bits == 4
        assert cfg.train.total_iters == 10
        assert cfg.encoding.kind == "logarithmic"
        assert cfg.composition == (1, 1, 2)

    def test_rejects_bad_field(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"train": {"no_such_field": 1}})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"vdd": -1.0})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"schema_version": 99})

    def test_from_file_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(bad)


class TestDerived:
    def test_family_reproducible(self):
        cfg = ExperimentConfig.from_dict({"seed": 9, "family_size": 20})
        a, b = cfg.family(), cfg.family()
        assert a.members == b.members
        assert len(a) == 20
        cfg2 = ExperimentConfig.from_dict({"seed": 10, "family_size": 20})
        assert cfg2.family().members != a.members

    def test_run_hash_depends_on_content(self):
        a = ExperimentConfig.from_dict({"seed": 1})
        b = ExperimentConfig.from_dict({"seed": 2})
        assert a.run_hash() != b.run_hash()

    def test_out_dir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NNADC_OUT", str(tmp_path / "alt"))
        cfg = ExperimentConfig.from_dict({})
        assert cfg.out_dir() == tmp_path / "alt"
        assert (tmp_path / "alt").is_dir()

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"vdd": 0.9, "seed": 3}))
        cfg = ExperimentConfig.from_file(path)
        assert cfg.vdd == 0.9
        assert cfg.raw == {"vdd": 0.9, "seed": 3}
