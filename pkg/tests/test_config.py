import json

import pytest

from vmra import ConfigError, ModelKind
from vmra.config import default_config, load_config, normalized_json


def write(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestLoadConfig:
    def test_defaults(self):
        cfg = default_config()
        assert cfg.params.t_qos == 300.0
        assert cfg.params.servers_per_zone == 3
        assert cfg.zone_range == (1, 2, 3, 4, 5, 6)
        assert cfg.models == (ModelKind.VMRA, ModelKind.MCU, ModelKind.CMCU,
                              ModelKind.FIXED_NODES)
        assert cfg.output_dir == "out"

    def test_partial_override(self, tmp_path):
        cfg = load_config(write(tmp_path, {"params": {"t_qos": 250}}))
        assert cfg.params.t_qos == 250.0
        assert cfg.params.t_int == 10.0

    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown keys"):
            load_config(write(tmp_path, {"outputs": "x"}))

    def test_unknown_param_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown keys"):
            load_config(write(tmp_path, {"params": {"tint": 5}}))

    def test_unknown_model_tag(self, tmp_path):
        doc = {"scenario": {"models": ["VMRA", "SFU"]}}
        with pytest.raises(ConfigError, match="SFU"):
            load_config(write(tmp_path, doc))

    def test_type_checks(self, tmp_path):
        with pytest.raises(ConfigError, match="num_zones"):
            load_config(write(tmp_path, {"params": {"num_zones": 1.5}}))
        with pytest.raises(ConfigError, match="t_int"):
            load_config(write(tmp_path, {"params": {"t_int": "fast"}}))

    def test_tables_parsed(self, tmp_path):
        doc = {"t_mix_table": [0, 7, 14], "r_mix_table": [0, 20, 40]}
        cfg = load_config(write(tmp_path, doc))
        assert cfg.params.t_mix_table == (0.0, 7.0, 14.0)
        assert cfg.params.r_mix_table == (0.0, 20.0, 40.0)

    def test_malformed_json_carries_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"params": ', encoding="utf-8")
        with pytest.raises(json.JSONDecodeError):
            load_config(path)


class TestNormalizedJson:
    def test_round_trip_identity(self, tmp_path):
        doc = {
            "params": {"t_qos": 280, "num_zones": 2},
            "scenario": {"zone_range": [2, 4], "models": ["VMRA", "MCU"],
                         "fixed_nodes": 2, "zone_users": [10, 20], "seed": 7},
            "output_dir": "results",
        }
        cfg = load_config(write(tmp_path, doc))
        echoed = tmp_path / "normalized.json"
        echoed.write_text(normalized_json(cfg), encoding="utf-8")
        assert load_config(echoed) == cfg
