import json
from pathlib import Path

import pytest

from vmra.cli import main
from vmra.config import load_config, normalized_json

REPO_CONFIG = Path(__file__).parent.parent / "configs" / "default.json"


def write_config(tmp_path, **overrides):
    doc = {"params": overrides} if overrides else {}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestValidate:
    def test_shipped_default_config(self, capsys):
        rc = main(["validate", "--config", str(REPO_CONFIG)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "warning" not in out

    def test_builtin_defaults(self, capsys):
        assert main(["validate"]) == 0
        assert "ok" in capsys.readouterr().out

    def test_unreachable_qos_fails(self, tmp_path, capsys):
        rc = main(["validate", "--config", write_config(tmp_path, t_qos=0.0)])
        assert rc == 1
        assert "t_qos" in capsys.readouterr().err

    def test_soft_warning_only(self, tmp_path, capsys):
        rc = main(["validate", "--config",
                   write_config(tmp_path, r_operating=100.0)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "warning" in out

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"params": {', encoding="utf-8")
        rc = main(["validate", "--config", str(path)])
        err = capsys.readouterr().err
        assert rc == 2
        assert "line" in err and "column" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text('{"parms": {}}', encoding="utf-8")
        assert main(["validate", "--config", str(path)]) == 1

    def test_normalized_round_trip(self, tmp_path, capsys):
        rc = main(["validate", "--config", str(REPO_CONFIG),
                   "--print-normalized"])
        assert rc == 0
        text = capsys.readouterr().out
        echoed = tmp_path / "echo.json"
        echoed.write_text(text, encoding="utf-8")
        original = load_config(REPO_CONFIG)
        reloaded = load_config(echoed)
        assert reloaded == original
        assert normalized_json(reloaded) == normalized_json(original)


class TestHeuristicCommand:
    def test_split_summary(self, capsys):
        rc = main(["heuristic", "--users", "43", "--zone-count", "1"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "alpha=2 U=[22,21] Max_M=43" in out

    def test_zero_users(self, capsys):
        rc = main(["heuristic", "--users", "0"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "alpha=0" in out and "Max_M=0" in out

    def test_saturation(self, capsys):
        rc = main(["heuristic", "--users", "1000", "--zone-count", "1"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "Max_M=462" in out

    def test_arrival_csv(self, tmp_path, capsys):
        target = tmp_path / "arrivals.csv"
        rc = main(["heuristic", "--users", "5", "--csv", str(target)])
        assert rc == 0
        rows = target.read_text(encoding="utf-8").splitlines()
        assert rows[0] == "arrival,decision,phase,alpha,v_max,response_ms"
        assert len(rows) == 6


class TestSolveCommand:
    def test_single_mixer(self, capsys):
        rc = main(["solve", "--users", "10"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "objective=2.0 partition=[10]" in out

    def test_split(self, capsys):
        rc = main(["solve", "--users", "43"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "objective=2.511628 partition=[22,21]" in out

    def test_infeasible_names_response_budget(self, tmp_path, capsys):
        rc = main(["solve", "--users", "40", "--config",
                   write_config(tmp_path, t_qos=50.0)])
        err = capsys.readouterr().err
        assert rc == 3
        assert "response-time" in err or "response" in err

    def test_infeasible_names_capacity(self, tmp_path, capsys):
        rc = main(["solve", "--users", "30", "--config",
                   write_config(tmp_path, servers_per_zone=1, r_capacity=900.0)])
        err = capsys.readouterr().err
        assert rc == 3
        assert "capacity" in err


class TestExportCommand:
    def test_writes_lp_file(self, tmp_path, capsys):
        target = tmp_path / "instance.lp"
        rc = main(["export-lp", "--users", "3", "--out", str(target)])
        assert rc == 0
        text = target.read_text(encoding="utf-8")
        assert text.startswith("Minimize")
        assert text.rstrip().endswith("End")

    def test_byte_stable_across_runs(self, tmp_path):
        a, b = tmp_path / "a.lp", tmp_path / "b.lp"
        assert main(["export-lp", "--users", "7", "--out", str(a)]) == 0
        assert main(["export-lp", "--users", "7", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_target(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        target = blocker / "under-a-file.lp"
        assert main(["export-lp", "--users", "3", "--out", str(target)]) == 4


class TestExperimentCommand:
    def test_max_users_outputs(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"scenario": {"zone_range": [1, 2]}}),
                       encoding="utf-8")
        out_dir = tmp_path / "out"
        rc = main(["experiment", "--config", str(cfg),
                   "--scenario", "max-users", "--out", str(out_dir)])
        assert rc == 0
        assert (out_dir / "fig4.csv").exists()
        assert (out_dir / "fig4.svg").exists()

    def test_meet_by_all_outputs(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"scenario": {"zone_range": [1]}}),
                       encoding="utf-8")
        out_dir = tmp_path / "out"
        rc = main(["experiment", "--config", str(cfg),
                   "--scenario", "meet-by-all", "--out", str(out_dir)])
        assert rc == 0
        for name in ("fig6.csv", "fig6.svg", "fig7.svg"):
            assert (out_dir / name).exists()

    def test_meet_by_some_outputs(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"scenario": {"zone_range": [1]}}),
                       encoding="utf-8")
        out_dir = tmp_path / "out"
        rc = main(["experiment", "--config", str(cfg),
                   "--scenario", "meet-by-some", "--out", str(out_dir)])
        assert rc == 0
        text = (out_dir / "fig8.csv").read_text(encoding="utf-8")
        assert "violation_ratio" in text.splitlines()[0]
        assert (out_dir / "fig9.svg").exists()

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"scenario": {"zone_range": [1]}}),
                       encoding="utf-8")
        rc = main(["experiment", "--config", str(cfg), "--scenario",
                   "max-users", "--out", str(blocker / "nested")])
        assert rc == 4

    def test_unknown_scenario_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["experiment", "--scenario", "nonsense"])
        assert exc.value.code == 2
