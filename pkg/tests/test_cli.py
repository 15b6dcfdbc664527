from __future__ import annotations

import json

import pytest

from toyworlds.cli import main
from toyworlds.datapipe import scripted_expert
from toyworlds.netproto import write_trajectory
from toyworlds.worlds import registry_list


@pytest.fixture(scope="module")
def recorded_trajectory(tmp_path_factory):
    task = next(t for t in registry_list("harvest")
                if t.task_id == "harvest:grove_a:collect-wood")
    traj = scripted_expert(task, 0)
    path = tmp_path_factory.mktemp("cli") / "episode.mwtj"
    write_trajectory(traj, path)
    return path


class TestReplayCommand:
    def test_replay_ok(self, recorded_trajectory, capsys):
        code = main(["replay", "--trajectory", str(recorded_trajectory)])
        out = capsys.readouterr().out
        assert code == 0
        assert "bit-exact" in out

    def test_replay_missing_file_is_config_error(self, capsys):
        code = main(["replay", "--trajectory", "/nonexistent/episode.mwtj"])
        assert code == 1

    def test_replay_divergence_is_runtime_error(self, recorded_trajectory,
                                                tmp_path, capsys):
        data = bytearray(recorded_trajectory.read_bytes())
        # toggle W in the first action record's key mask
        marker = data.find(b"TW\x01\x04")
        data[marker + 8] ^= 0x01
        bad = tmp_path / "tampered.mwtj"
        bad.write_bytes(bytes(data))
        code = main(["replay", "--trajectory", str(bad)])
        assert code == 2


class TestCollectCommand:
    def test_collect_small(self, tmp_path, capsys):
        code = main(["collect", "--out", str(tmp_path / "data"), "--seeds", "1",
                     "--worlds", "playroom", "--stride", "8"])
        out = capsys.readouterr().out
        assert code == 0
        assert (tmp_path / "data" / "manifest.json").exists()
        assert "examples" in out

    def test_empty_world_list_is_config_error(self, tmp_path):
        code = main(["collect", "--out", str(tmp_path / "d"), "--seeds", "0",
                     "--worlds", "playroom"])
        assert code == 1  # zero seeds -> no tasks collected


class TestReportCommand:
    def test_report_regeneration_is_byte_identical(self, tmp_path, capsys):
        from toyworlds.evalharness.ablation import EvalReport

        report = EvalReport(
            version=1, conditions=[], skipped=[], per_task=[],
            per_environment={"multiworld": {"playroom": {
                "rate": 0.5, "ci95": 0.1, "lo": 0.4, "hi": 0.6, "n": 10}}},
            per_skill={}, relative={}, p_values={}, episode_seeds=[20])
        src = tmp_path / "in"
        src.mkdir()
        (src / "report.json").write_text(report.to_json())
        out1 = tmp_path / "out1"
        out2 = tmp_path / "out2"
        assert main(["report", "--in", str(src / "report.json"),
                     "--out", str(out1)]) == 0
        assert main(["report", "--in", str(src / "report.json"),
                     "--out", str(out2)]) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        chart1 = (out1 / "charts" / "success_by_environment.svg").read_bytes()
        chart2 = (out2 / "charts" / "success_by_environment.svg").read_bytes()
        assert chart1 == chart2

    def test_missing_input_is_config_error(self, tmp_path):
        assert main(["report", "--in", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 1


class TestEvalCommand:
    def test_missing_checkpoint_condition_skipped(self, tmp_path, capsys):
        conditions = {"conditions": [{
            "family": "multiworld", "name": "mw-s0",
            "checkpoint": str(tmp_path / "missing.mwck")}]}
        cond_path = tmp_path / "conditions.json"
        cond_path.write_text(json.dumps(conditions))
        code = main(["eval", "--conditions", str(cond_path),
                     "--out", str(tmp_path / "report"), "--worlds", "playroom"])
        out = capsys.readouterr().out
        assert code == 0
        assert "skipped" in out
        doc = json.loads((tmp_path / "report" / "report.json").read_text())
        assert doc["skipped"][0]["reason"] == "missing checkpoint"


class TestParser:
    def test_no_command_shows_help(self, capsys):
        assert main([]) == 1

    def test_subcommands_registered(self):
        from toyworlds.cli import build_parser

        parser = build_parser()
        text = parser.format_help()
        for sub in ("serve", "collect", "train", "eval", "replay", "report"):
            assert sub in text
