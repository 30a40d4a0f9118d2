from __future__ import annotations

import json

import pytest

from probeplan.cli import main


def _run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "out")])


def _scene(scenes_dir, name):
    return str(scenes_dir / f"{name}.json")


def test_run_success_writes_artifacts(tmp_path, scenes_dir):
    assert _run(tmp_path, "run", _scene(scenes_dir, "instance15")) == 0
    out = tmp_path / "out"
    for f in ("domain.json", "problem.json", "goal_table.txt", "probe.log", "plan.json", "plan.txt",
              "transcript.txt", "report.json"):
        assert (out / f).is_file(), f
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "success" and report["probes"] == 6


def test_run_infeasible(tmp_path, scenes_dir):
    assert _run(tmp_path, "run", _scene(scenes_dir, "plastic_only")) == 4


def test_run_fault_exhausts_then_repairs(tmp_path, scenes_dir):
    scene = _scene(scenes_dir, "instance15")
    assert _run(tmp_path, "run", scene, "--fault", "place_no_inbin_effect", "--max-replans", "0") == 5
    assert "Cannot push yellow_3D_cuboid" in (tmp_path / "out" / "transcript.txt").read_text()
    assert _run(tmp_path, "run", scene, "--fault", "place_no_inbin_effect") == 0


def test_probe_then_warm_kb(tmp_path, scenes_dir, capsys):
    kb = str(tmp_path / "kb.json")
    assert _run(tmp_path, "probe", _scene(scenes_dir, "fourteen_objects"), "--kb", kb) == 0
    rep = json.loads((tmp_path / "out" / "probe_report.json").read_text())
    assert rep["probes"] == 14 and rep["correct"] == 14
    assert _run(tmp_path, "probe", _scene(scenes_dir, "fourteen_objects"), "--kb", kb) == 0
    assert "0 probes, 14 from knowledge base" in capsys.readouterr().out


def test_kb_conflict(tmp_path, scenes_dir):
    kb = tmp_path / "kb.json"
    kb.write_text(json.dumps({"version": 1, "entries": {"black_1D_line": "foldable"}}))
    assert _run(tmp_path, "run", _scene(scenes_dir, "instance15"), "--kb", str(kb)) == 3
    kb.write_text(json.dumps({"black_1D_line": "foldable"}))
    assert _run(tmp_path, "run", _scene(scenes_dir, "instance15"), "--kb", str(kb)) == 1


def test_input_errors(tmp_path):
    assert _run(tmp_path, "run", str(tmp_path / "missing.json")) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(tmp_path, "probe", str(bad)) == 1
    assert _run(tmp_path, "plan") == 1
    assert _run(tmp_path, "run", str(bad), "--max-replans", "-1") == 1


def test_replay_without_recordings_is_adapter_failure(tmp_path, scenes_dir):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert _run(tmp_path, "run", _scene(scenes_dir, "instance15"), "--adapter", "replay",
                "--transcript-dir", str(empty)) == 2


def test_plan_then_validate(tmp_path, scenes_dir):
    assert _run(tmp_path, "plan", "--scene", _scene(scenes_dir, "instance15")) == 0
    out = tmp_path / "out"
    args = ["validate", "--domain", str(out / "domain.json"), "--problem", str(out / "problem.json")]
    assert main([*args, "--plan", str(out / "plan.json"), "--out", str(tmp_path / "v1")]) == 0
    assert main([*args, "--plan", str(out / "plan.txt"), "--out", str(tmp_path / "v2")]) == 0
    assert (tmp_path / "v1" / "transcript.txt").read_text() == (tmp_path / "v2" / "transcript.txt").read_text()
    lines = (out / "plan.txt").read_text().splitlines()
    (tmp_path / "short.txt").write_text("\n".join(lines[:-1]) + "\n")
    assert main([*args, "--plan", str(tmp_path / "short.txt"), "--out", str(tmp_path / "v3")]) == 5
    assert json.loads((tmp_path / "v3" / "report.json").read_text())["goal_reached"] is False


def test_plan_infeasible(tmp_path, scenes_dir):
    assert _run(tmp_path, "plan", "--scene", _scene(scenes_dir, "plastic_only")) == 4


def test_gen_instances(tmp_path):
    assert _run(tmp_path, "gen-instances", "--count", "12", "--seed", "3") == 0
    doc = json.loads((tmp_path / "out" / "corpus.json").read_text())
    assert len(doc["instances"]) == 12
    assert _run(tmp_path, "gen-instances", "--count", "400", "--min-objs", "3", "--max-objs", "3") == 1


def test_batch_csv(tmp_path):
    corpus = tmp_path / "c.json"
    assert main(["gen-instances", "--count", "4", "--output", str(corpus)]) == 0
    assert _run(tmp_path, "batch", "--corpus", str(corpus), "--repeats", "2", "--workers", "1",
                "--adapter", "noisy", "--preset", "paper", "--no-plot") == 0
    lines = (tmp_path / "out" / "success_rate.csv").read_text().splitlines()
    assert lines[0] == "iteration,success_rate" and len(lines) == 7
    assert not (tmp_path / "out" / "success_rate.png").exists()
    assert _run(tmp_path, "batch", "--adapter", "remote", "--endpoint", "http://x") == 1


def test_help_lists_exit_codes(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    assert "knowledge-base conflict" in capsys.readouterr().out
