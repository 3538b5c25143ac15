from __future__ import annotations

import json

import pytest

from aspectsum.cli import main


def _cfg(tmp_path, source, **extra):
    d = {"source": str(source), "output_root": str(tmp_path / "out"), "classifier": {"max_epochs": 3}}
    d.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return path


def test_run_and_rerun(tmp_path, smoke_source, capsys):
    cfg = _cfg(tmp_path, smoke_source)
    assert main(["run", "--config", str(cfg)]) == 0
    assert "complete" in capsys.readouterr().out
    assert main(["run", "--config", str(cfg)]) == 0
    assert "nothing" in capsys.readouterr().out


def test_invalid_config_exit_1(tmp_path, smoke_source, capsys):
    cfg = _cfg(tmp_path, smoke_source, labeler={"alpha": 1.5})
    assert main(["run", "--config", str(cfg)]) == 1
    assert "alpha" in capsys.readouterr().err


def test_stage_failure_exit_2(tmp_path, smoke_source):
    cfg = _cfg(tmp_path, smoke_source)
    assert main(["run", "--config", str(cfg), "--summarizer-backend", "no-such"]) == 2


def test_parse_error_exit_1(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["ingest", "--source", str(tmp_path / "empty"), "--out", str(tmp_path / "c")]) == 1


def test_stepwise_commands(tmp_path, smoke_source, capsys):
    t = tmp_path
    steps = [
        ["ingest", "--source", str(smoke_source), "--out", str(t / "corpus")],
        ["stats", "--corpus", str(t / "corpus")],
        ["pseudolabel", "--corpus", str(t / "corpus"), "--alpha", "0.46", "--out", str(t / "labels"), "--cache", str(t / "cache")],
        ["build-dataset", "--labels", str(t / "labels"), "--corpus", str(t / "corpus"), "--strategy", "nofiltering", "--out", str(t / "data")],
        ["stats", "--data", str(t / "data")],
        ["train-classifier", "--data", str(t / "data"), "--out", str(t / "clf"), "--cache", str(t / "cache")],
        ["predict", "--model", str(t / "clf"), "--corpus", str(t / "corpus"), "--threshold", "0.3", "--out", str(t / "preds")],
        ["select", "--corpus", str(t / "corpus"), "--preds", str(t / "preds"), "--out", str(t / "filtered")],
        ["train-summarizer", "--data", str(t / "filtered"), "--summarizer-backend", "echo", "--out", str(t / "sum")],
        ["summarize", "--model", str(t / "sum"), "--docs", str(t / "filtered" / "test.jsonl"), "--out", str(t / "gen")],
        ["evaluate", "--summaries", str(t / "gen"), "--corpus", str(t / "corpus"), "--out", str(t / "eval" / "report.json")],
        ["oracle-filter", "--corpus", str(t / "corpus"), "--alpha", "0.4", "--out", str(t / "oracle")],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    out = capsys.readouterr().out
    assert "Irrelevant" in out and "R-1" in out
    assert (t / "eval" / "report.txt").exists()
    assert len((t / "gen" / "summaries.jsonl").read_text().splitlines()) == 4


def test_ablate_subset(tmp_path, smoke_source, capsys):
    cfg = _cfg(tmp_path, smoke_source)
    assert main(["ablate", "--config", str(cfg), "--strategies", "nofiltering,oracle"]) == 0
    out = capsys.readouterr().out
    assert "nofiltering" in out and "oracle" in out
    assert main(["ablate", "--config", str(cfg), "--strategies", "bogus"]) == 1


def test_oracle_command(tmp_path, smoke_source, capsys):
    cfg = _cfg(tmp_path, smoke_source)
    assert main(["oracle", "--config", str(cfg), "--alpha", "0.4", "--single-model"]) == 0
    assert "oracle-0.4-single" in capsys.readouterr().out


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
