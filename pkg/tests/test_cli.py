from pathlib import Path

import numpy as np
import pytest
from util import data_map, make_record

from dissect.avnav.acoustics.spectrogram import load_spectrogram
from dissect.avnav.env.grid import Action, AgentPose
from dissect.avnav.metrics.records import read_records, write_records
from dissect.avnav.nn.checkpoint import read_checkpoint
from dissect.avnav.tools.cli import (
    EXIT_CHECKPOINT,
    EXIT_CONFIG,
    EXIT_LOG,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_USAGE,
    main,
)

F, L, STOP = Action.MoveForward, Action.RotateLeft, Action.Stop

QUICK_CONFIG = """\
seed = 1
scenario = clean
num_maps = 1
num_envs = 1
num_steps = 4
num_updates = 2
ppo_epochs = 1
max_steps = 12
eval_episodes = 2
checkpoint_interval = 1
"""


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "quick.conf"
    path.write_text(QUICK_CONFIG)
    return path


@pytest.fixture
def log_file(tmp_path: Path) -> Path:
    grid = data_map("corridor.map")
    path = tmp_path / "episodes.jsonl"
    write_records(
        path,
        [
            make_record(grid, AgentPose((1, 1), 0), (3, 1), [F, F, STOP], episode_id=0),
            make_record(grid, AgentPose((1, 1), 0), (6, 1), [F, L, F, STOP], episode_id=7),
        ],
    )
    return path


def test_usage(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "dump-spectrogram" in capsys.readouterr().out
    assert main([]) == EXIT_USAGE
    assert main(["eval", "--task", "orbit"]) == EXIT_USAGE


def test_eval_log(tmp_path: Path, log_file: Path, capsys):
    out = tmp_path / "report"
    assert main(["eval", "--log", str(log_file), "--out", str(out)]) == EXIT_OK

    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[1] == "2,0.500000,0.500000,0.500000,0.500000,0.500000"
    assert "success_rate" in capsys.readouterr().out


def test_eval_bad_log(tmp_path: Path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["eval", "--log", str(empty), "--out", str(tmp_path)]) == EXIT_LOG
    assert main(["eval", "--log", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path)]) == EXIT_LOG

    broken = tmp_path / "broken.jsonl"
    broken.write_text("{not json\n")
    assert main(["eval", "--log", str(broken), "--out", str(tmp_path)]) == EXIT_LOG


def test_eval_bad_checkpoint(tmp_path: Path, config_file: Path):
    args = ["eval", "--config", str(config_file), "--out", str(tmp_path)]
    assert main(args) == EXIT_CHECKPOINT
    assert main(args + ["--checkpoint", str(tmp_path / "missing.davn")]) == EXIT_CHECKPOINT

    bad = tmp_path / "bad.davn"
    bad.write_bytes(b"NOPE" + bytes(16))
    assert main(args + ["--checkpoint", str(bad)]) == EXIT_CHECKPOINT


def test_bad_config(tmp_path: Path, config_file: Path):
    assert main(["oracle", "--gen", "open:2x2", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["oracle", "--gen", "caves:8x8", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["oracle", "--config", str(tmp_path / "missing.conf")]) == EXIT_CONFIG

    bad = tmp_path / "bad.conf"
    bad.write_text("n_rays = 0\n")
    assert main(["oracle", "--config", str(bad)]) == EXIT_CONFIG


def test_oracle_agent(tmp_path: Path, config_file: Path):
    out = tmp_path / "oracle"
    argv = ["oracle", "--config", str(config_file), "--out", str(out), "--episodes", "3", "--task", "static"]
    assert main(argv) == EXIT_OK

    records = read_records(out / "oracle.jsonl")
    assert [record.episode_id for record in records] == [0, 1, 2]
    assert (out / "metrics.csv").exists()
    assert main(["oracle", "--log", str(out / "oracle.jsonl")]) == EXIT_OK


def test_oracle_cross_check(tmp_path: Path, log_file: Path, capsys):
    assert main(["oracle", "--log", str(log_file)]) == EXIT_OK
    assert "2 episodes checked, 0 mismatches" in capsys.readouterr().out

    records = read_records(log_file)
    records[1].success = True
    tampered = tmp_path / "tampered.jsonl"
    write_records(tampered, records)

    assert main(["oracle", "--log", str(tampered)]) == EXIT_MISMATCH
    assert "episode 7" in capsys.readouterr().out


def test_replay(tmp_path: Path, log_file: Path):
    out = tmp_path / "episode.svg"
    assert main(["replay", "--log", str(log_file), "--episode", "7", "--out", str(out)]) == EXIT_OK
    assert 'id="agent-path"' in out.read_text()

    assert main(["replay", "--log", str(log_file), "--episode", "3", "--out", str(out)]) == EXIT_LOG


def test_dump_spectrogram(tmp_path: Path, config_file: Path):
    output = tmp_path / "spec.bin"
    pgm = tmp_path / "spec.pgm"
    argv = ["dump-spectrogram", "--config", str(config_file), "--output", str(output), "--pgm", str(pgm)]
    assert main(argv) == EXIT_OK

    with output.open("rb") as fh:
        spec = load_spectrogram(fh)
    assert spec.shape == (65, 26, 2)
    assert np.isfinite(spec).all()
    assert pgm.read_bytes().startswith(b"P5")


def test_bench(tmp_path: Path, config_file: Path):
    assert main(["bench", "--config", str(config_file), "--duration", "0"]) == EXIT_CONFIG

    csv_path = tmp_path / "bench.csv"
    argv = ["bench", "--config", str(config_file), "--duration", "0.05", "--warmup", "0", "--csv", str(csv_path)]
    assert main(argv) == EXIT_OK

    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("mode,num_envs")
    assert [line.split(",")[0] for line in lines[1:]] == ["env", "env+policy"]


def test_train_eval_pipeline(tmp_path: Path, config_file: Path):
    run = tmp_path / "run"
    assert main(["train", "--config", str(config_file), "--out", str(run)]) == EXIT_OK

    assert (run / "config.json").exists()
    assert len((run / "stats.csv").read_text().splitlines()) == 3
    assert (run / "checkpoint-000001.davn").exists()
    checkpoint = run / "checkpoint-final.davn"
    assert read_checkpoint(checkpoint)

    evaluation = tmp_path / "eval"
    argv = ["eval", "--config", str(config_file), "--out", str(evaluation), "--checkpoint", str(checkpoint)]
    assert main(argv) == EXIT_OK
    records = read_records(evaluation / "trajectories.jsonl")
    assert len(records) == 2
    assert all(len(record.steps) <= 12 for record in records)

    assert main(["oracle", "--log", str(evaluation / "trajectories.jsonl")]) == EXIT_OK
    assert main(["eval", "--log", str(evaluation / "trajectories.jsonl"), "--out", str(evaluation)]) == EXIT_OK

    mismatched = tmp_path / "mismatched.conf"
    mismatched.write_text(QUICK_CONFIG + "action_map_size = 5\n")
    argv = ["eval", "--config", str(mismatched), "--out", str(evaluation), "--checkpoint", str(checkpoint)]
    assert main(argv) == EXIT_CHECKPOINT
