import os
from pathlib import Path

import pytest

from dissect.avnav.agent.actions import ARGMAX
from dissect.avnav.config import RunConfig
from dissect.avnav.env.environment import NavEnv
from dissect.avnav.metrics.metrics import evaluate
from dissect.avnav.metrics.oracle import cross_check, run_oracle_episode
from dissect.avnav.ppo.rollout import run_episodes
from dissect.avnav.ppo.trainer import Trainer

pytestmark = pytest.mark.skipif(not os.environ.get("AVNAV_SMOKE"), reason="set AVNAV_SMOKE=1 to run learning tests")

EVAL_EPISODES = range(100)


def smoke_config(**overrides) -> RunConfig:
    values = dict(
        seed=5,
        scenario="clean",
        gen="open:8x8",
        num_maps=4,
        num_train_sounds=4,
        num_envs=8,
        num_steps=150,
        num_updates=60,
        checkpoint_interval=0,
    )
    values.update(overrides)
    return RunConfig(**values)


def train_and_evaluate(config: RunConfig, out_dir: Path) -> tuple[Trainer, NavEnv, list]:
    trainer = Trainer(config, out_dir)
    params = trainer.train()
    assert trainer.low_level_steps <= 160_000

    bank = config.sound_bank()
    env = NavEnv(trainer.maps, bank, config.streams(), config.env_config(bank, evaluation=True))
    records = run_episodes(env, params, EVAL_EPISODES, config.streams().policy(0), ARGMAX, config.action_map_size)
    assert cross_check(records) == []
    return trainer, env, records


def test_learns_static(tmp_path: Path):
    _, _, records = train_and_evaluate(smoke_config(), tmp_path)
    assert evaluate(records).success_rate >= 0.8


def test_learns_dynamic(tmp_path: Path):
    _, env, records = train_and_evaluate(smoke_config(task="dynamic", move_probability=0.3), tmp_path)
    report = evaluate(records)
    assert report.success_rate >= 0.6
    assert report.dspl > 0.0

    oracle = [run_oracle_episode(env, episode_id) for episode_id in EVAL_EPISODES]
    assert evaluate(oracle).success_rate >= 0.99


@pytest.mark.parametrize("action_map_size", [3, 9])
def test_action_map_sizes_complete(tmp_path: Path, action_map_size: int):
    config = smoke_config(action_map_size=action_map_size, num_updates=5)
    Trainer(config, tmp_path).train()

    rows = (tmp_path / "stats.csv").read_text().splitlines()
    assert len(rows) == 6
