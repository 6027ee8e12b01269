from dataclasses import replace

import numpy as np
import pytest
from util import data_map, make_record

from dissect.avnav.acoustics.sound import SoundBank
from dissect.avnav.env.environment import EnvConfig, NavEnv
from dissect.avnav.env.grid import Action, AgentPose
from dissect.avnav.metrics.oracle import (
    brute_force_terms,
    cross_check,
    oracle_chaser,
    run_oracle_episode,
)
from dissect.avnav.scenario.pipeline import ScenarioConfig
from dissect.avnav.seeding import SeedStreams

F, L, R, STOP = Action.MoveForward, Action.RotateLeft, Action.RotateRight, Action.Stop


@pytest.fixture(scope="module")
def bank() -> SoundBank:
    return SoundBank()


def make_env(bank: SoundBank, task: str, seed: int = 0, max_steps: int = 40) -> NavEnv:
    scenario = ScenarioConfig().clean()
    config = EnvConfig(task=task, n_rays=4, max_steps=max_steps, scenario=scenario)
    return NavEnv([data_map("room.map")], bank, SeedStreams(seed), config)


def random_episode(env: NavEnv, rng: np.random.Generator, episode_id: int):
    env.reset(episode_id)
    while not env.done:
        env.step(Action(int(rng.choice(4, p=[0.5, 0.2, 0.2, 0.1]))))
    return env.record


def test_oracle_chaser_static():
    grid = data_map("corridor.map")
    result = oracle_chaser(grid, AgentPose((1, 1), 0), [(5, 1)])

    assert result.success
    assert result.actions == [F, F, F, F, STOP]
    assert result.path == [(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]


def test_oracle_chaser_turns_around():
    grid = data_map("corridor.map")
    result = oracle_chaser(grid, AgentPose((3, 1), 0), [(1, 1)])

    assert result.success
    assert result.actions == [L, L, F, F, STOP]


def test_oracle_chaser_moving_source():
    grid = data_map("corridor.map")
    result = oracle_chaser(grid, AgentPose((1, 1), 0), [(6, 1), (5, 1), (4, 1)])

    assert result.success
    assert result.poses[-1].cell == (4, 1)
    assert result.actions == [F, F, F, STOP]


def test_oracle_chaser_unreachable():
    result = oracle_chaser(data_map("split.map"), AgentPose((1, 1), 0), [(5, 1)])
    assert not result.success
    assert result.actions == []
    with pytest.raises(ValueError):
        oracle_chaser(data_map("split.map"), AgentPose((1, 1), 0), [])


def test_oracle_chaser_step_limit():
    result = oracle_chaser(data_map("corridor.map"), AgentPose((1, 1), 0), [(6, 1)], max_steps=3)
    assert not result.success
    assert len(result.actions) == 3


@pytest.mark.parametrize("task", ["static", "dynamic"])
def test_run_oracle_episode(bank: SoundBank, task: str):
    env = make_env(bank, task, max_steps=500)
    for episode_id in range(10):
        record = run_oracle_episode(env, episode_id)
        assert record.success
        assert record.task == task
        assert record.steps[-1].action == STOP


def test_static_oracle_is_efficient(bank: SoundBank):
    env = make_env(bank, "static", max_steps=500)
    for episode_id in range(5):
        record = run_oracle_episode(env, episode_id)
        assert brute_force_terms(record)["sna"] == 1.0


@pytest.mark.parametrize("task", ["static", "dynamic"])
def test_cross_check_random_episodes(bank: SoundBank, task: str):
    # 250 episodes per task, 500 over both
    env = make_env(bank, task, seed=3)
    rng = np.random.default_rng(3)
    records = [random_episode(env, rng, episode_id) for episode_id in range(200)]
    records += [run_oracle_episode(env, episode_id) for episode_id in range(200, 250)]

    assert len(records) == 250
    assert any(record.success for record in records)
    assert any(not record.success for record in records)
    assert cross_check(records) == []


def test_cross_check_hand_made():
    grid = data_map("corridor.map")
    records = [
        make_record(grid, AgentPose((1, 1), 0), (3, 1), [F, F, F, L, L, F, STOP]),
        make_record(grid, AgentPose((1, 1), 90), (2, 1), [F, R, F, STOP]),
        make_record(grid, AgentPose((1, 1), 0), (6, 1), [F, F, F, L, L, F, STOP], [(5, 1), (4, 1)] + [(3, 1)] * 5),
    ]
    assert cross_check(records) == []


def test_cross_check_tampered_pose():
    grid = data_map("corridor.map")
    record = make_record(grid, AgentPose((1, 1), 0), (3, 1), [F, F, STOP])
    record.steps[0] = replace(record.steps[0], pose=AgentPose((1, 1), 90))

    mismatches = cross_check([record])
    assert [mismatch.check for mismatch in mismatches][:1] == ["step 0 pose"]
    assert "episode 0" in str(mismatches[0])


def test_cross_check_tampered_success():
    grid = data_map("corridor.map")
    record = make_record(grid, AgentPose((1, 1), 0), (6, 1), [F, F, STOP])
    record.success = True

    checks = {mismatch.check for mismatch in cross_check([record])}
    assert "success off the source" in checks
