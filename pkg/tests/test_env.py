import numpy as np
import pytest
from util import data_map, make_env, open_grid

from dissect.avnav.acoustics.sound import SoundBank
from dissect.avnav.env.environment import EnvConfig, NavEnv
from dissect.avnav.env.episode import MapSpec, build_map_pool, generate_episode, parse_gen_spec
from dissect.avnav.env.grid import Action, AgentPose, load_map
from dissect.avnav.exception import Error, MapError, ScenarioError
from dissect.avnav.scenario.pipeline import ScenarioConfig
from dissect.avnav.seeding import SeedStreams


@pytest.fixture(scope="module")
def bank() -> SoundBank:
    return SoundBank()


@pytest.fixture
def maps() -> list:
    return [data_map("room.map"), open_grid(9, 8, 0.5)]


def run_turns(env: NavEnv, count: int) -> None:
    for _ in range(count):
        if env.step(Action.RotateLeft).done:
            break


def test_parse_gen_spec():
    assert parse_gen_spec("maze:12x10") == MapSpec("maze", 12, 10)
    assert parse_gen_spec("rooms:9x9:4") == MapSpec("rooms", 9, 9, 4)
    assert str(MapSpec("rooms", 9, 9, 4)) == "rooms:9x9:4"
    with pytest.raises(MapError):
        parse_gen_spec("maze-12x10")
    with pytest.raises(MapError):
        parse_gen_spec("caves:12x10")


def test_build_map_pool():
    pool = build_map_pool(MapSpec("rooms", 10, 9, 3), 3, [])
    assert len(pool) == 3
    assert {grid.shape for grid in pool} == {(9, 10)}
    assert build_map_pool(MapSpec("maze", 9, 9), 2, [5, 6]) == build_map_pool(MapSpec("maze", 9, 9, 5), 2, [])
    with pytest.raises(MapError):
        build_map_pool(MapSpec("open", 9, 9), 0, [])


def test_generate_episode(maps: list):
    rng = np.random.default_rng(0)
    for episode_id in range(50):
        spec = generate_episode(maps, rng, episode_id)
        assert spec.episode_id == episode_id
        assert spec.start.cell != spec.source
        assert spec.grid.connected(spec.start.cell, spec.source)

    spec = generate_episode(maps, rng, 0, max_source_distance=1)
    assert abs(spec.start.cell[0] - spec.source[0]) + abs(spec.start.cell[1] - spec.source[1]) == 1


def test_generate_episode_too_small():
    with pytest.raises(ScenarioError):
        generate_episode([load_map("###\n#.#\n###")], np.random.default_rng(0), 0)


def test_episode_ids(maps: list, bank: SoundBank):
    env = NavEnv(maps, bank, SeedStreams(0), EnvConfig(n_rays=4), env_index=1, num_envs=3)
    ids = []
    for _ in range(3):
        env.reset()
        ids.append(env.episode_id)
    assert ids == [1, 4, 7]


def test_invalid_env(maps: list, bank: SoundBank):
    with pytest.raises(ValueError):
        NavEnv([], bank, SeedStreams(0))
    with pytest.raises(ValueError):
        NavEnv(maps, bank, SeedStreams(0), env_index=2, num_envs=2)
    with pytest.raises(ValueError):
        EnvConfig(task="chase")


def test_episode_independent_of_env(maps: list, bank: SoundBank):
    a = NavEnv(maps, bank, SeedStreams(5), EnvConfig(n_rays=4), env_index=0, num_envs=2)
    b = NavEnv(maps, bank, SeedStreams(5), EnvConfig(n_rays=4), env_index=1, num_envs=2)
    b.reset()

    obs_a = a.reset(4)
    obs_b = b.reset(4)
    assert a.episode == b.episode
    assert np.array_equal(obs_a.spectrogram, obs_b.spectrogram)


def test_deterministic_records(maps: list, bank: SoundBank):
    def play(seed: int) -> list:
        env = NavEnv(maps, bank, SeedStreams(seed), EnvConfig(task="dynamic", n_rays=4, max_steps=12))
        dumps = []
        for _ in range(3):
            env.reset()
            run_turns(env, 20)
            dumps.append(env.record.dumps())
        return dumps

    assert play(11) == play(11)
    assert play(11) != play(12)


def test_observation_shapes(maps: list, bank: SoundBank):
    env = NavEnv(maps, bank, SeedStreams(1), EnvConfig(n_rays=8))
    obs = env.reset()

    assert obs.spectrogram.shape == (65, 26, 2)
    assert obs.spectrogram.any()
    assert len(obs.depth) == 8
    assert obs.gmap.shape == env.grid.shape
    assert obs.gmap.explored[env.pose.cell[1], env.pose.cell[0]]


def test_observation_44k(maps: list, bank: SoundBank):
    env = NavEnv(maps, bank, SeedStreams(1), EnvConfig(n_rays=4, sample_rate=44100))
    assert env.reset().spectrogram.shape == (65, 69, 2)


@pytest.mark.parametrize("task", ["static", "dynamic"])
def test_explored_grows_monotonically(maps: list, bank: SoundBank, task: str):
    env = NavEnv(maps, bank, SeedStreams(5), EnvConfig(task=task, n_rays=8, max_steps=60))
    rng = np.random.default_rng(5)
    for _ in range(20):
        env.reset()
        explored = env.gmap.explored.copy()
        occupied = env.gmap.occupied.copy()
        while not env.done:
            env.step(Action(int(rng.choice(4, p=[0.5, 0.2, 0.2, 0.1]))))
            assert (~explored | env.gmap.explored).all()
            assert (~occupied | env.gmap.occupied).all()
            assert env.gmap.explored[env.pose.cell[1], env.pose.cell[0]]
            explored = env.gmap.explored.copy()
            occupied = env.gmap.occupied.copy()


def test_observation_map_is_a_copy():
    env = make_env(open_grid(), AgentPose((3, 3), 0), (6, 6))
    obs = env.observe()
    env.step(Action.RotateLeft)
    assert obs.gmap != env.gmap


def test_colocated_stop():
    env = make_env(open_grid(), AgentPose((3, 3), 0), (3, 3))
    result = env.step(Action.Stop)

    assert abs(result.reward - 9.99) < 1e-12
    assert result.done
    assert env.success
    assert env.record.success


def test_step_after_done():
    env = make_env(open_grid(), AgentPose((3, 3), 0), (5, 5))
    env.step(Action.Stop)
    assert not env.success
    with pytest.raises(Error):
        env.step(Action.MoveForward)


def test_max_steps():
    env = make_env(open_grid(), AgentPose((3, 3), 0), (5, 5), max_steps=3)
    results = [env.step(Action.RotateLeft) for _ in range(3)]

    assert [result.done for result in results] == [False, False, True]
    assert not env.success
    assert len(env.record.steps) == 3


def test_collision_recorded():
    env = make_env(open_grid(), AgentPose((1, 1), 90), (5, 5))
    result = env.step(Action.MoveForward)

    assert result.collided
    assert env.pose == AgentPose((1, 1), 90)
    assert env.record.steps[0].collided


def test_record_trajectory():
    env = make_env(open_grid(), AgentPose((3, 3), 0), (5, 5))
    for action in (Action.MoveForward, Action.RotateRight, Action.MoveForward, Action.Stop):
        env.step(action)

    record = env.record
    assert record.task == "static"
    assert record.poses == [
        AgentPose((3, 3), 0),
        AgentPose((4, 3), 0),
        AgentPose((4, 3), 270),
        AgentPose((4, 4), 270),
        AgentPose((4, 4), 270),
    ]
    assert record.source_trajectory == [(5, 5)] * 5
    assert record.path_length == 2
    assert record.action_count == 3


def test_dynamic_source_trajectory(bank: SoundBank):
    grid = data_map("room.map")
    config = EnvConfig(task="dynamic", n_rays=4, scenario=ScenarioConfig(move_probability=1.0).clean())
    env = NavEnv([grid], bank, SeedStreams(2), config)
    env.reset()
    assert env.dynamic
    run_turns(env, 30)
    if not env.done:
        env.step(Action.Stop)

    trajectory = env.record.source_trajectory
    assert len(trajectory) == len(env.record.steps) + 1
    for (x0, y0), (x1, y1) in zip(trajectory, trajectory[1:]):
        assert abs(x0 - x1) + abs(y0 - y1) <= 1
        assert grid.is_free((x1, y1))
    assert len(set(trajectory)) > 1


def test_static_source_never_moves(maps: list, bank: SoundBank):
    env = NavEnv(maps, bank, SeedStreams(3), EnvConfig(n_rays=4))
    env.reset()
    source = env.source_cell
    run_turns(env, 10)
    assert set(env.record.source_trajectory) == {source}


def test_target_classes(maps: list, bank: SoundBank):
    env = NavEnv(maps, bank, SeedStreams(4), EnvConfig(n_rays=4, target_classes=(3, 7)))
    drawn = set()
    for _ in range(20):
        env.reset()
        drawn.add(env.scenario.target_class)
    assert drawn == {3, 7}
