from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from dissect.avnav.acoustics.sound import SoundBank
from dissect.avnav.agent.policy import PolicyArch, PolicyInput, PolicyParameters, init_policy
from dissect.avnav.agent.profiles import ConvLayer, NetworkProfile
from dissect.avnav.env.environment import EnvConfig, NavEnv
from dissect.avnav.env.episode import EpisodeSpec
from dissect.avnav.env.grid import Action, AgentPose, Cell, GridMap, load_map, step_low_level
from dissect.avnav.metrics.records import EpisodeRecord, StepRecord
from dissect.avnav.ppo.reward import compute_reward
from dissect.avnav.scenario.pipeline import ScenarioConfig
from dissect.avnav.seeding import SeedStreams


def data_file(path: str) -> Path:
    return Path(__file__).parent / "data" / path


def data_map(path: str) -> GridMap:
    return load_map(data_file(path).read_text())


def open_grid(width: int = 8, height: int = 8, resolution: float = 1.0) -> GridMap:
    occupancy = np.ones((height, width), dtype=bool)
    occupancy[1:-1, 1:-1] = False
    return GridMap(occupancy, resolution)


def numeric_grad(fn: Callable[[], float], x: np.ndarray, eps: float = 1e-5, indices: Optional[Sequence] = None):
    """Central differences of ``fn`` with respect to ``x``, perturbed in place."""
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape) if indices is None else indices:
        orig = x[idx]
        x[idx] = orig + eps
        plus = fn()
        x[idx] = orig - eps
        minus = fn()
        x[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-8)
    return float(np.max(np.abs(a - b)) / scale)


def sample_indices(shape: tuple, rng: np.random.Generator, count: int) -> list[tuple]:
    flat = rng.choice(int(np.prod(shape)), size=min(count, int(np.prod(shape))), replace=False)
    return [np.unravel_index(int(idx), shape) for idx in flat]


TINY_PROFILE = NetworkProfile(
    name="tiny",
    sample_rate=16000,
    audio_convs=(ConvLayer(2, (5, 5), (4, 4)), ConvLayer(2, (3, 3), (2, 2))),
    audio_embedding=4,
    spatial_tconvs=(ConvLayer(3, (2, 2), (1, 1)), ConvLayer(2, (1, 1), (1, 1))),
    fusion_convs=(ConvLayer(2, (3, 3), (2, 2)),),
    fusion_embedding=4,
    depth_convs=(ConvLayer(2, (1, 4), (1, 4)),),
    depth_embedding=4,
    hidden_size=5,
)

TINY_MAP_SHAPE = (8, 9)
TINY_RAYS = 16


def tiny_arch(continuous: bool = False, reconstruction: bool = False) -> PolicyArch:
    return PolicyArch(TINY_PROFILE, TINY_MAP_SHAPE, TINY_RAYS, 3, continuous, reconstruction)


def tiny_params(arch: PolicyArch, seed: int = 0) -> PolicyParameters:
    """Initialized parameters with random biases, so no rectifier sits exactly on its kink."""
    rng = np.random.default_rng(seed)
    params = init_policy(arch, rng)
    tensors = dict(params.tensors)
    for name, value in tensors.items():
        if name.endswith(".b"):
            tensors[name] = rng.normal(0.0, 0.1, size=value.shape)
    return params.replace(tensors)


def random_inputs(arch: PolicyArch, rng: np.random.Generator) -> PolicyInput:
    channels, freq_bins, frames = arch.profile.audio_input_shape
    return PolicyInput(
        audio=rng.uniform(0.0, 2.0, size=(channels, freq_bins, frames)),
        gmap=(rng.random((2, *arch.map_shape)) < 0.3).astype(np.float64),
        depth=rng.uniform(0.1, 1.0, size=(1, arch.n_rays)),
    )


def make_record(
    grid: GridMap,
    start: AgentPose,
    source: Cell,
    actions: Sequence[Action],
    sources: Optional[Sequence[Cell]] = None,
    task: str = "static",
    episode_id: int = 0,
) -> EpisodeRecord:
    """Simulate ``actions`` from ``start``; ``sources`` holds the source cell after every step."""
    sources = [source] * len(actions) if sources is None else sources
    pose = start
    target = source
    steps = []
    success = False
    for action, after in zip(actions, sources):
        new_pose, collided = step_low_level(grid, pose, action)
        reward = compute_reward(grid, pose, new_pose, action, target)
        steps.append(StepRecord(action, new_pose, after, reward, collided))
        if action == Action.Stop:
            success = new_pose.cell == target
            break
        pose, target = new_pose, after
    return EpisodeRecord(episode_id, 0, task, grid.to_text(), start, source, steps, success)


def make_env(grid: GridMap, start: AgentPose, source: Cell, seed: int = 0, **config) -> NavEnv:
    """Environment with a clean scenario, reset onto a fixed start pose and source cell."""
    config.setdefault("n_rays", 4)
    config.setdefault("scenario", ScenarioConfig().clean())
    env = NavEnv([grid], SoundBank(), SeedStreams(seed), EnvConfig(**config))
    env.reset_to(EpisodeSpec(0, 0, grid, start, source))
    return env
