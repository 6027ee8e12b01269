"""Environment throughput measurement, with and without the policy in the loop."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from dissect.avnav.agent.actions import execute_waypoint, waypoint_mask
from dissect.avnav.agent.policy import init_policy
from dissect.avnav.config import RunConfig
from dissect.avnav.env.environment import NavEnv
from dissect.avnav.exception import ConfigError
from dissect.avnav.ppo.rollout import RolloutWorker

log = logging.getLogger(__name__)

ENV_ONLY = "env"
ENV_POLICY = "env+policy"

BENCH_COLUMNS = ("mode", "num_envs", "seconds", "decisions", "steps", "decisions_per_second", "steps_per_second")


@dataclass(frozen=True)
class BenchResult:
    mode: str
    num_envs: int
    seconds: float
    decisions: int
    steps: int

    @property
    def decisions_per_second(self) -> float:
        return self.decisions / self.seconds

    @property
    def steps_per_second(self) -> float:
        return self.steps / self.seconds

    @property
    def per_env_rate(self) -> float:
        return self.decisions_per_second / self.num_envs

    def row(self) -> list[str]:
        return [
            self.mode,
            str(self.num_envs),
            f"{self.seconds:.3f}",
            str(self.decisions),
            str(self.steps),
            f"{self.decisions_per_second:.2f}",
            f"{self.steps_per_second:.2f}",
        ]


class RandomWaypointAgent:
    """Uniform choice among the available waypoints, rendering an observation after every decision."""

    def __init__(self, env: NavEnv, rng: np.random.Generator, action_map_size: int = 3):
        self.env = env
        self.rng = rng
        self.action_map_size = action_map_size

    def act(self) -> int:
        env = self.env
        if env.done:
            env.reset()
        mask = waypoint_mask(env.grid, env.pose, self.action_map_size)
        index = int(self.rng.choice(np.flatnonzero(mask)))
        result = execute_waypoint(env, index, self.action_map_size)
        if result.done:
            env.reset()
        else:
            env.observe()
        return result.sub_steps


def _measure(step_fns: Sequence[Callable[[], int]], duration: float, warmup: float) -> tuple[float, int, int]:
    def run(seconds: float) -> tuple[float, int, int]:
        decisions = steps = 0
        start = time.perf_counter()
        while True:
            for fn in step_fns:
                steps += fn()
                decisions += 1
            elapsed = time.perf_counter() - start
            if elapsed >= seconds:
                return elapsed, decisions, steps

    if warmup > 0:
        run(warmup)
    return run(duration)


def throughput_bench(
    config: RunConfig, duration: float, warmup: float = 0.5, num_envs: Optional[int] = None
) -> list[BenchResult]:
    """Measure decisions and low-level steps per second for the environment alone and with the policy.

    Every mode runs for ``duration`` seconds of wall clock time after ``warmup`` seconds.
    """
    if duration <= 0:
        raise ConfigError(f"Benchmark duration must be positive: {duration}")
    if warmup < 0:
        raise ConfigError(f"Warmup must be nonnegative: {warmup}")

    num_envs = num_envs or config.num_envs
    streams = config.streams()
    bank = config.sound_bank()
    maps = config.map_pool(streams)
    env_config = config.env_config(bank)

    def make_envs() -> list[NavEnv]:
        return [NavEnv(maps, bank, streams, env_config, idx, num_envs) for idx in range(num_envs)]

    results = []

    agents = [
        RandomWaypointAgent(env, streams.policy(idx), config.action_map_size) for idx, env in enumerate(make_envs())
    ]
    seconds, decisions, steps = _measure([agent.act for agent in agents], duration, warmup)
    results.append(BenchResult(ENV_ONLY, num_envs, seconds, decisions, steps))

    arch = config.policy_arch(maps[0].shape)
    params = init_policy(arch, streams.init())
    workers = [
        RolloutWorker(env, streams.policy(idx), arch.hidden_size, config.action_map_size, config.continuous_actions)
        for idx, env in enumerate(make_envs())
    ]
    seconds, decisions, steps = _measure(
        [lambda worker=worker: worker.act(params).sub_steps for worker in workers], duration, warmup
    )
    results.append(BenchResult(ENV_POLICY, num_envs, seconds, decisions, steps))

    for result in results:
        log.info(
            "%s with %d envs: %.1f decisions/s, %.1f steps/s",
            result.mode,
            result.num_envs,
            result.decisions_per_second,
            result.steps_per_second,
        )
    return results


def bench_csv(results: Sequence[BenchResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for result in results:
        writer.writerow(result.row())
    return buf.getvalue()
