"""Rollout collection with one recurrent policy worker per environment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dissect.avnav.agent.actions import SAMPLE, execute_waypoint, select_waypoint, waypoint_mask
from dissect.avnav.agent.continuous import DEFAULT_IDLE_STOP_COUNT, ContinuousController
from dissect.avnav.agent.policy import PolicyInput, PolicyParameters, policy_forward, policy_input
from dissect.avnav.env.environment import NavEnv
from dissect.avnav.metrics.records import EpisodeRecord
from dissect.avnav.nn.layers import gaussian_head

log = logging.getLogger(__name__)

DEFAULT_NUM_STEPS = 150


@dataclass
class Transition:
    """One waypoint decision and what it earned.

    ``action`` is the waypoint index, or the pre-squash Gaussian sample of the continuous variant.
    ``hidden`` is the recurrent state the decision was made from.
    """

    inputs: PolicyInput
    mask: Optional[np.ndarray]
    action: np.ndarray
    log_prob: float
    value: float
    reward: float
    done: bool
    hidden: np.ndarray
    sub_steps: int = 1


class RolloutWorker:
    """Drives one environment with the policy, carrying the recurrent state across rollouts."""

    def __init__(
        self,
        env: NavEnv,
        rng: np.random.Generator,
        hidden_size: int,
        action_map_size: int = 3,
        continuous: bool = False,
        mode: str = SAMPLE,
        idle_stop_count: int = DEFAULT_IDLE_STOP_COUNT,
    ):
        self.env = env
        self.rng = rng
        self.hidden_size = hidden_size
        self.action_map_size = action_map_size
        self.mode = mode
        self.controller = ContinuousController(env.maps[0].resolution, idle_stop_count) if continuous else None

        self.hidden = np.zeros(hidden_size)
        self.inputs: Optional[PolicyInput] = None
        self.finished: list[EpisodeRecord] = []
        self.auto_reset = True

    def __repr__(self) -> str:
        return f"<RolloutWorker env={self.env!r} continuous={self.controller is not None}>"

    def start(self, episode_id: Optional[int] = None) -> None:
        self.inputs = policy_input(self.env.reset(episode_id))
        self.hidden = np.zeros(self.hidden_size)

    def act(self, params: PolicyParameters) -> Transition:
        """Make one waypoint decision and execute it. A finished episode is recorded and the next one started."""
        if self.inputs is None:
            self.start()

        env = self.env
        out, _ = policy_forward(params, self.inputs, self.hidden)

        if self.controller is not None:
            log_std = params["actor.log_std"]
            if self.mode == SAMPLE:
                sample = out.head + np.exp(log_std) * self.rng.standard_normal(out.head.shape)
            else:
                sample = out.head.copy()
            log_prob = gaussian_head(out.head, log_std, sample).log_prob
            mask = None
            action = sample
            result = self.controller.act(env, sample)
        else:
            mask = waypoint_mask(env.grid, env.pose, self.action_map_size)
            choice = select_waypoint(out.head, mask, self.rng, self.mode)
            log_prob = choice.log_prob
            action = np.array(choice.index)
            result = execute_waypoint(env, choice.index, self.action_map_size)

        transition = Transition(
            inputs=self.inputs,
            mask=mask,
            action=action,
            log_prob=log_prob,
            value=out.value,
            reward=result.reward,
            done=result.done,
            hidden=self.hidden,
            sub_steps=result.sub_steps,
        )

        if result.done:
            self.finished.append(env.record)
            if self.auto_reset:
                self.start()
            else:
                self.inputs = None
        else:
            self.hidden = out.h_new
            self.inputs = policy_input(env.observe())
        return transition

    def bootstrap_value(self, params: PolicyParameters) -> float:
        if self.inputs is None:
            self.start()
        out, _ = policy_forward(params, self.inputs, self.hidden)
        return out.value

    def pop_finished(self) -> list[EpisodeRecord]:
        finished, self.finished = self.finished, []
        return finished


@dataclass
class RolloutBatch:
    """Transitions of ``n_envs`` environments, ``n_steps`` contiguous decisions each."""

    transitions: list[list[Transition]]
    bootstrap_values: np.ndarray
    finished: list[EpisodeRecord] = field(default_factory=list)

    def __repr__(self) -> str:
        return f"<RolloutBatch envs={self.n_envs} steps={self.n_steps} finished={len(self.finished)}>"

    @property
    def n_envs(self) -> int:
        return len(self.transitions)

    @property
    def n_steps(self) -> int:
        return len(self.transitions[0]) if self.transitions else 0

    def _field(self, name: str) -> np.ndarray:
        return np.array([[getattr(t, name) for t in row] for row in self.transitions], dtype=np.float64)

    @property
    def rewards(self) -> np.ndarray:
        return self._field("reward")

    @property
    def values(self) -> np.ndarray:
        return self._field("value")

    @property
    def dones(self) -> np.ndarray:
        return self._field("done")

    @property
    def log_probs(self) -> np.ndarray:
        return self._field("log_prob")

    @property
    def sub_steps(self) -> int:
        return int(self._field("sub_steps").sum())

    def initial_hidden(self, env: int) -> np.ndarray:
        return self.transitions[env][0].hidden


def make_workers(
    envs: Sequence[NavEnv],
    rngs: Sequence[np.random.Generator],
    hidden_size: int,
    action_map_size: int = 3,
    continuous: bool = False,
    mode: str = SAMPLE,
) -> list[RolloutWorker]:
    if len(envs) != len(rngs):
        raise ValueError(f"Need one generator per environment: {len(envs)} environments, {len(rngs)} generators")
    return [
        RolloutWorker(env, rng, hidden_size, action_map_size, continuous, mode) for env, rng in zip(envs, rngs)
    ]


def collect_rollouts(
    workers: Sequence[RolloutWorker], params: PolicyParameters, n_steps: int = DEFAULT_NUM_STEPS
) -> RolloutBatch:
    """Step every worker ``n_steps`` waypoint transitions.

    Workers are stepped in index order and each owns its environment, generator and recurrent state, so
    a batch only depends on the seeds.
    """
    if n_steps < 1:
        raise ValueError(f"Number of rollout steps must be positive: {n_steps}")

    transitions: list[list[Transition]] = [[] for _ in workers]
    for _ in range(n_steps):
        for idx, worker in enumerate(workers):
            transitions[idx].append(worker.act(params))

    bootstrap = np.array([worker.bootstrap_value(params) for worker in workers])
    finished = [record for worker in workers for record in worker.pop_finished()]
    batch = RolloutBatch(transitions, bootstrap, finished)
    log.debug("Collected %r", batch)
    return batch


def run_episodes(
    env: NavEnv,
    params: PolicyParameters,
    episode_ids: Sequence[int],
    rng: np.random.Generator,
    mode: str,
    action_map_size: int = 3,
    continuous: bool = False,
) -> list[EpisodeRecord]:
    """Play the given episodes to the end, one after the other, and return their records."""
    worker = RolloutWorker(env, rng, params.arch.hidden_size, action_map_size, continuous, mode)
    worker.auto_reset = False
    records = []
    for episode_id in episode_ids:
        worker.start(episode_id)
        while not worker.finished:
            worker.act(params)
        records.extend(worker.pop_finished())
    return records
