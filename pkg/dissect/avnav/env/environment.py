from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dissect.avnav.acoustics.sound import SoundBank, step_samples
from dissect.avnav.acoustics.spectrogram import compute_observation_audio
from dissect.avnav.env.episode import EpisodeSpec, generate_episode
from dissect.avnav.env.grid import Action, AgentPose, Cell, GridMap, step_low_level
from dissect.avnav.env.sensing import (
    DEFAULT_FOV,
    DEFAULT_MAX_RANGE,
    DEFAULT_RAYS,
    DepthScan,
    GeometricMap,
    Observation,
    ray_cast_scan,
)
from dissect.avnav.exception import Error
from dissect.avnav.metrics.records import TASKS, EpisodeRecord, StepRecord
from dissect.avnav.ppo.reward import compute_reward, is_success
from dissect.avnav.scenario.augment import apply_augment
from dissect.avnav.scenario.motion import MotionModel, source_step
from dissect.avnav.scenario.pipeline import (
    EpisodeScenario,
    ScenarioConfig,
    compose_step_sources,
    sample_episode_scenario,
)
from dissect.avnav.seeding import SeedStreams

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 500


@dataclass(frozen=True)
class EnvConfig:
    task: str = "static"
    split: str = "train"
    # Restricts target draws, e.g. to the first few training sounds
    target_classes: tuple[int, ...] = ()
    sample_rate: int = 16000
    n_rays: int = DEFAULT_RAYS
    fov_degrees: float = DEFAULT_FOV
    max_range: float = DEFAULT_MAX_RANGE
    max_steps: int = DEFAULT_MAX_STEPS
    itd_samples: int = 0
    max_source_distance: Optional[int] = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"Unknown task: {self.task}")
        if self.max_steps < 1:
            raise ValueError(f"Step limit must be positive: {self.max_steps}")


@dataclass(frozen=True)
class StepResult:
    reward: float
    done: bool
    collided: bool


class NavEnv:
    """One navigation environment.

    Environment ``env_index`` out of ``num_envs`` plays the episode ids ``env_index``,
    ``env_index + num_envs``, ..., and draws everything of an episode from streams keyed by its id, so
    results do not depend on how environments are interleaved.
    """

    def __init__(
        self,
        maps: Sequence[GridMap],
        bank: SoundBank,
        streams: SeedStreams,
        config: EnvConfig = EnvConfig(),
        env_index: int = 0,
        num_envs: int = 1,
    ):
        if not maps:
            raise ValueError("Need at least one map")
        if not 0 <= env_index < num_envs:
            raise ValueError(f"Invalid environment index {env_index} of {num_envs}")

        self.maps = list(maps)
        self.bank = bank
        self.streams = streams
        self.config = config
        self.env_index = env_index
        self.num_envs = num_envs

        self.episodes_started = 0
        self.episode: Optional[EpisodeSpec] = None
        self.scenario: Optional[EpisodeScenario] = None
        self.motion: Optional[MotionModel] = None
        self.pose: Optional[AgentPose] = None
        self.source_cell: Optional[Cell] = None
        self.gmap: Optional[GeometricMap] = None
        self.scan: Optional[DepthScan] = None
        self.t = 0
        self.done = True
        self.success = False

        self._augment_rng: Optional[np.random.Generator] = None
        self._sources: list[tuple[int, Cell]] = []
        self._steps: list[StepRecord] = []

    def __repr__(self) -> str:
        return f"<NavEnv index={self.env_index} episode={self.episode_id} t={self.t} done={self.done}>"

    @property
    def grid(self) -> GridMap:
        return self.episode.grid

    @property
    def episode_id(self) -> Optional[int]:
        return None if self.episode is None else self.episode.episode_id

    @property
    def dynamic(self) -> bool:
        return self.motion is not None

    def next_episode_id(self) -> int:
        return self.env_index + self.episodes_started * self.num_envs

    def reset(self, episode_id: Optional[int] = None) -> Observation:
        if episode_id is None:
            episode_id = self.next_episode_id()
        self.episodes_started += 1

        spec = generate_episode(
            self.maps, self.streams.episode(episode_id), episode_id, self.config.max_source_distance
        )
        return self.reset_to(spec)

    def reset_to(self, spec: EpisodeSpec) -> Observation:
        """Start the episode ``spec``; its scenario and augmentation draws come from the episode's own streams."""
        scenario_rng = self.streams.scenario(spec.episode_id)
        target_class = None
        if self.config.target_classes:
            classes = self.config.target_classes
            target_class = classes[int(scenario_rng.integers(len(classes)))]

        self.episode = spec
        self.scenario = sample_episode_scenario(
            scenario_rng, self.bank, self.config.split, target_class, self.config.scenario
        )
        self.pose = spec.start
        self.source_cell = spec.source
        self.motion = None
        if self.config.task == "dynamic" or self.scenario.dynamic_target:
            self.motion = MotionModel.start(
                spec.grid, scenario_rng, spec.source, spec.start.cell, self.scenario.move_probability
            )

        self._augment_rng = self.streams.augment(spec.episode_id)
        self.t = 0
        self.done = False
        self.success = False
        self._steps = []

        self.gmap = GeometricMap.for_map(spec.grid)
        self._sense()
        self._sources = compose_step_sources(self.scenario, spec.grid, scenario_rng, self.source_cell, spec.start.cell)

        log.debug(
            "Episode %d: map %d start %s source %s dynamic %s scenario %s",
            spec.episode_id,
            spec.map_index,
            spec.start,
            spec.source,
            self.dynamic,
            self.scenario.summary(),
        )
        return self.observe()

    def _sense(self) -> None:
        cfg = self.config
        self.scan = ray_cast_scan(self.grid, self.pose, cfg.n_rays, cfg.fov_degrees, cfg.max_range)
        self.gmap.update(self.pose, self.scan)

    def step(self, action: Action) -> StepResult:
        """Apply one low-level action, then advance the source and the audio scene by one step."""
        if self.done:
            raise Error("Episode is over, call reset() first")

        action = Action(action)
        prev_pose = self.pose
        target_cell = self.source_cell

        self.pose, collided = step_low_level(self.grid, prev_pose, action)
        reward = compute_reward(self.grid, prev_pose, self.pose, action, target_cell)
        self.t += 1

        if action == Action.Stop:
            self.done = True
            self.success = is_success(self.pose, action, target_cell)
        else:
            if self.motion is not None:
                self.motion = source_step(self.motion, self.grid, self.scenario.rng, self.pose.cell)
                self.source_cell = self.motion.current
            if self.t >= self.config.max_steps:
                self.done = True

        self._sense()
        if not self.done:
            self._sources = compose_step_sources(
                self.scenario, self.grid, self.scenario.rng, self.source_cell, self.pose.cell
            )

        self._steps.append(StepRecord(action, self.pose, self.source_cell, reward, collided))
        if self.done:
            log.debug("Episode %d ended after %d steps, success %s", self.episode_id, self.t, self.success)
        return StepResult(reward, self.done, collided)

    def observe(self) -> Observation:
        """Render the observation of the current step.

        The audio of every step starts at its absolute sample offset, so consecutive steps continue the
        same waveforms.
        """
        sample_rate = self.config.sample_rate
        t0 = self.t * step_samples(sample_rate)
        sources = [(class_id, cell, t0) for class_id, cell in self._sources]
        spec = compute_observation_audio(
            self.grid, self.bank, sources, self.pose, sample_rate, self.config.itd_samples
        )
        spec = apply_augment(spec, self.scenario.augment, self._augment_rng, self.scenario.augment_prob)
        return Observation(spec, self.scan, self.gmap.copy())

    @property
    def record(self) -> EpisodeRecord:
        return EpisodeRecord(
            episode_id=self.episode.episode_id,
            seed=self.streams.seed,
            task="dynamic" if self.dynamic else "static",
            map_text=self.grid.to_text(),
            start=self.episode.start,
            source_start=self.episode.source,
            steps=list(self._steps),
            success=self.success,
            scenario=self.scenario.summary(),
        )
