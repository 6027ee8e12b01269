from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from dissect.avnav.acoustics.sound import SoundBank
from dissect.avnav.env.grid import Cell, GridMap
from dissect.avnav.scenario.augment import AugmentSpec
from dissect.avnav.scenario.motion import DEFAULT_MOVE_PROBABILITY

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioConfig:
    """Probabilities of the episode and step level randomizations."""

    second_source_prob: float = 0.5
    distractor_prob: float = 0.5
    distractor_step_prob: float = 0.5
    augment_prob: float = 0.5
    dynamic_target_prob: float = 0.0
    move_probability: float = DEFAULT_MOVE_PROBABILITY
    move_probabilities: tuple[float, ...] = ()
    augment: AugmentSpec = AugmentSpec()

    def clean(self) -> ScenarioConfig:
        return replace(self, second_source_prob=0.0, distractor_prob=0.0, augment_prob=0.0)


@dataclass
class EpisodeScenario:
    target_class: int
    include_second: bool
    second_class: Optional[int]
    include_distractor: bool
    dynamic_target: bool
    move_probability: float
    distractor_pool: tuple[int, ...]
    distractor_step_prob: float
    augment: AugmentSpec
    augment_prob: float
    rng: np.random.Generator

    def summary(self) -> dict:
        return {
            "target_class": self.target_class,
            "include_second": self.include_second,
            "second_class": self.second_class,
            "include_distractor": self.include_distractor,
            "dynamic_target": self.dynamic_target,
            "move_probability": self.move_probability,
        }


def sample_episode_scenario(
    rng: np.random.Generator,
    bank: SoundBank,
    split: str,
    target_class: Optional[int] = None,
    config: ScenarioConfig = ScenarioConfig(),
) -> EpisodeScenario:
    """Draw the per-episode randomizations.

    Second sources and distractors always come from the training split without the target, whatever
    split the target itself was drawn from.
    """
    if target_class is None:
        candidates = bank.split(split)
        target_class = candidates[int(rng.integers(len(candidates)))]

    pool = tuple(class_id for class_id in bank.split("train") if class_id != target_class)

    include_second = bool(rng.random() < config.second_source_prob)
    second_class = pool[int(rng.integers(len(pool)))] if include_second else None
    include_distractor = bool(rng.random() < config.distractor_prob)
    dynamic_target = bool(rng.random() < config.dynamic_target_prob)

    move_probability = config.move_probability
    if config.move_probabilities:
        move_probability = config.move_probabilities[int(rng.integers(len(config.move_probabilities)))]

    return EpisodeScenario(
        target_class=int(target_class),
        include_second=include_second,
        second_class=second_class,
        include_distractor=include_distractor,
        dynamic_target=dynamic_target,
        move_probability=float(move_probability),
        distractor_pool=pool,
        distractor_step_prob=config.distractor_step_prob,
        augment=config.augment,
        augment_prob=config.augment_prob,
        rng=rng,
    )


def compose_step_sources(
    scenario: EpisodeScenario, grid: GridMap, rng: np.random.Generator, target_cell: Cell, agent_cell: Cell
) -> list[tuple[int, Cell]]:
    """Return the ``(class_id, cell)`` sources audible during one step.

    Distractors are placed on the component of ``agent_cell``, so every source of a step is audible.
    """
    sources = [(scenario.target_class, target_cell)]

    if scenario.include_second:
        sources.append((scenario.second_class, target_cell))

    if scenario.include_distractor and rng.random() < scenario.distractor_step_prob:
        class_id = scenario.distractor_pool[int(rng.integers(len(scenario.distractor_pool)))]
        cells = [cell for cell in grid.reachable_cells(agent_cell) if cell != target_cell]
        if cells:
            sources.append((class_id, cells[int(rng.integers(len(cells)))]))
        else:
            log.warning("No distractor cell available besides the target cell %s", target_cell)

    return sources
