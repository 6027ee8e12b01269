from dissect.avnav.scenario.augment import (
    AugmentMode,
    AugmentSpec,
    apply_augment,
    choose_augmentation,
    freq_mask,
    time_mask,
)
from dissect.avnav.scenario.motion import MotionModel, sample_source_goal, source_step
from dissect.avnav.scenario.pipeline import (
    EpisodeScenario,
    ScenarioConfig,
    compose_step_sources,
    sample_episode_scenario,
)

__all__ = [
    "AugmentMode",
    "AugmentSpec",
    "EpisodeScenario",
    "MotionModel",
    "ScenarioConfig",
    "apply_augment",
    "choose_augmentation",
    "compose_step_sources",
    "freq_mask",
    "sample_episode_scenario",
    "sample_source_goal",
    "source_step",
    "time_mask",
]
