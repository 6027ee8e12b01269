"""Run configuration: every knob of a training or evaluation run in one validated, frozen record.

A config file is either JSON or a flat list of ``key = value`` lines. ``#`` starts a comment and blank
lines are ignored. Values are read as ``true``/``false``, integers, floats or bare strings; list valued
keys take comma separated values.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Union, get_type_hints

from dissect.avnav.acoustics.sound import SAMPLE_RATES, SPLIT_SIZES, SoundBank
from dissect.avnav.acoustics.spectrogram import spectrogram_shape
from dissect.avnav.agent.policy import ACTION_MAP_SIZES, PolicyArch
from dissect.avnav.agent.profiles import PROFILES, get_profile
from dissect.avnav.env.environment import EnvConfig
from dissect.avnav.env.episode import build_map_pool, parse_gen_spec
from dissect.avnav.env.grid import MAP_STYLES, GridMap, load_map
from dissect.avnav.exception import ConfigError, Error
from dissect.avnav.metrics.records import TASKS
from dissect.avnav.ppo.algorithm import AUX_LOSS_WEIGHT
from dissect.avnav.ppo.update import PPOConfig
from dissect.avnav.scenario.augment import AugmentSpec
from dissect.avnav.scenario.pipeline import ScenarioConfig
from dissect.avnav.seeding import SeedStreams

log = logging.getLogger(__name__)

SCENARIOS = ("clean", "complex")
SOUNDS = ("heard", "unheard")

MAX_SEED = 2**64 - 1
PROFILE_DEFAULT = -1


def _knob(default: Any, bounds: Optional[tuple[float, float]] = None, choices: Optional[tuple] = None) -> Any:
    return field(default=default, metadata={"range": bounds, "choices": choices})


@dataclass(frozen=True)
class RunConfig:
    seed: int = _knob(0, bounds=(0, MAX_SEED))
    out_dir: str = "avnav-run"

    # Task setup
    task: str = _knob("static", choices=TASKS)
    scenario: str = _knob("complex", choices=SCENARIOS)
    sounds: str = _knob("heard", choices=SOUNDS)
    num_train_sounds: int = _knob(0, bounds=(0, SPLIT_SIZES["train"]))
    sound_bank_seed: int = _knob(0, bounds=(0, MAX_SEED))

    # Maps and episodes
    map_path: str = ""
    gen: str = "open:8x8"
    num_maps: int = _knob(4, bounds=(1, 100_000))
    resolution: float = _knob(1.0, bounds=(1e-3, 100.0))
    max_source_distance: int = _knob(0, bounds=(0, 100_000))
    max_steps: int = _knob(500, bounds=(1, 1_000_000))

    # Sensing
    sample_rate: int = _knob(16000, choices=SAMPLE_RATES)
    n_rays: int = _knob(64, bounds=(1, 4096))
    fov_degrees: float = _knob(90.0, bounds=(1.0, 360.0))
    max_range: float = _knob(10.0, bounds=(1.0, 10_000.0))
    itd_samples: int = _knob(0, bounds=(0, 64))

    # Scenario randomization
    second_source_prob: float = _knob(0.5, bounds=(0.0, 1.0))
    distractor_prob: float = _knob(0.5, bounds=(0.0, 1.0))
    distractor_step_prob: float = _knob(0.5, bounds=(0.0, 1.0))
    augment_prob: float = _knob(0.5, bounds=(0.0, 1.0))
    freq_mask_F: int = _knob(PROFILE_DEFAULT, bounds=(PROFILE_DEFAULT, 65))
    time_mask_T: int = _knob(PROFILE_DEFAULT, bounds=(PROFILE_DEFAULT, 69))
    dynamic_target_prob: float = _knob(0.0, bounds=(0.0, 1.0))
    move_probability: float = _knob(0.3, bounds=(0.0, 1.0))
    move_probabilities: tuple[float, ...] = _knob((), bounds=(0.0, 1.0))

    # Policy
    profile: str = _knob("desk16k", choices=tuple(PROFILES))
    action_map_size: int = _knob(3, choices=ACTION_MAP_SIZES)
    continuous_actions: bool = False
    idle_stop_count: int = _knob(3, bounds=(1, 1000))
    reconstruction: bool = False
    aux_loss_weight: float = _knob(AUX_LOSS_WEIGHT, bounds=(0.0, 100.0))

    # PPO
    clip_param: float = _knob(0.1, bounds=(0.0, 1.0))
    value_coef: float = _knob(0.5, bounds=(0.0, 100.0))
    entropy_coef: float = _knob(0.02, bounds=(0.0, 100.0))
    ppo_epochs: int = _knob(4, bounds=(1, 1000))
    num_minibatches: int = _knob(1, bounds=(1, 1024))
    lr: float = _knob(2.5e-4, bounds=(0.0, 1.0))
    adam_eps: float = _knob(1e-5, bounds=(0.0, 1.0))
    max_grad_norm: float = _knob(0.5, bounds=(0.0, 1e6))
    gamma: float = _knob(0.99, bounds=(0.0, 1.0))
    tau: float = _knob(0.95, bounds=(0.0, 1.0))
    linear_lr_decay: bool = True
    linear_clip_decay: bool = True
    normalize_advantages: bool = True

    # Run length
    num_envs: int = _knob(5, bounds=(1, 1024))
    num_steps: int = _knob(150, bounds=(1, 1_000_000))
    num_updates: int = _knob(200, bounds=(1, 100_000_000))
    checkpoint_interval: int = _knob(50, bounds=(0, 100_000_000))
    stats_window: int = _knob(50, bounds=(1, 1_000_000))
    eval_episodes: int = _knob(100, bounds=(1, 100_000_000))

    def __post_init__(self) -> None:
        types = get_type_hints(type(self))
        for f in fields(self):
            value = getattr(self, f.name)
            _check_type(f.name, value, types[f.name])

            values = value if isinstance(value, tuple) else (value,)
            choices = f.metadata.get("choices")
            if choices is not None and value not in choices:
                raise ConfigError(f"{f.name} must be one of {choices}, got {value!r}")
            bounds = f.metadata.get("range")
            if bounds is not None:
                for item in values:
                    if not bounds[0] <= item <= bounds[1]:
                        raise ConfigError(f"{f.name} = {item!r} outside [{bounds[0]}, {bounds[1]}]")

        if get_profile(self.profile).sample_rate != self.sample_rate:
            raise ConfigError(f"Profile {self.profile} expects sample rate {get_profile(self.profile).sample_rate}")
        bins, frames, _ = spectrogram_shape(self.sample_rate)
        for name, value, size, axis in (
            ("freq_mask_F", self.freq_mask_F, bins, "frequency bins"),
            ("time_mask_T", self.time_mask_T, frames, "frames"),
        ):
            if value > size:
                raise ConfigError(f"{name} = {value} exceeds the {size} {axis} of a {self.sample_rate} Hz spectrogram")
        if not self.map_path:
            try:
                parse_gen_spec(self.gen)
            except Error as e:
                raise ConfigError(f"Invalid gen: {e} (styles: {', '.join(MAP_STYLES)})")

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

        types = get_type_hints(cls)
        return cls(**{key: _coerce(key, value, types[key]) for key, value in values.items()})

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> RunConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}")

        if path.suffix == ".json" or text.lstrip().startswith("{"):
            try:
                values = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Malformed JSON config {path}: {e}")
            if not isinstance(values, dict):
                raise ConfigError(f"Config {path} is not a JSON object")
        else:
            values = parse_key_values(text)
        return cls.from_dict(values)

    def with_overrides(self, **overrides: Any) -> RunConfig:
        """Replace the given fields; ``None`` values leave a field unchanged."""
        overrides = {key: value for key, value in overrides.items() if value is not None}
        unknown = sorted(set(overrides) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        return replace(self, **overrides)

    def to_json(self) -> dict[str, Any]:
        values = asdict(self)
        values["move_probabilities"] = list(self.move_probabilities)
        return values

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.debug("Wrote resolved config to %s", path)

    @property
    def dynamic(self) -> bool:
        return self.task == "dynamic"

    def streams(self) -> SeedStreams:
        return SeedStreams(self.seed)

    def sound_bank(self) -> SoundBank:
        return SoundBank(self.sound_bank_seed)

    def scenario_config(self) -> ScenarioConfig:
        augment = AugmentSpec.for_sample_rate(self.sample_rate)
        if self.freq_mask_F != PROFILE_DEFAULT:
            augment = replace(augment, freq_mask_F=self.freq_mask_F)
        if self.time_mask_T != PROFILE_DEFAULT:
            augment = replace(augment, time_mask_T=self.time_mask_T)

        scenario = ScenarioConfig(
            second_source_prob=self.second_source_prob,
            distractor_prob=self.distractor_prob,
            distractor_step_prob=self.distractor_step_prob,
            augment_prob=self.augment_prob,
            dynamic_target_prob=self.dynamic_target_prob,
            move_probability=self.move_probability,
            move_probabilities=self.move_probabilities,
            augment=augment,
        )
        return scenario.clean() if self.scenario == "clean" else scenario

    def env_config(self, bank: SoundBank, evaluation: bool = False) -> EnvConfig:
        """Environment setup; only evaluation on unheard sounds draws targets from the test split."""
        split = "test" if evaluation and self.sounds == "unheard" else "train"
        target_classes = ()
        if split == "train" and self.num_train_sounds:
            target_classes = bank.split("train")[: self.num_train_sounds]

        return EnvConfig(
            task=self.task,
            split=split,
            target_classes=target_classes,
            sample_rate=self.sample_rate,
            n_rays=self.n_rays,
            fov_degrees=self.fov_degrees,
            max_range=self.max_range,
            max_steps=self.max_steps,
            itd_samples=self.itd_samples,
            max_source_distance=self.max_source_distance or None,
            scenario=self.scenario_config(),
        )

    def map_pool(self, streams: SeedStreams) -> list[GridMap]:
        if self.map_path:
            try:
                text = Path(self.map_path).read_text(encoding="utf-8")
            except OSError as e:
                raise ConfigError(f"Cannot read map {self.map_path}: {e}")
            return [load_map(text)]

        spec = parse_gen_spec(self.gen)
        map_seeds = [streams.map_seed(idx) for idx in range(self.num_maps)]
        return build_map_pool(spec, self.num_maps, map_seeds, self.resolution)

    def policy_arch(self, map_shape: tuple[int, int]) -> PolicyArch:
        return PolicyArch(
            profile=get_profile(self.profile),
            map_shape=map_shape,
            n_rays=self.n_rays,
            action_map_size=self.action_map_size,
            continuous=self.continuous_actions,
            reconstruction=self.reconstruction,
        )

    def ppo_config(self) -> PPOConfig:
        return PPOConfig(
            clip_param=self.clip_param,
            value_coef=self.value_coef,
            entropy_coef=self.entropy_coef,
            epochs=self.ppo_epochs,
            num_minibatches=self.num_minibatches,
            lr=self.lr,
            adam_eps=self.adam_eps,
            max_grad_norm=self.max_grad_norm,
            gamma=self.gamma,
            tau=self.tau,
            aux_loss_weight=self.aux_loss_weight if self.reconstruction else 0.0,
            linear_lr_decay=self.linear_lr_decay,
            linear_clip_decay=self.linear_clip_decay,
            normalize_advantages=self.normalize_advantages,
        )


def _check_type(name: str, value: Any, expected: Any) -> None:
    if expected is bool:
        ok = isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif expected is str:
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, tuple) and all(isinstance(item, (int, float)) for item in value)
    if not ok:
        raise ConfigError(f"{name} has the wrong type: {value!r}")


def _coerce(name: str, value: Any, expected: Any) -> Any:
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if expected not in (bool, int, float, str):
        if isinstance(value, str):
            value = [parse_value(item) for item in value.split(",") if item.strip()]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        return tuple(float(item) if isinstance(item, int) and not isinstance(item, bool) else item for item in value)
    return value


def parse_value(text: str) -> Union[bool, int, float, str]:
    text = text.strip()
    if text in ("true", "false"):
        return text == "true"
    for convert in (int, float):
        try:
            return convert(text)
        except ValueError:
            pass
    return text


def parse_key_values(text: str) -> dict[str, Any]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"Line {lineno}: expected 'key = value', got {line!r}")
        if key in values:
            raise ConfigError(f"Line {lineno}: duplicate key {key}")
        values[key] = parse_value(value)
    return values
