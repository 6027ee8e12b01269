from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

NUM_CLASSES = 102
SPLITS = ("train", "val", "test")
SPLIT_SIZES = {"train": 73, "val": 11, "test": 18}

SAMPLE_RATES = (16000, 44100)
STEP_DURATION = 1.0

TONAL_PARTIALS = 4
NOISE_PARTIALS = 24
NOISE_BANDWIDTH = 800
NOISE_LEVEL = 0.15


@dataclass(frozen=True)
class SoundClass:
    """Parameters of one synthetic sound: integer-Hz partials with fixed amplitudes and phases.

    Integer frequencies keep every partial an exact number of cycles per second, so a one second chunk
    has an RMS of exactly one and the waveform is a pure function of the absolute sample index.
    """

    class_id: int
    frequencies: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray

    def synth(self, t0: int, n: int, sample_rate: int) -> np.ndarray:
        index = np.arange(t0, t0 + n, dtype=np.int64)
        # Reduce f*i modulo the sample rate in integers so phases stay exact for any t0
        cycles = (self.frequencies[:, None] * index[None, :]) % sample_rate
        angles = 2 * np.pi * cycles / sample_rate + self.phases[:, None]
        return self.amplitudes @ np.sin(angles)


class SoundBank:
    """The fixed corpus of synthetic sound classes and its train/val/test split."""

    def __init__(self, seed: int = 0, num_classes: int = NUM_CLASSES):
        if num_classes != sum(SPLIT_SIZES.values()):
            raise ValueError(f"A sound bank holds {sum(SPLIT_SIZES.values())} classes, got {num_classes}")
        self.seed = seed
        self.num_classes = num_classes

    def __repr__(self) -> str:
        return f"<SoundBank seed={self.seed} classes={self.num_classes}>"

    def __len__(self) -> int:
        return self.num_classes

    @cached_property
    def classes(self) -> tuple[SoundClass, ...]:
        return tuple(_make_class(self.seed, class_id) for class_id in range(self.num_classes))

    @cached_property
    def splits(self) -> dict[str, tuple[int, ...]]:
        result = {}
        start = 0
        for name in SPLITS:
            result[name] = tuple(range(start, start + SPLIT_SIZES[name]))
            start += SPLIT_SIZES[name]
        return result

    def split(self, name: str) -> tuple[int, ...]:
        if name not in self.splits:
            raise ValueError(f"Unknown split: {name}")
        return self.splits[name]

    def split_of(self, class_id: int) -> str:
        self._check_class(class_id)
        return next(name for name, ids in self.splits.items() if class_id in ids)

    def _check_class(self, class_id: int) -> None:
        if not 0 <= class_id < self.num_classes:
            raise ValueError(f"Invalid sound class: {class_id}")

    def __getitem__(self, class_id: int) -> SoundClass:
        self._check_class(class_id)
        return self.classes[class_id]


def _make_class(seed: int, class_id: int) -> SoundClass:
    rng = np.random.default_rng([seed, class_id])

    tonal = rng.choice(np.arange(80, 6000, 20), size=TONAL_PARTIALS, replace=False)
    center = int(rng.integers(600, 6000))
    band = np.arange(center - NOISE_BANDWIDTH // 2, center + NOISE_BANDWIDTH // 2)
    band = band[~np.isin(band, tonal)]
    noise = rng.choice(band, size=NOISE_PARTIALS, replace=False)

    tonal_amplitudes = rng.uniform(0.5, 1.0, size=TONAL_PARTIALS)
    noise_amplitudes = np.full(NOISE_PARTIALS, NOISE_LEVEL)
    amplitudes = np.concatenate([tonal_amplitudes, noise_amplitudes])
    # Mean power of a sum of distinct sinusoids is sum(a^2)/2
    amplitudes /= np.sqrt(np.sum(amplitudes**2) / 2)

    frequencies = np.concatenate([tonal, noise]).astype(np.int64)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(frequencies))
    return SoundClass(class_id, frequencies, amplitudes, phases)


def synth_sound(bank: SoundBank, class_id: int, t0: int, n: int, sample_rate: int) -> np.ndarray:
    """Render ``n`` mono samples of a sound class starting at absolute sample index ``t0``."""
    return bank[class_id].synth(t0, n, sample_rate)


def step_samples(sample_rate: int, duration: float = STEP_DURATION) -> int:
    return int(round(sample_rate * duration))
