from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

REPLICA_MASKS = (12, 32)
MP3D_MASKS = (12, 12)


class AugmentMode(IntEnum):
    NONE = 0
    TIME = 1
    FREQUENCY = 2
    BOTH = 3


@dataclass(frozen=True)
class AugmentSpec:
    freq_mask_F: int = 12
    time_mask_T: int = 12

    def __post_init__(self) -> None:
        if self.freq_mask_F < 0 or self.time_mask_T < 0:
            raise ValueError(f"Mask parameters must be nonnegative: {self}")

    @classmethod
    def for_sample_rate(cls, sample_rate: int) -> AugmentSpec:
        return cls(*(REPLICA_MASKS if sample_rate > 16000 else MP3D_MASKS))


def _mask(spec: np.ndarray, limit: int, axis: int, rng: np.random.Generator) -> np.ndarray:
    size = spec.shape[axis]
    if not 0 <= limit <= size:
        raise ValueError(f"Mask parameter {limit} outside [0, {size}]")

    width = int(rng.integers(0, limit + 1))
    start = int(rng.integers(0, size - width + 1))

    result = spec.copy()
    index = [slice(None)] * spec.ndim
    index[axis] = slice(start, start + width)
    result[tuple(index)] = 0.0
    return result


def freq_mask(spec: np.ndarray, F: int, rng: np.random.Generator) -> np.ndarray:
    """Zero ``f ~ U{0..F}`` consecutive frequency rows from ``f0 ~ U{0..F_total-f}`` on both channels."""
    return _mask(spec, F, 0, rng)


def time_mask(spec: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Zero ``t ~ U{0..T}`` consecutive frames from ``t0 ~ U{0..T_total-t}`` on both channels."""
    return _mask(spec, T, 1, rng)


def choose_augmentation(rng: np.random.Generator, augment_prob: float = 0.5) -> AugmentMode:
    if rng.random() >= augment_prob:
        return AugmentMode.NONE
    return (AugmentMode.TIME, AugmentMode.FREQUENCY, AugmentMode.BOTH)[int(rng.integers(3))]


def apply_augment(
    spec: np.ndarray, augspec: AugmentSpec, rng: np.random.Generator, augment_prob: float = 0.5
) -> np.ndarray:
    mode = choose_augmentation(rng, augment_prob)
    if mode in (AugmentMode.TIME, AugmentMode.BOTH):
        spec = time_mask(spec, augspec.time_mask_T, rng)
    if mode in (AugmentMode.FREQUENCY, AugmentMode.BOTH):
        spec = freq_mask(spec, augspec.freq_mask_F, rng)
    return spec
