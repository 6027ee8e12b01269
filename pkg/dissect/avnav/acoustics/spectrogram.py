from __future__ import annotations

from pathlib import Path
from typing import BinaryIO, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image
from scipy.signal import get_window

from dissect.avnav.acoustics.binaural import mix, propagate, render_binaural
from dissect.avnav.acoustics.sound import SoundBank, step_samples, synth_sound
from dissect.avnav.c_avnav import c_avnav
from dissect.avnav.env.grid import AgentPose, Cell, GridMap
from dissect.avnav.exception import ShapeError

HOP_LENGTH = 160
WIN_LENGTH = 400
N_FFT = 512
DOWNSAMPLE = 4

_pad = (N_FFT - WIN_LENGTH) // 2
WINDOW = np.pad(get_window("hann", WIN_LENGTH), (_pad, N_FFT - WIN_LENGTH - _pad))


def spectrogram_shape(sample_rate: int) -> tuple[int, int, int]:
    """Shape ``(F, T, 2)`` of the spectrogram of one environment step at ``sample_rate``."""
    bins = N_FFT // 2 + 1
    frames = 1 + step_samples(sample_rate) // HOP_LENGTH
    return (-(-bins // DOWNSAMPLE), -(-frames // DOWNSAMPLE), 2)


def spectrogram(chunk: np.ndarray) -> np.ndarray:
    """Compute the binaural log-magnitude spectrogram ``(F, T, 2)`` of a ``(2, n)`` stereo chunk.

    Frames of 400 samples under a Hann window are zero-padded to 512 and taken every 160 samples from the
    signal zero-padded by 256 on both sides (centered frames). The magnitude is downsampled by 4 along both
    axes and passed through ``log1p``.
    """
    chunk = np.asarray(chunk, dtype=np.float64)
    if chunk.ndim != 2 or chunk.shape[0] != 2:
        raise ShapeError(f"Expected a (2, n) stereo chunk, got {chunk.shape}")
    if chunk.shape[1] < WIN_LENGTH:
        raise ShapeError(f"Chunk of {chunk.shape[1]} samples is shorter than the {WIN_LENGTH} sample window")

    padded = np.pad(chunk, ((0, 0), (N_FFT // 2, N_FFT // 2)))
    frames = sliding_window_view(padded, N_FFT, axis=1)[:, ::HOP_LENGTH]
    magnitude = np.abs(np.fft.rfft(frames * WINDOW, axis=-1))

    # (channel, frame, bin) -> (bin, frame, channel)
    magnitude = magnitude[:, ::DOWNSAMPLE, ::DOWNSAMPLE].transpose(2, 1, 0)
    return np.log1p(magnitude)


def compute_observation_audio(
    grid: GridMap,
    bank: SoundBank,
    sources: Sequence[tuple[int, Cell, int]],
    listener: AgentPose,
    sample_rate: int,
    itd_samples: int = 0,
) -> np.ndarray:
    """Render, mix and analyze ``(class_id, cell, t0)`` sources as heard from ``listener``."""
    n = step_samples(sample_rate)
    chunks = [
        render_binaural(synth_sound(bank, class_id, t0, n, sample_rate), propagate(grid, cell, listener), itd_samples)
        for class_id, cell, t0 in sources
    ]
    if not chunks:
        return np.zeros(spectrogram_shape(sample_rate))
    return spectrogram(mix(chunks))


def dump_spectrogram(spec: np.ndarray, fh: BinaryIO) -> None:
    if spec.ndim != 3:
        raise ShapeError(f"Expected an (F, T, C) spectrogram, got {spec.shape}")
    header = c_avnav.SpectrogramHeader(freq_bins=spec.shape[0], frames=spec.shape[1], channels=spec.shape[2])
    fh.write(header.dumps())
    fh.write(np.ascontiguousarray(spec, dtype="<f4").tobytes())


def load_spectrogram(fh: BinaryIO) -> np.ndarray:
    header = c_avnav.SpectrogramHeader(fh)
    shape = (header.freq_bins, header.frames, header.channels)
    count = int(np.prod(shape))
    data = fh.read(count * 4)
    if len(data) != count * 4:
        raise ShapeError("Truncated spectrogram dump")
    return np.frombuffer(data, dtype="<f4").reshape(shape).astype(np.float64)


def write_pgm(spec: np.ndarray, path: Path, scale: Optional[float] = None) -> None:
    """Write the channels side by side as an 8-bit grayscale PGM, low frequencies at the bottom."""
    image = np.concatenate([spec[::-1, :, channel] for channel in range(spec.shape[2])], axis=1)
    scale = scale or float(image.max())
    if scale > 0:
        image = image / scale
    pixels = np.clip(np.round(image * 255), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")
