from dissect.avnav.acoustics.binaural import (
    PropagationResult,
    mix,
    propagate,
    render_binaural,
)
from dissect.avnav.acoustics.sound import SoundBank, SoundClass, synth_sound
from dissect.avnav.acoustics.spectrogram import (
    compute_observation_audio,
    dump_spectrogram,
    load_spectrogram,
    spectrogram,
    spectrogram_shape,
    write_pgm,
)

__all__ = [
    "PropagationResult",
    "SoundBank",
    "SoundClass",
    "compute_observation_audio",
    "dump_spectrogram",
    "load_spectrogram",
    "mix",
    "propagate",
    "render_binaural",
    "spectrogram",
    "spectrogram_shape",
    "synth_sound",
    "write_pgm",
]
