from __future__ import annotations

from dataclasses import dataclass

from dissect.avnav.acoustics.spectrogram import spectrogram_shape
from dissect.avnav.exception import ConfigError, ShapeError
from dissect.avnav.nn.layers import conv2d_output_shape, tconv2d_output_shape

Shape = tuple[int, ...]


@dataclass(frozen=True)
class ConvLayer:
    channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int]


def _convs(*layers: tuple[int, int, int, int, int]) -> tuple[ConvLayer, ...]:
    return tuple(ConvLayer(channels, (kh, kw), (sh, sw)) for channels, kh, kw, sh, sw in layers)


def _convs1d(*layers: tuple[int, int, int]) -> tuple[ConvLayer, ...]:
    return tuple(ConvLayer(channels, (1, kernel), (1, stride)) for channels, kernel, stride in layers)


@dataclass(frozen=True)
class NetworkProfile:
    """Layer layout of every encoder of the policy network for one spectrogram sample rate.

    ``depth_convs`` are 1-D layers stored with a kernel and stride height of 1. The last layer of
    ``spatial_tconvs`` must have 2 channels, the depth of the geometric map it is fused with.
    """

    name: str
    sample_rate: int
    audio_convs: tuple[ConvLayer, ...]
    audio_embedding: int
    spatial_tconvs: tuple[ConvLayer, ...]
    fusion_convs: tuple[ConvLayer, ...]
    fusion_embedding: int
    depth_convs: tuple[ConvLayer, ...]
    depth_embedding: int
    hidden_size: int

    def __post_init__(self) -> None:
        if not self.spatial_tconvs or self.spatial_tconvs[-1].channels != 2:
            raise ShapeError(f"Profile {self.name}: spatial audio encoder must end in 2 channels")

    @property
    def spectrogram_shape(self) -> tuple[int, int, int]:
        return spectrogram_shape(self.sample_rate)

    @property
    def audio_input_shape(self) -> Shape:
        freq_bins, frames, channels = self.spectrogram_shape
        return (channels, freq_bins, frames)

    def audio_shapes(self) -> list[Shape]:
        """Output shape of every audio conv layer."""
        return _stack_shapes(self.audio_input_shape, self.audio_convs)

    def spatial_shapes(self) -> list[Shape]:
        shapes = []
        channels, height, width = self.audio_input_shape
        for layer in self.spatial_tconvs:
            height, width = tconv2d_output_shape(height, width, layer.kernel, layer.stride)
            shapes.append((layer.channels, height, width))
        return shapes

    def fusion_shapes(self, map_shape: tuple[int, int]) -> list[Shape]:
        return _stack_shapes((4, *map_shape), self.fusion_convs)

    def depth_shapes(self, n_rays: int) -> list[Shape]:
        return [(channels, width) for channels, _, width in _stack_shapes((1, 1, n_rays), self.depth_convs)]

    @property
    def gru_input_size(self) -> int:
        return self.audio_embedding + self.fusion_embedding + self.depth_embedding

    def validate(self, map_shape: tuple[int, int], n_rays: int) -> None:
        self.audio_shapes()
        self.fusion_shapes(map_shape)
        self.depth_shapes(n_rays)


def _stack_shapes(input_shape: Shape, layers: tuple[ConvLayer, ...]) -> list[Shape]:
    shapes = []
    _, height, width = input_shape
    for layer in layers:
        try:
            height, width = conv2d_output_shape(height, width, layer.kernel, layer.stride)
        except ShapeError as e:
            raise ShapeError(f"Layer {layer} does not fit input {(height, width)}: {e}")
        shapes.append((layer.channels, height, width))
    return shapes


_FULL_SPATIAL = _convs((16, 3, 3, 2, 2), (2, 3, 3, 1, 1))
_FULL_FUSION = _convs((32, 8, 8, 4, 4), (64, 4, 4, 2, 2), (64, 3, 3, 1, 1))
_FULL_DEPTH = _convs1d((32, 8, 4), (64, 4, 2), (64, 3, 1))

_DESK_SPATIAL = _convs((4, 3, 3, 1, 1), (2, 1, 1, 1, 1))
# Fits geometric maps of 7x7 cells and up
_DESK_FUSION = _convs((8, 3, 3, 2, 2), (16, 2, 2, 1, 1), (16, 2, 2, 1, 1))
_DESK_DEPTH = _convs1d((8, 8, 4), (16, 4, 2), (16, 3, 1))

PROFILES = {
    profile.name: profile
    for profile in (
        NetworkProfile(
            name="replica44k",
            sample_rate=44100,
            audio_convs=_convs((32, 8, 8, 4, 4), (64, 4, 4, 2, 2), (64, 3, 3, 1, 1)),
            audio_embedding=512,
            spatial_tconvs=_FULL_SPATIAL,
            fusion_convs=_FULL_FUSION,
            fusion_embedding=512,
            depth_convs=_FULL_DEPTH,
            depth_embedding=512,
            hidden_size=512,
        ),
        NetworkProfile(
            name="mp3d16k",
            sample_rate=16000,
            audio_convs=_convs((32, 5, 5, 2, 2), (64, 3, 3, 2, 2), (64, 3, 3, 1, 1)),
            audio_embedding=512,
            spatial_tconvs=_FULL_SPATIAL,
            fusion_convs=_FULL_FUSION,
            fusion_embedding=512,
            depth_convs=_FULL_DEPTH,
            depth_embedding=512,
            hidden_size=512,
        ),
        NetworkProfile(
            name="desk16k",
            sample_rate=16000,
            audio_convs=_convs((8, 4, 4, 2, 2), (16, 3, 3, 2, 2), (16, 3, 3, 1, 1)),
            audio_embedding=64,
            spatial_tconvs=_DESK_SPATIAL,
            fusion_convs=_DESK_FUSION,
            fusion_embedding=64,
            depth_convs=_DESK_DEPTH,
            depth_embedding=32,
            hidden_size=64,
        ),
        NetworkProfile(
            name="desk44k",
            sample_rate=44100,
            audio_convs=_convs((8, 4, 4, 4, 4), (16, 2, 2, 2, 2), (16, 3, 3, 1, 1)),
            audio_embedding=64,
            spatial_tconvs=_DESK_SPATIAL,
            fusion_convs=_DESK_FUSION,
            fusion_embedding=64,
            depth_convs=_DESK_DEPTH,
            depth_embedding=32,
            hidden_size=64,
        ),
    )
}


def get_profile(name: str) -> NetworkProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"Unknown network profile: {name}")
