"""Actor-critic policy network with audio, spatial audio, fusion and depth encoders.

Parameters live in a flat ``name -> array`` dictionary so the optimizer, the gradient checks and the
checkpoint format all work on the same structure. Every ``*_forward`` returns its output together with a
cache, and the matching ``*_backward`` adds parameter gradients into a ``grads`` dictionary and returns the
gradient with respect to its input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dissect.avnav.agent.profiles import ConvLayer, NetworkProfile
from dissect.avnav.env.sensing import Observation
from dissect.avnav.exception import CheckpointError, ShapeError
from dissect.avnav.nn.layers import (
    GruCache,
    GruParams,
    conv1d_backward,
    conv1d_forward,
    conv2d_backward,
    conv2d_forward,
    gru_cell,
    gru_cell_backward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
    resample_nearest_backward,
    resample_nearest_forward,
    tconv2d_backward,
    tconv2d_forward,
)

log = logging.getLogger(__name__)

Params = dict[str, np.ndarray]

ACTION_MAP_SIZES = (3, 5, 9)
CONTINUOUS_OUTPUTS = 2


@dataclass(frozen=True)
class PolicyArch:
    profile: NetworkProfile
    map_shape: tuple[int, int]
    n_rays: int
    action_map_size: int = 3
    continuous: bool = False
    reconstruction: bool = False

    def __post_init__(self) -> None:
        if self.action_map_size not in ACTION_MAP_SIZES:
            raise ShapeError(f"Action map size must be one of {ACTION_MAP_SIZES}, got {self.action_map_size}")
        self.profile.validate(self.map_shape, self.n_rays)

    @property
    def num_outputs(self) -> int:
        return CONTINUOUS_OUTPUTS if self.continuous else self.action_map_size**2

    @property
    def hidden_size(self) -> int:
        return self.profile.hidden_size

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Shape of every parameter tensor."""
        profile = self.profile
        shapes = {}

        channels = profile.audio_input_shape[0]
        for idx, layer in enumerate(profile.audio_convs):
            shapes[f"audio.conv{idx}.w"] = (layer.channels, channels, *layer.kernel)
            shapes[f"audio.conv{idx}.b"] = (layer.channels,)
            channels = layer.channels
        audio_flat = int(np.prod(profile.audio_shapes()[-1]))
        shapes["audio.fc.w"] = (profile.audio_embedding, audio_flat)
        shapes["audio.fc.b"] = (profile.audio_embedding,)

        channels = profile.audio_input_shape[0]
        for idx, layer in enumerate(profile.spatial_tconvs):
            shapes[f"spatial.tconv{idx}.w"] = (channels, layer.channels, *layer.kernel)
            shapes[f"spatial.tconv{idx}.b"] = (layer.channels,)
            channels = layer.channels

        channels = 4
        for idx, layer in enumerate(profile.fusion_convs):
            shapes[f"fusion.conv{idx}.w"] = (layer.channels, channels, *layer.kernel)
            shapes[f"fusion.conv{idx}.b"] = (layer.channels,)
            channels = layer.channels
        fusion_flat = int(np.prod(profile.fusion_shapes(self.map_shape)[-1]))
        shapes["fusion.fc.w"] = (profile.fusion_embedding, fusion_flat)
        shapes["fusion.fc.b"] = (profile.fusion_embedding,)

        channels = 1
        for idx, layer in enumerate(profile.depth_convs):
            shapes[f"depth.conv{idx}.w"] = (layer.channels, channels, layer.kernel[1])
            shapes[f"depth.conv{idx}.b"] = (layer.channels,)
            channels = layer.channels
        depth_flat = int(np.prod(profile.depth_shapes(self.n_rays)[-1]))
        shapes["depth.fc.w"] = (profile.depth_embedding, depth_flat)
        shapes["depth.fc.b"] = (profile.depth_embedding,)

        hidden, inputs = profile.hidden_size, profile.gru_input_size
        for name in GruParams.NAMES:
            shapes[f"gru.{name}"] = (hidden, inputs) if name.startswith("W") else (hidden, hidden)

        shapes["actor.w"] = (self.num_outputs, hidden)
        shapes["actor.b"] = (self.num_outputs,)
        if self.continuous:
            shapes["actor.log_std"] = (CONTINUOUS_OUTPUTS,)
        shapes["critic.w"] = (1, hidden)
        shapes["critic.b"] = (1,)

        if self.reconstruction:
            shapes["decoder.fc.w"] = (audio_flat, profile.audio_embedding)
            shapes["decoder.fc.b"] = (audio_flat,)
            for idx, (layer, out_channels) in enumerate(_decoder_layers(profile)):
                shapes[f"decoder.tconv{idx}.w"] = (layer.channels, out_channels, *layer.kernel)
                shapes[f"decoder.tconv{idx}.b"] = (out_channels,)

        return shapes


def _decoder_layers(profile: NetworkProfile) -> list[tuple[ConvLayer, int]]:
    """The audio conv layers in reverse, each paired with the channel count it maps back to."""
    in_channels = [profile.audio_input_shape[0]] + [layer.channels for layer in profile.audio_convs[:-1]]
    return list(zip(reversed(profile.audio_convs), reversed(in_channels)))


class PolicyParameters:
    def __init__(self, arch: PolicyArch, tensors: Params):
        expected = arch.shapes()
        if set(tensors) != set(expected):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise CheckpointError(f"Parameter names do not match the architecture: missing {missing}, extra {extra}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise CheckpointError(f"Parameter {name} has shape {tensors[name].shape}, expected {shape}")

        self.arch = arch
        self.tensors = {name: np.asarray(tensors[name], dtype=np.float64) for name in sorted(tensors)}

    def __repr__(self) -> str:
        return f"<PolicyParameters profile={self.arch.profile.name} tensors={len(self.tensors)} size={self.size}>"

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors)

    @property
    def size(self) -> int:
        return sum(value.size for value in self.tensors.values())

    @property
    def gru(self) -> GruParams:
        return GruParams(**{name: self.tensors[f"gru.{name}"] for name in GruParams.NAMES})

    def replace(self, tensors: Params) -> PolicyParameters:
        return PolicyParameters(self.arch, tensors)

    def zeros(self) -> Params:
        return {name: np.zeros_like(value) for name, value in self.tensors.items()}


def init_policy(arch: PolicyArch, rng: np.random.Generator) -> PolicyParameters:
    """He-normal weights for rectified layers, small actor weights and zero biases."""
    tensors = {}
    for name, shape in arch.shapes().items():
        if name.endswith(".b") or name == "actor.log_std":
            tensors[name] = np.zeros(shape)
        elif name == "actor.w":
            tensors[name] = rng.normal(0.0, 0.01, size=shape)
        elif name.startswith("gru.") or name == "critic.w":
            tensors[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[1]), size=shape)
        elif ".tconv" in name:
            fan_in = shape[0] * int(np.prod(shape[2:]))
            tensors[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

    params = PolicyParameters(arch, tensors)
    log.debug("Initialized %r", params)
    return params


@dataclass(frozen=True)
class PolicyInput:
    """The arrays the network consumes: audio ``(2, F, T)``, map ``(2, H, W)``, depth ``(1, R)``."""

    audio: np.ndarray
    gmap: np.ndarray
    depth: np.ndarray


def policy_input(obs: Observation) -> PolicyInput:
    return PolicyInput(
        audio=np.ascontiguousarray(obs.spectrogram.transpose(2, 0, 1)),
        gmap=obs.gmap.tensor(),
        depth=obs.depth.normalized()[None, :],
    )


def _accumulate(grads: Params, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] = grads[name] + value
    else:
        grads[name] = value


@dataclass
class StackCache:
    inputs: list[np.ndarray] = field(default_factory=list)
    preacts: list[np.ndarray] = field(default_factory=list)


def _conv_stack_forward(
    params: PolicyParameters, prefix: str, layers: tuple[ConvLayer, ...], x: np.ndarray, one_d: bool = False
) -> tuple[np.ndarray, StackCache]:
    cache = StackCache()
    for idx, layer in enumerate(layers):
        w, b = params[f"{prefix}.conv{idx}.w"], params[f"{prefix}.conv{idx}.b"]
        cache.inputs.append(x)
        if one_d:
            pre = conv1d_forward(x, w, b, layer.stride[1])
        else:
            pre = conv2d_forward(x, w, b, layer.stride)
        cache.preacts.append(pre)
        x = relu_forward(pre)
    return x, cache


def _conv_stack_backward(
    params: PolicyParameters,
    prefix: str,
    layers: tuple[ConvLayer, ...],
    grad: np.ndarray,
    cache: StackCache,
    grads: Params,
    one_d: bool = False,
) -> np.ndarray:
    for idx in reversed(range(len(layers))):
        layer = layers[idx]
        grad = relu_backward(grad, cache.preacts[idx])
        w = params[f"{prefix}.conv{idx}.w"]
        if one_d:
            grad, grad_w, grad_b = conv1d_backward(grad, cache.inputs[idx], w, layer.stride[1])
        else:
            grad, grad_w, grad_b = conv2d_backward(grad, cache.inputs[idx], w, layer.stride)
        _accumulate(grads, f"{prefix}.conv{idx}.w", grad_w)
        _accumulate(grads, f"{prefix}.conv{idx}.b", grad_b)
    return grad


@dataclass
class DenseCache:
    stack: StackCache
    conv_shape: tuple[int, ...]
    flat: np.ndarray
    preact: np.ndarray


def _encoder_forward(
    params: PolicyParameters, prefix: str, layers: tuple[ConvLayer, ...], x: np.ndarray, one_d: bool = False
) -> tuple[np.ndarray, DenseCache]:
    out, stack = _conv_stack_forward(params, prefix, layers, x, one_d)
    flat = out.reshape(-1)
    pre = linear_forward(flat, params[f"{prefix}.fc.w"], params[f"{prefix}.fc.b"])
    return relu_forward(pre), DenseCache(stack, out.shape, flat, pre)


def _encoder_backward(
    params: PolicyParameters,
    prefix: str,
    layers: tuple[ConvLayer, ...],
    grad: np.ndarray,
    cache: DenseCache,
    grads: Params,
    one_d: bool = False,
) -> np.ndarray:
    grad = relu_backward(grad, cache.preact)
    grad_flat, grad_w, grad_b = linear_backward(grad, cache.flat, params[f"{prefix}.fc.w"])
    _accumulate(grads, f"{prefix}.fc.w", grad_w)
    _accumulate(grads, f"{prefix}.fc.b", grad_b)
    return _conv_stack_backward(
        params, prefix, layers, grad_flat.reshape(cache.conv_shape), cache.stack, grads, one_d
    )


def encode_audio(params: PolicyParameters, audio: np.ndarray) -> tuple[np.ndarray, DenseCache]:
    """Embed a ``(2, F, T)`` spectrogram."""
    expected = params.arch.profile.audio_input_shape
    if audio.shape != expected:
        raise ShapeError(f"Spectrogram {audio.shape} does not match profile input {expected}")
    return _encoder_forward(params, "audio", params.arch.profile.audio_convs, audio)


def encode_audio_backward(
    params: PolicyParameters, grad: np.ndarray, cache: DenseCache, grads: Params
) -> np.ndarray:
    return _encoder_backward(params, "audio", params.arch.profile.audio_convs, grad, cache, grads)


def encode_depth(params: PolicyParameters, depth: np.ndarray) -> tuple[np.ndarray, DenseCache]:
    if depth.shape != (1, params.arch.n_rays):
        raise ShapeError(f"Depth input {depth.shape} does not match {params.arch.n_rays} rays")
    return _encoder_forward(params, "depth", params.arch.profile.depth_convs, depth, one_d=True)


def encode_depth_backward(
    params: PolicyParameters, grad: np.ndarray, cache: DenseCache, grads: Params
) -> np.ndarray:
    return _encoder_backward(params, "depth", params.arch.profile.depth_convs, grad, cache, grads, one_d=True)


@dataclass
class SpatialCache:
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    pre_resample_shape: tuple[int, int]


def encode_spatial_audio(params: PolicyParameters, audio: np.ndarray) -> tuple[np.ndarray, SpatialCache]:
    """Upscale a spectrogram with transposed convolutions and resample it onto the geometric map grid."""
    layers = params.arch.profile.spatial_tconvs
    inputs, preacts = [], []
    x = audio
    for idx, layer in enumerate(layers):
        inputs.append(x)
        pre = tconv2d_forward(x, params[f"spatial.tconv{idx}.w"], params[f"spatial.tconv{idx}.b"], layer.stride)
        preacts.append(pre)
        x = relu_forward(pre) if idx < len(layers) - 1 else pre
    return resample_nearest_forward(x, params.arch.map_shape), SpatialCache(inputs, preacts, x.shape[1:])


def encode_spatial_audio_backward(
    params: PolicyParameters, grad: np.ndarray, cache: SpatialCache, grads: Params
) -> np.ndarray:
    layers = params.arch.profile.spatial_tconvs
    grad = resample_nearest_backward(grad, cache.pre_resample_shape)
    for idx in reversed(range(len(layers))):
        if idx < len(layers) - 1:
            grad = relu_backward(grad, cache.preacts[idx])
        grad, grad_w, grad_b = tconv2d_backward(
            grad, cache.inputs[idx], params[f"spatial.tconv{idx}.w"], layers[idx].stride
        )
        _accumulate(grads, f"spatial.tconv{idx}.w", grad_w)
        _accumulate(grads, f"spatial.tconv{idx}.b", grad_b)
    return grad


def fuse_audio_visual(
    params: PolicyParameters, spatial_audio: np.ndarray, gmap: np.ndarray
) -> tuple[np.ndarray, DenseCache]:
    """Stack the spatial audio channels before the map channels and embed the result."""
    if spatial_audio.shape != gmap.shape:
        raise ShapeError(f"Spatial audio {spatial_audio.shape} does not match map {gmap.shape}")
    return _encoder_forward(params, "fusion", params.arch.profile.fusion_convs, np.concatenate([spatial_audio, gmap]))


def fuse_audio_visual_backward(
    params: PolicyParameters, grad: np.ndarray, cache: DenseCache, grads: Params
) -> tuple[np.ndarray, np.ndarray]:
    grad = _encoder_backward(params, "fusion", params.arch.profile.fusion_convs, grad, cache, grads)
    return grad[:2], grad[2:]


@dataclass
class DecoderCache:
    features: np.ndarray
    preact: np.ndarray
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    pre_resample_shape: tuple[int, int]


def decode_audio(params: PolicyParameters, features: np.ndarray) -> tuple[np.ndarray, DecoderCache]:
    """Reconstruct the ``(2, F, T)`` spectrogram from the audio embedding."""
    profile = params.arch.profile
    pre = linear_forward(features, params["decoder.fc.w"], params["decoder.fc.b"])
    x = relu_forward(pre).reshape(profile.audio_shapes()[-1])

    layers = _decoder_layers(profile)
    inputs, preacts = [], []
    for idx, (layer, _) in enumerate(layers):
        inputs.append(x)
        out = tconv2d_forward(x, params[f"decoder.tconv{idx}.w"], params[f"decoder.tconv{idx}.b"], layer.stride)
        preacts.append(out)
        x = relu_forward(out) if idx < len(layers) - 1 else out

    decoded = resample_nearest_forward(x, profile.audio_input_shape[1:])
    return decoded, DecoderCache(features, pre, inputs, preacts, x.shape[1:])


def decode_audio_backward(
    params: PolicyParameters, grad: np.ndarray, cache: DecoderCache, grads: Params
) -> np.ndarray:
    layers = _decoder_layers(params.arch.profile)
    grad = resample_nearest_backward(grad, cache.pre_resample_shape)
    for idx in reversed(range(len(layers))):
        if idx < len(layers) - 1:
            grad = relu_backward(grad, cache.preacts[idx])
        grad, grad_w, grad_b = tconv2d_backward(
            grad, cache.inputs[idx], params[f"decoder.tconv{idx}.w"], layers[idx][0].stride
        )
        _accumulate(grads, f"decoder.tconv{idx}.w", grad_w)
        _accumulate(grads, f"decoder.tconv{idx}.b", grad_b)

    grad = relu_backward(grad.reshape(-1), cache.preact)
    grad_features, grad_w, grad_b = linear_backward(grad, cache.features, params["decoder.fc.w"])
    _accumulate(grads, "decoder.fc.w", grad_w)
    _accumulate(grads, "decoder.fc.b", grad_b)
    return grad_features


@dataclass
class PolicyOutput:
    head: np.ndarray
    value: float
    h_new: np.ndarray
    audio_features: np.ndarray


@dataclass
class PolicyCache:
    audio: DenseCache
    spatial: SpatialCache
    fusion: DenseCache
    depth: DenseCache
    gru: GruCache
    gru_input: np.ndarray
    h_new: np.ndarray


def policy_forward(
    params: PolicyParameters, inputs: PolicyInput, h_prev: np.ndarray
) -> tuple[PolicyOutput, PolicyCache]:
    """One recurrent step: encoders, GRU, then the actor and critic heads.

    ``head`` holds the action map logits, or the Gaussian mean for the continuous variant.
    """
    audio_features, audio_cache = encode_audio(params, inputs.audio)
    spatial, spatial_cache = encode_spatial_audio(params, inputs.audio)
    fused, fusion_cache = fuse_audio_visual(params, spatial, inputs.gmap)
    depth_features, depth_cache = encode_depth(params, inputs.depth)

    x = np.concatenate([audio_features, fused, depth_features])
    h_new, gru_cache = gru_cell(x, h_prev, params.gru)

    head = linear_forward(h_new, params["actor.w"], params["actor.b"])
    value = float(linear_forward(h_new, params["critic.w"], params["critic.b"])[0])

    output = PolicyOutput(head, value, h_new, audio_features)
    cache = PolicyCache(audio_cache, spatial_cache, fusion_cache, depth_cache, gru_cache, x, h_new)
    return output, cache


def policy_backward(
    params: PolicyParameters,
    cache: PolicyCache,
    grad_head: np.ndarray,
    grad_value: float,
    grad_h_new: Optional[np.ndarray] = None,
    grad_audio_features: Optional[np.ndarray] = None,
    grads: Optional[Params] = None,
) -> tuple[Params, np.ndarray]:
    """Backpropagate one step. Returns the accumulated gradients and the gradient of ``h_prev``."""
    grads = {} if grads is None else grads
    profile = params.arch.profile

    grad_h, grad_w, grad_b = linear_backward(grad_head, cache.h_new, params["actor.w"])
    _accumulate(grads, "actor.w", grad_w)
    _accumulate(grads, "actor.b", grad_b)

    grad_critic, grad_w, grad_b = linear_backward(np.array([grad_value]), cache.h_new, params["critic.w"])
    _accumulate(grads, "critic.w", grad_w)
    _accumulate(grads, "critic.b", grad_b)
    grad_h = grad_h + grad_critic
    if grad_h_new is not None:
        grad_h = grad_h + grad_h_new

    grad_x, grad_h_prev, gru_grads = gru_cell_backward(grad_h, cache.gru, params.gru)
    for name in GruParams.NAMES:
        _accumulate(grads, f"gru.{name}", getattr(gru_grads, name))

    audio_size = profile.audio_embedding
    fusion_size = profile.fusion_embedding
    grad_audio = grad_x[:audio_size]
    grad_fused = grad_x[audio_size : audio_size + fusion_size]
    grad_depth = grad_x[audio_size + fusion_size :]

    if grad_audio_features is not None:
        grad_audio = grad_audio + grad_audio_features

    encode_audio_backward(params, grad_audio, cache.audio, grads)
    grad_spatial, _ = fuse_audio_visual_backward(params, grad_fused, cache.fusion, grads)
    encode_spatial_audio_backward(params, grad_spatial, cache.spatial, grads)
    encode_depth_backward(params, grad_depth, cache.depth, grads)

    return grads, grad_h_prev
