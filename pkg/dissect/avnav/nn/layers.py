"""Forward and backward passes of the network layers on double precision numpy arrays.

Images are ``(C, H, W)``, convolution kernels ``(out, in, kh, kw)`` and transposed convolution kernels
``(in, out, kh, kw)``. Every ``*_backward`` takes the upstream gradient plus whatever the forward pass needs
and returns gradients in the order of the forward arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dissect.avnav.exception import ShapeError

MASKED_LOGIT = -1e9

Stride = tuple[int, int]


def conv2d_output_shape(height: int, width: int, kernel: tuple[int, int], stride: Stride) -> tuple[int, int]:
    if kernel[0] > height or kernel[1] > width:
        raise ShapeError(f"Kernel {kernel} does not fit a {height}x{width} input")
    return (height - kernel[0]) // stride[0] + 1, (width - kernel[1]) // stride[1] + 1


def tconv2d_output_shape(height: int, width: int, kernel: tuple[int, int], stride: Stride) -> tuple[int, int]:
    return (height - 1) * stride[0] + kernel[0], (width - 1) * stride[1] + kernel[1]


def _windows(x: np.ndarray, kernel: tuple[int, int], stride: Stride, out_shape: tuple[int, int]) -> np.ndarray:
    # (C, Ho, Wo, kh, kw) view, no copy
    windows = sliding_window_view(x, kernel, axis=(1, 2))[:, :: stride[0], :: stride[1]]
    return windows[:, : out_shape[0], : out_shape[1]]


def _scatter(grad: np.ndarray, w: np.ndarray, stride: Stride, out_shape: tuple[int, int]) -> np.ndarray:
    """Spread ``grad (A, Ho, Wo)`` through kernel ``w (A, B, kh, kw)`` into a ``(B, H, W)`` image."""
    _, channels, kh, kw = w.shape
    ho, wo = grad.shape[1:]
    result = np.zeros((channels, *out_shape))
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride[0] * (ho - 1) + 1, stride[0])
            cols = slice(j, j + stride[1] * (wo - 1) + 1, stride[1])
            result[:, rows, cols] += np.tensordot(w[:, :, i, j], grad, axes=([0], [0]))
    return result


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], stride: Stride = (1, 1)) -> np.ndarray:
    """Cross-correlation ``S(i, j) = sum_c sum_m sum_n I(c, i*s + m, j*s + n) K(c, m, n)`` plus bias."""
    if x.ndim != 3 or w.ndim != 4 or x.shape[0] != w.shape[1]:
        raise ShapeError(f"Cannot convolve input {x.shape} with kernel {w.shape}")

    out_shape = conv2d_output_shape(x.shape[1], x.shape[2], w.shape[2:], stride)
    windows = _windows(x, w.shape[2:], stride, out_shape)
    out = np.tensordot(w, windows, axes=([1, 2, 3], [0, 3, 4]))
    if b is not None:
        out += b[:, None, None]
    return out


def conv2d_backward(
    grad_out: np.ndarray, x: np.ndarray, w: np.ndarray, stride: Stride = (1, 1)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(grad_x, grad_w, grad_b)`` of :func:`conv2d_forward`."""
    out_shape = grad_out.shape[1:]
    if grad_out.shape[0] != w.shape[0] or out_shape != conv2d_output_shape(x.shape[1], x.shape[2], w.shape[2:], stride):
        raise ShapeError(f"Gradient {grad_out.shape} does not match input {x.shape} and kernel {w.shape}")

    windows = _windows(x, w.shape[2:], stride, out_shape)
    grad_w = np.tensordot(grad_out, windows, axes=([1, 2], [1, 2]))
    grad_b = grad_out.sum(axis=(1, 2))
    grad_x = _scatter(grad_out, w, stride, x.shape[1:])
    return grad_x, grad_w, grad_b


def tconv2d_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], stride: Stride = (1, 1)) -> np.ndarray:
    """Transposed convolution, the adjoint of :func:`conv2d_forward` with the same kernel and stride."""
    if x.ndim != 3 or w.ndim != 4 or x.shape[0] != w.shape[0]:
        raise ShapeError(f"Cannot transpose-convolve input {x.shape} with kernel {w.shape}")

    out = _scatter(x, w, stride, tconv2d_output_shape(x.shape[1], x.shape[2], w.shape[2:], stride))
    if b is not None:
        out += b[:, None, None]
    return out


def tconv2d_backward(
    grad_out: np.ndarray, x: np.ndarray, w: np.ndarray, stride: Stride = (1, 1)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(grad_x, grad_w, grad_b)`` of :func:`tconv2d_forward`."""
    expected = (w.shape[1], *tconv2d_output_shape(x.shape[1], x.shape[2], w.shape[2:], stride))
    if grad_out.shape != expected:
        raise ShapeError(f"Gradient {grad_out.shape} does not match expected {expected}")

    windows = _windows(grad_out, w.shape[2:], stride, x.shape[1:])
    grad_x = np.tensordot(w, windows, axes=([1, 2, 3], [0, 3, 4]))
    grad_w = np.tensordot(x, windows, axes=([1, 2], [1, 2]))
    grad_b = grad_out.sum(axis=(1, 2))
    return grad_x, grad_w, grad_b


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], stride: int = 1) -> np.ndarray:
    """1-D convolution of ``x (C, L)`` with ``w (out, C, k)``."""
    return conv2d_forward(x[:, None, :], w[:, :, None, :], b, (1, stride))[:, 0, :]


def conv1d_backward(
    grad_out: np.ndarray, x: np.ndarray, w: np.ndarray, stride: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grad_x, grad_w, grad_b = conv2d_backward(grad_out[:, None, :], x[:, None, :], w[:, :, None, :], (1, stride))
    return grad_x[:, 0, :], grad_w[:, :, 0, :], grad_b


def linear_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray]) -> np.ndarray:
    if x.ndim != 1 or w.ndim != 2 or w.shape[1] != x.shape[0]:
        raise ShapeError(f"Cannot apply weight {w.shape} to input {x.shape}")
    out = w @ x
    if b is not None:
        out = out + b
    return out


def linear_backward(grad_out: np.ndarray, x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if grad_out.shape != (w.shape[0],):
        raise ShapeError(f"Gradient {grad_out.shape} does not match weight {w.shape}")
    return w.T @ grad_out, np.outer(grad_out, x), grad_out.copy()


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def resample_indices(size: int, target: int) -> np.ndarray:
    return (np.arange(target) * size) // target


def resample_nearest_forward(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Nearest neighbor resampling of ``(C, H, W)`` to ``(C, *shape)``."""
    rows = resample_indices(x.shape[1], shape[0])
    cols = resample_indices(x.shape[2], shape[1])
    return x[:, rows[:, None], cols[None, :]]


def resample_nearest_backward(grad_out: np.ndarray, in_shape: tuple[int, int]) -> np.ndarray:
    rows = resample_indices(in_shape[0], grad_out.shape[1])
    cols = resample_indices(in_shape[1], grad_out.shape[2])
    grad_x = np.zeros((grad_out.shape[0], *in_shape))
    np.add.at(grad_x, (slice(None), rows[:, None], cols[None, :]), grad_out)
    return grad_x


@dataclass
class GruParams:
    W_r: np.ndarray
    U_r: np.ndarray
    W_z: np.ndarray
    U_z: np.ndarray
    W: np.ndarray
    U: np.ndarray

    NAMES = ("W_r", "U_r", "W_z", "U_z", "W", "U")

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W.shape[0]

    def validate(self) -> None:
        hidden, inputs = self.hidden_size, self.input_size
        for name in self.NAMES:
            expected = (hidden, inputs) if name.startswith("W") else (hidden, hidden)
            if getattr(self, name).shape != expected:
                raise ShapeError(f"GRU weight {name} has shape {getattr(self, name).shape}, expected {expected}")


@dataclass
class GruCache:
    x: np.ndarray
    h_prev: np.ndarray
    r: np.ndarray
    z: np.ndarray
    candidate: np.ndarray


def gru_cell(x: np.ndarray, h_prev: np.ndarray, p: GruParams) -> tuple[np.ndarray, GruCache]:
    """One bias-free GRU step: ``h = z * h_prev + (1 - z) * tanh(W x + U (r * h_prev))``."""
    if x.shape != (p.input_size,) or h_prev.shape != (p.hidden_size,):
        raise ShapeError(f"GRU input {x.shape} / state {h_prev.shape} do not match {p.input_size}/{p.hidden_size}")

    r = sigmoid(p.W_r @ x + p.U_r @ h_prev)
    z = sigmoid(p.W_z @ x + p.U_z @ h_prev)
    candidate = np.tanh(p.W @ x + p.U @ (r * h_prev))
    h_new = z * h_prev + (1.0 - z) * candidate
    return h_new, GruCache(x, h_prev, r, z, candidate)


def gru_cell_backward(grad_h: np.ndarray, cache: GruCache, p: GruParams) -> tuple[np.ndarray, np.ndarray, GruParams]:
    """Return ``(grad_x, grad_h_prev, grad_params)`` of :func:`gru_cell`."""
    x, h_prev, r, z, candidate = cache.x, cache.h_prev, cache.r, cache.z, cache.candidate

    grad_z = grad_h * (h_prev - candidate)
    grad_candidate = grad_h * (1.0 - z)
    grad_h_prev = grad_h * z

    pre_candidate = grad_candidate * (1.0 - candidate**2)
    grad_reset_h = p.U.T @ pre_candidate
    grad_r = grad_reset_h * h_prev
    grad_h_prev += grad_reset_h * r

    pre_z = grad_z * z * (1.0 - z)
    pre_r = grad_r * r * (1.0 - r)

    grad_x = p.W.T @ pre_candidate + p.W_z.T @ pre_z + p.W_r.T @ pre_r
    grad_h_prev += p.U_z.T @ pre_z + p.U_r.T @ pre_r

    grads = GruParams(
        W_r=np.outer(pre_r, x),
        U_r=np.outer(pre_r, h_prev),
        W_z=np.outer(pre_z, x),
        U_z=np.outer(pre_z, h_prev),
        W=np.outer(pre_candidate, x),
        U=np.outer(pre_candidate, r * h_prev),
    )
    return grad_x, grad_h_prev, grads


@dataclass
class CategoricalOutput:
    probs: np.ndarray
    log_probs: np.ndarray
    entropy: float
    mask: np.ndarray

    def log_prob(self, action: int) -> float:
        return float(self.log_probs[action])

    def grad_log_prob(self, action: int) -> np.ndarray:
        """Gradient of ``log_prob(action)`` with respect to the raw logits."""
        grad = -self.probs.copy()
        grad[action] += 1.0
        grad[~self.mask] = 0.0
        return grad

    def grad_entropy(self) -> np.ndarray:
        grad = np.zeros_like(self.probs)
        p = self.probs[self.mask]
        grad[self.mask] = -p * (np.log(p) + self.entropy)
        return grad


def categorical_head(logits: np.ndarray, mask: Optional[np.ndarray] = None) -> CategoricalOutput:
    """Softmax over the unmasked logits; masked entries get probability exactly zero."""
    mask = np.ones(logits.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != logits.shape:
        raise ShapeError(f"Mask {mask.shape} does not match logits {logits.shape}")
    if not mask.any():
        raise ValueError("All actions are masked")

    masked = np.where(mask, logits, MASKED_LOGIT)
    shifted = masked - masked.max()
    log_norm = np.log(np.sum(np.exp(shifted)))
    log_probs = shifted - log_norm
    probs = np.exp(log_probs)
    probs[~mask] = 0.0

    entropy = float(-np.sum(probs[mask] * log_probs[mask]))
    return CategoricalOutput(probs, log_probs, entropy, mask)


@dataclass
class GaussianOutput:
    mean: np.ndarray
    log_std: np.ndarray
    log_prob: float
    entropy: float
    grad_log_prob_mean: np.ndarray
    grad_log_prob_log_std: np.ndarray

    @property
    def grad_entropy_log_std(self) -> np.ndarray:
        return np.ones_like(self.log_std)


def gaussian_head(mean: np.ndarray, log_std: np.ndarray, action: np.ndarray) -> GaussianOutput:
    """Diagonal Gaussian log-density of ``action`` and the entropy, with their gradients."""
    std = np.exp(log_std)
    z = (action - mean) / std
    log_prob = float(np.sum(-0.5 * z**2 - log_std - 0.5 * np.log(2 * np.pi)))
    entropy = float(np.sum(log_std + 0.5 * np.log(2 * np.pi * np.e)))
    return GaussianOutput(
        mean=mean,
        log_std=log_std,
        log_prob=log_prob,
        entropy=entropy,
        grad_log_prob_mean=z / std,
        grad_log_prob_log_std=z**2 - 1.0,
    )
