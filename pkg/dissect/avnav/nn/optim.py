from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dissect.avnav.exception import ShapeError

Params = dict[str, np.ndarray]

DEFAULT_LR = 2.5e-4
DEFAULT_EPS = 1e-5
MAX_GRAD_NORM = 0.5


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: Params) -> AdamState:
        m = {name: np.zeros_like(value) for name, value in params.items()}
        v = {name: np.zeros_like(value) for name, value in params.items()}
        return cls(m, v)


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    lr: float = DEFAULT_LR,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = DEFAULT_EPS,
) -> tuple[Params, AdamState]:
    """Bias-corrected Adam update. Parameters without a gradient are left as they are."""
    step = state.step + 1
    new_params = dict(params)
    m = dict(state.m)
    v = dict(state.v)

    for name in sorted(grads):
        grad = grads[name]
        if grad.shape != params[name].shape:
            raise ShapeError(f"Gradient of {name} has shape {grad.shape}, expected {params[name].shape}")

        m[name] = beta1 * m.get(name, np.zeros_like(grad)) + (1 - beta1) * grad
        v[name] = beta2 * v.get(name, np.zeros_like(grad)) + (1 - beta2) * grad**2
        m_hat = m[name] / (1 - beta1**step)
        v_hat = v[name] / (1 - beta2**step)
        new_params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)

    return new_params, AdamState(m, v, step)


def global_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float(np.sum(grads[name] ** 2)) for name in sorted(grads))))


def clip_global_norm(grads: Params, max_norm: float = MAX_GRAD_NORM) -> Params:
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {name: grad * scale for name, grad in grads.items()}


@dataclass(frozen=True)
class LinearSchedule:
    """Linear decay from ``start`` at update 0 to 0 at ``total`` updates."""

    start: float
    total: int

    def __call__(self, update: int) -> float:
        if self.total <= 0:
            return self.start
        return self.start * max(0.0, 1.0 - update / self.total)
