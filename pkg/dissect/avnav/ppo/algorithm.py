from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dissect.avnav.exception import ShapeError

GAMMA = 0.99
TAU = 0.95
CLIP_PARAM = 0.1
VALUE_COEF = 0.5
ENTROPY_COEF = 0.02
AUX_LOSS_WEIGHT = 0.01


@dataclass
class AdvantageEstimate:
    advantages: np.ndarray
    returns: np.ndarray


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float = GAMMA,
    tau: float = TAU,
) -> AdvantageEstimate:
    """Generalized advantage estimation over one environment's contiguous steps.

    ``dones[t]`` marks that the episode ended with step ``t``; ``bootstrap_value`` is the value of the
    observation following the last step. Advantages are returned unnormalized.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (rewards.shape == values.shape == dones.shape) or rewards.ndim != 1:
        raise ShapeError(f"Length mismatch: rewards {rewards.shape}, values {values.shape}, dones {dones.shape}")

    advantages = np.zeros_like(rewards)
    next_value = float(bootstrap_value)
    running = 0.0
    for t in reversed(range(len(rewards))):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        running = delta + gamma * tau * not_done * running
        advantages[t] = running
        next_value = values[t]

    return AdvantageEstimate(advantages, advantages + values)


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + eps)


def clipped_surrogate(ratio: np.ndarray, advantages: np.ndarray, clip_param: float = CLIP_PARAM) -> np.ndarray:
    """Per-sample ``min(r * A, clip(r, 1 - eps, 1 + eps) * A)``."""
    ratio = np.asarray(ratio, dtype=np.float64)
    return np.minimum(ratio * advantages, np.clip(ratio, 1.0 - clip_param, 1.0 + clip_param) * advantages)


@dataclass
class LossComponents:
    total: float
    clip: float
    value: float
    entropy: float
    aux: float = 0.0


@dataclass
class LossGradients:
    """Derivatives of the total loss with respect to every sample's log-probability, value and entropy."""

    log_prob: np.ndarray
    value: np.ndarray
    entropy: np.ndarray


def ppo_loss(
    log_probs_new: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    values_new: np.ndarray,
    returns: np.ndarray,
    entropies: np.ndarray,
    clip_param: float = CLIP_PARAM,
    value_coef: float = VALUE_COEF,
    entropy_coef: float = ENTROPY_COEF,
) -> tuple[LossComponents, LossGradients]:
    """Clipped surrogate plus value and entropy terms, averaged over the samples."""
    log_probs_new = np.asarray(log_probs_new, dtype=np.float64)
    n = len(log_probs_new)
    if n == 0:
        raise ShapeError("Empty batch")

    ratio = np.exp(log_probs_new - np.asarray(log_probs_old, dtype=np.float64))
    unclipped = ratio * advantages
    surrogate = clipped_surrogate(ratio, advantages, clip_param)
    loss_clip = -float(np.mean(surrogate))

    value_error = np.asarray(values_new, dtype=np.float64) - returns
    loss_value = float(np.mean(value_error**2))
    entropy = float(np.mean(entropies))

    total = loss_clip + value_coef * loss_value - entropy_coef * entropy

    # The clipped branch is constant in the new log-probability
    active = unclipped <= surrogate
    gradients = LossGradients(
        log_prob=-(active * unclipped) / n,
        value=value_coef * 2.0 * value_error / n,
        entropy=np.full(n, -entropy_coef / n),
    )
    return LossComponents(total, loss_clip, loss_value, entropy), gradients


def aux_reconstruction_loss(decoded: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared reconstruction error and its gradient with respect to ``decoded``."""
    if decoded.shape != target.shape:
        raise ShapeError(f"Reconstruction {decoded.shape} does not match target {target.shape}")
    error = decoded - target
    return float(np.mean(error**2)), 2.0 * error / error.size
