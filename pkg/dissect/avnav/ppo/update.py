"""The PPO update: re-unroll the recurrent policy over a rollout batch and take Adam steps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from dissect.avnav.agent.policy import (
    PolicyCache,
    PolicyOutput,
    PolicyParameters,
    decode_audio,
    decode_audio_backward,
    policy_backward,
    policy_forward,
)
from dissect.avnav.nn.layers import CategoricalOutput, GaussianOutput, categorical_head, gaussian_head
from dissect.avnav.nn.optim import (
    DEFAULT_EPS,
    DEFAULT_LR,
    MAX_GRAD_NORM,
    AdamState,
    LinearSchedule,
    Params,
    adam_step,
    clip_global_norm,
    global_norm,
)
from dissect.avnav.ppo.algorithm import (
    CLIP_PARAM,
    ENTROPY_COEF,
    GAMMA,
    TAU,
    VALUE_COEF,
    AdvantageEstimate,
    LossComponents,
    aux_reconstruction_loss,
    compute_gae,
    normalize_advantages,
    ppo_loss,
)
from dissect.avnav.ppo.rollout import RolloutBatch, Transition

log = logging.getLogger(__name__)

Distribution = Union[CategoricalOutput, GaussianOutput]


@dataclass(frozen=True)
class PPOConfig:
    clip_param: float = CLIP_PARAM
    value_coef: float = VALUE_COEF
    entropy_coef: float = ENTROPY_COEF
    epochs: int = 4
    num_minibatches: int = 1
    lr: float = DEFAULT_LR
    adam_eps: float = DEFAULT_EPS
    max_grad_norm: float = MAX_GRAD_NORM
    gamma: float = GAMMA
    tau: float = TAU
    aux_loss_weight: float = 0.0
    linear_lr_decay: bool = True
    linear_clip_decay: bool = True
    normalize_advantages: bool = True


@dataclass
class UpdateStats:
    loss_clip: float
    loss_value: float
    entropy: float
    loss_aux: float
    total: float
    lr: float
    clip_param: float
    grad_norm: float


def estimate_advantages(batch: RolloutBatch, gamma: float = GAMMA, tau: float = TAU) -> AdvantageEstimate:
    """GAE per environment row; the result has the ``(n_envs, n_steps)`` layout of the batch."""
    rewards, values, dones = batch.rewards, batch.values, batch.dones
    advantages = np.zeros_like(rewards)
    returns = np.zeros_like(rewards)
    for env in range(batch.n_envs):
        estimate = compute_gae(rewards[env], values[env], dones[env], batch.bootstrap_values[env], gamma, tau)
        advantages[env] = estimate.advantages
        returns[env] = estimate.returns
    return AdvantageEstimate(advantages, returns)


def _distribution(params: PolicyParameters, out: PolicyOutput, transition: Transition) -> Distribution:
    if params.arch.continuous:
        return gaussian_head(out.head, params["actor.log_std"], transition.action)
    return categorical_head(out.head, transition.mask)


@dataclass
class _Unrolled:
    outputs: list[PolicyOutput]
    caches: list[PolicyCache]
    distributions: list[Distribution]


def _unroll(params: PolicyParameters, transitions: list[Transition]) -> _Unrolled:
    """Recompute one environment's segment from its stored start state, resetting at episode ends."""
    unrolled = _Unrolled([], [], [])
    hidden = transitions[0].hidden
    for transition in transitions:
        out, cache = policy_forward(params, transition.inputs, hidden)
        unrolled.outputs.append(out)
        unrolled.caches.append(cache)
        unrolled.distributions.append(_distribution(params, out, transition))
        hidden = np.zeros_like(out.h_new) if transition.done else out.h_new
    return unrolled


def _log_prob(dist: Distribution, transition: Transition) -> float:
    if isinstance(dist, GaussianOutput):
        return dist.log_prob
    return dist.log_prob(int(transition.action))


def minibatch_loss(
    params: PolicyParameters,
    segments: list[list[Transition]],
    advantages: list[np.ndarray],
    returns: list[np.ndarray],
    config: PPOConfig,
    clip_param: float,
) -> tuple[LossComponents, Params]:
    """Loss of a set of environment segments and its gradient with respect to every parameter."""
    unrolled = [_unroll(params, segment) for segment in segments]

    flat = [
        (transition, dist, out)
        for segment, run in zip(segments, unrolled)
        for transition, dist, out in zip(segment, run.distributions, run.outputs)
    ]
    components, loss_grads = ppo_loss(
        log_probs_new=np.array([_log_prob(dist, transition) for transition, dist, _ in flat]),
        log_probs_old=np.array([transition.log_prob for transition, _, _ in flat]),
        advantages=np.concatenate(advantages),
        values_new=np.array([out.value for _, _, out in flat]),
        returns=np.concatenate(returns),
        entropies=np.array([dist.entropy for _, dist, _ in flat]),
        clip_param=clip_param,
        value_coef=config.value_coef,
        entropy_coef=config.entropy_coef,
    )

    n = len(flat)
    use_aux = config.aux_loss_weight > 0 and params.arch.reconstruction
    grads: Params = {}
    aux_total = 0.0

    offset = 0
    for segment, run in zip(segments, unrolled):
        grad_h_next = None
        for t in reversed(range(len(segment))):
            transition, dist, out = segment[t], run.distributions[t], run.outputs[t]
            slot = offset + t
            d_log_prob, d_entropy = loss_grads.log_prob[slot], loss_grads.entropy[slot]

            if isinstance(dist, GaussianOutput):
                grad_head = d_log_prob * dist.grad_log_prob_mean
                grad_log_std = d_log_prob * dist.grad_log_prob_log_std + d_entropy * dist.grad_entropy_log_std
                grads["actor.log_std"] = grads.get("actor.log_std", 0.0) + grad_log_std
            else:
                grad_head = d_log_prob * dist.grad_log_prob(int(transition.action)) + d_entropy * dist.grad_entropy()

            grad_audio_features = None
            if use_aux:
                decoded, decoder_cache = decode_audio(params, out.audio_features)
                loss, grad_decoded = aux_reconstruction_loss(decoded, transition.inputs.audio)
                aux_total += loss / n
                grad_audio_features = decode_audio_backward(
                    params, config.aux_loss_weight * grad_decoded / n, decoder_cache, grads
                )

            # No gradient flows across an episode boundary, the next step started from zeros
            grad_h_new = None if transition.done else grad_h_next
            grads, grad_h_next = policy_backward(
                params,
                run.caches[t],
                grad_head,
                loss_grads.value[slot],
                grad_h_new=grad_h_new,
                grad_audio_features=grad_audio_features,
                grads=grads,
            )
        offset += len(segment)

    if use_aux:
        components.aux = aux_total
        components.total += config.aux_loss_weight * aux_total
    return components, grads


def update(
    params: PolicyParameters,
    batch: RolloutBatch,
    estimate: AdvantageEstimate,
    optimizer: AdamState,
    config: PPOConfig = PPOConfig(),
    update_index: int = 0,
    num_updates: int = 0,
) -> tuple[PolicyParameters, AdamState, UpdateStats]:
    """Run ``config.epochs`` passes over the batch.

    Minibatches are groups of whole environment rows so every segment can be re-unrolled from its start
    state. Learning rate and clip parameter decay linearly to zero over ``num_updates``.
    """
    lr = LinearSchedule(config.lr, num_updates)(update_index) if config.linear_lr_decay else config.lr
    clip_param = (
        LinearSchedule(config.clip_param, num_updates)(update_index) if config.linear_clip_decay else config.clip_param
    )

    advantages = estimate.advantages
    if config.normalize_advantages:
        advantages = normalize_advantages(advantages.reshape(-1)).reshape(advantages.shape)

    groups = np.array_split(np.arange(batch.n_envs), max(1, min(config.num_minibatches, batch.n_envs)))
    history = []
    for epoch in range(config.epochs):
        for group in groups:
            components, grads = minibatch_loss(
                params,
                [batch.transitions[env] for env in group],
                [advantages[env] for env in group],
                [estimate.returns[env] for env in group],
                config,
                clip_param,
            )
            norm = global_norm(grads)
            grads = clip_global_norm(grads, config.max_grad_norm)
            tensors, optimizer = adam_step(params.tensors, grads, optimizer, lr=lr, eps=config.adam_eps)
            params = params.replace(tensors)
            history.append((components, norm))
        log.debug("Epoch %d: loss %.5f", epoch, history[-1][0].total)

    stats = UpdateStats(
        loss_clip=float(np.mean([c.clip for c, _ in history])),
        loss_value=float(np.mean([c.value for c, _ in history])),
        entropy=float(np.mean([c.entropy for c, _ in history])),
        loss_aux=float(np.mean([c.aux for c, _ in history])),
        total=float(np.mean([c.total for c, _ in history])),
        lr=lr,
        clip_param=clip_param,
        grad_norm=float(np.mean([norm for _, norm in history])),
    )
    return params, optimizer, stats
