from typing import Optional

import numpy as np
import pytest
from util import numeric_grad, random_inputs, relative_error, sample_indices, tiny_arch, tiny_params

from dissect.avnav.agent.policy import PolicyArch, PolicyParameters, policy_forward
from dissect.avnav.exception import ShapeError
from dissect.avnav.nn.layers import categorical_head, gaussian_head
from dissect.avnav.nn.optim import AdamState
from dissect.avnav.ppo.algorithm import (
    AdvantageEstimate,
    aux_reconstruction_loss,
    clipped_surrogate,
    compute_gae,
    normalize_advantages,
    ppo_loss,
)
from dissect.avnav.ppo.rollout import RolloutBatch, Transition
from dissect.avnav.ppo.update import PPOConfig, estimate_advantages, minibatch_loss, update


def brute_force_gae(
    rewards: np.ndarray, values: np.ndarray, dones: np.ndarray, bootstrap: float, gamma: float, tau: float
) -> np.ndarray:
    n = len(rewards)
    next_values = np.append(values[1:], bootstrap)
    deltas = rewards + gamma * next_values * (1 - dones) - values
    advantages = np.zeros(n)
    for t in range(n):
        weight = 1.0
        for k in range(t, n):
            advantages[t] += weight * deltas[k]
            if dones[k]:
                break
            weight *= gamma * tau
    return advantages


def test_gae_example():
    estimate = compute_gae(np.ones(3), np.zeros(3), np.array([0, 0, 1]), 5.0)
    assert np.allclose(estimate.advantages, [2.82504025, 1.9405, 1.0], atol=1e-12)
    assert np.array_equal(estimate.returns, estimate.advantages)


def test_gae_bootstrap():
    estimate = compute_gae(np.zeros(1), np.array([0.5]), np.zeros(1), 2.0)
    assert abs(estimate.advantages[0] - (0.99 * 2.0 - 0.5)) < 1e-12
    assert abs(estimate.returns[0] - 1.98) < 1e-12


def test_gae_random_sequences():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        rewards = rng.normal(size=n)
        values = rng.normal(size=n)
        dones = (rng.random(n) < 0.2).astype(np.float64)
        bootstrap = float(rng.normal())
        gamma, tau = rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)

        estimate = compute_gae(rewards, values, dones, bootstrap, gamma, tau)
        expected = brute_force_gae(rewards, values, dones, bootstrap, gamma, tau)
        assert np.max(np.abs(estimate.advantages - expected)) < 1e-10


def test_gae_invalid():
    with pytest.raises(ShapeError):
        compute_gae(np.zeros(3), np.zeros(2), np.zeros(3), 0.0)


def test_normalize_advantages():
    advantages = normalize_advantages(np.random.default_rng(1).normal(3.0, 2.0, size=100))
    assert abs(advantages.mean()) < 1e-12
    assert abs(advantages.std() - 1.0) < 1e-6


def test_clipped_surrogate():
    surrogate = clipped_surrogate(np.array([1.2, 0.8, 1.05, 0.8]), np.array([1.0, -1.0, 2.0, 1.0]), 0.1)
    assert np.allclose(surrogate, [1.1, -0.9, 2.1, 0.8], atol=1e-12)


def test_ppo_loss_gradients():
    rng = np.random.default_rng(2)
    n = 8
    log_probs_old = rng.normal(-1.0, 0.3, size=n)
    log_probs_new = log_probs_old + rng.normal(0.0, 0.3, size=n)
    advantages = rng.normal(size=n)
    values = rng.normal(size=n)
    returns = rng.normal(size=n)
    entropies = rng.uniform(0.5, 2.0, size=n)

    def loss() -> float:
        return ppo_loss(log_probs_new, log_probs_old, advantages, values, returns, entropies)[0].total

    components, grads = ppo_loss(log_probs_new, log_probs_old, advantages, values, returns, entropies)
    assert abs(components.total - (components.clip + 0.5 * components.value - 0.02 * components.entropy)) < 1e-12
    assert relative_error(grads.log_prob, numeric_grad(loss, log_probs_new)) < 1e-6
    assert relative_error(grads.value, numeric_grad(loss, values)) < 1e-6
    assert relative_error(grads.entropy, numeric_grad(loss, entropies)) < 1e-6


def test_ppo_loss_empty():
    with pytest.raises(ShapeError):
        ppo_loss(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))


def test_aux_reconstruction_loss():
    loss, grad = aux_reconstruction_loss(np.zeros((2, 3)), np.ones((2, 3)))
    assert loss == 1.0
    assert np.allclose(grad, -1.0 / 3.0)
    with pytest.raises(ShapeError):
        aux_reconstruction_loss(np.zeros((2, 3)), np.zeros((3, 2)))


def make_segment(
    arch: PolicyArch, params: PolicyParameters, rng: np.random.Generator, length: int, done_at: Optional[int] = None
) -> list[Transition]:
    """Transitions recorded with ``params`` itself, so every probability ratio starts at one."""
    hidden = rng.normal(0.0, 0.5, size=arch.hidden_size)
    transitions = []
    for t in range(length):
        inputs = random_inputs(arch, rng)
        out, _ = policy_forward(params, inputs, hidden)
        if arch.continuous:
            mask = None
            action = rng.normal(size=2)
            log_prob = gaussian_head(out.head, params["actor.log_std"], action).log_prob
        else:
            mask = rng.random(arch.num_outputs) < 0.7
            mask[4] = True
            action = np.array(int(rng.choice(np.flatnonzero(mask))))
            log_prob = categorical_head(out.head, mask).log_prob(int(action))

        done = t == done_at
        transitions.append(Transition(inputs, mask, action, log_prob, out.value, float(rng.normal()), done, hidden))
        hidden = np.zeros_like(out.h_new) if done else out.h_new
    return transitions


@pytest.mark.parametrize("continuous", [False, True])
def test_minibatch_loss_gradients(continuous: bool):
    arch = tiny_arch(continuous=continuous)
    params = tiny_params(arch, 3)
    if continuous:
        params = params.replace({**params.tensors, "actor.log_std": np.array([-0.3, 0.2])})

    rng = np.random.default_rng(4)
    segments = [make_segment(arch, params, rng, 3, done_at=1), make_segment(arch, params, rng, 2)]
    advantages = [rng.normal(size=len(segment)) for segment in segments]
    returns = [rng.normal(size=len(segment)) for segment in segments]
    config = PPOConfig()

    def loss() -> float:
        return minibatch_loss(params, segments, advantages, returns, config, 0.1)[0].total

    components, grads = minibatch_loss(params, segments, advantages, returns, config, 0.1)
    assert abs(components.clip + np.mean(np.concatenate(advantages))) < 1e-12
    assert set(grads) == set(arch.shapes())

    for name in grads:
        indices = sample_indices(params[name].shape, rng, 3)
        numeric = numeric_grad(loss, params[name], 1e-6, indices)
        a = np.array([grads[name][idx] for idx in indices])
        b = np.array([numeric[idx] for idx in indices])
        assert np.allclose(a, b, rtol=1e-3, atol=1e-6), name


def test_minibatch_loss_aux():
    arch = tiny_arch(reconstruction=True)
    params = tiny_params(arch, 5)
    rng = np.random.default_rng(6)
    segments = [make_segment(arch, params, rng, 2)]
    advantages, returns = [np.zeros(2)], [np.zeros(2)]

    plain, plain_grads = minibatch_loss(params, segments, advantages, returns, PPOConfig(), 0.1)
    aux, aux_grads = minibatch_loss(params, segments, advantages, returns, PPOConfig(aux_loss_weight=0.01), 0.1)

    assert plain.aux == 0.0
    assert aux.aux > 0.0
    assert abs(aux.total - plain.total - 0.01 * aux.aux) < 1e-12
    assert not any(name.startswith("decoder.") for name in plain_grads)
    assert any(name.startswith("decoder.") for name in aux_grads)


def make_batch(segments: list) -> RolloutBatch:
    return RolloutBatch(segments, np.zeros(len(segments)))


def test_estimate_advantages_layout():
    arch = tiny_arch()
    params = tiny_params(arch)
    rng = np.random.default_rng(7)
    batch = make_batch([make_segment(arch, params, rng, 3, done_at=2), make_segment(arch, params, rng, 3)])

    estimate = estimate_advantages(batch)
    assert estimate.advantages.shape == (2, 3)
    row = compute_gae(batch.rewards[1], batch.values[1], batch.dones[1], 0.0)
    assert np.array_equal(estimate.advantages[1], row.advantages)


def test_update_without_signal():
    arch = tiny_arch()
    params = tiny_params(arch)
    batch = make_batch([make_segment(arch, params, np.random.default_rng(8), 3)])
    estimate = AdvantageEstimate(np.zeros((1, 3)), np.zeros((1, 3)))
    config = PPOConfig(value_coef=0.0, entropy_coef=0.0, normalize_advantages=False)

    new, state, stats = update(params, batch, estimate, AdamState.for_params(params.tensors), config)
    assert all(np.array_equal(new[name], params[name]) for name in params)
    assert state.step == config.epochs
    assert stats.grad_norm == 0.0


def test_update_schedules():
    arch = tiny_arch()
    params = tiny_params(arch)
    batch = make_batch([make_segment(arch, params, np.random.default_rng(9), 2)])
    estimate = AdvantageEstimate(np.zeros((1, 2)), np.zeros((1, 2)))
    config = PPOConfig(epochs=1)

    _, _, first = update(params, batch, estimate, AdamState.for_params(params.tensors), config, 0, 100)
    _, _, last = update(params, batch, estimate, AdamState.for_params(params.tensors), config, 99, 100)
    assert first.lr == config.lr
    assert last.lr < 1e-5
    assert last.clip_param < first.clip_param

    fixed_config = PPOConfig(epochs=1, linear_lr_decay=False)
    _, _, fixed = update(params, batch, estimate, AdamState.for_params(params.tensors), fixed_config, 99, 100)
    assert fixed.lr == config.lr


def test_update_prefers_rewarded_action():
    arch = tiny_arch()
    params = tiny_params(arch, 10)
    rng = np.random.default_rng(10)
    inputs = random_inputs(arch, rng)
    hidden = np.zeros(arch.hidden_size)
    mask = np.ones(arch.num_outputs, dtype=bool)

    out, _ = policy_forward(params, inputs, hidden)
    before = categorical_head(out.head, mask)

    transitions = []
    for idx in range(63):
        action = idx % arch.num_outputs
        reward = 1.0 if action == 2 else 0.0
        transitions.append(
            Transition(inputs, mask, np.array(action), before.log_prob(action), out.value, reward, True, hidden)
        )
    rewards = np.array([t.reward for t in transitions])
    estimate = AdvantageEstimate((rewards - rewards.mean())[None, :], rewards[None, :])
    config = PPOConfig(lr=1e-2, normalize_advantages=False, linear_lr_decay=False, linear_clip_decay=False)

    new, _, _ = update(params, make_batch([transitions]), estimate, AdamState.for_params(params.tensors), config)
    after = categorical_head(policy_forward(new, inputs, hidden)[0].head, mask)
    assert after.probs[2] > before.probs[2]
