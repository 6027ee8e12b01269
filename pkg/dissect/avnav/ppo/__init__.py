from dissect.avnav.ppo.algorithm import (
    AdvantageEstimate,
    LossComponents,
    LossGradients,
    aux_reconstruction_loss,
    clipped_surrogate,
    compute_gae,
    normalize_advantages,
    ppo_loss,
)
from dissect.avnav.ppo.reward import compute_reward

# Rollout collection, the update step and the trainer depend on the environment and the agent and are
# imported from their own modules.
__all__ = [
    "AdvantageEstimate",
    "LossComponents",
    "LossGradients",
    "aux_reconstruction_loss",
    "clipped_surrogate",
    "compute_gae",
    "compute_reward",
    "normalize_advantages",
    "ppo_loss",
]
