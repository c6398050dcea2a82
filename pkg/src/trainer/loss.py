"""
Actor-critic loss with exact gradients
"""

from typing import Dict, List, Tuple

import numpy as np

from neural_policy import PolicyParams, backward, forward_episode

from .models import LossDiagnostics, LossTargets, TrainingError, Trajectory
from .rollout import compute_advantages


def on_policy_targets(traj: Trajectory, gamma: float) -> LossTargets:
    returns, advantages = compute_advantages(traj, gamma)
    return LossTargets(returns=returns, advantages=advantages, weights=np.ones(len(traj)))


def replay_targets(
    params: PolicyParams,
    traj: Trajectory,
    gamma: float,
    importance_clip: float,
) -> LossTargets:
    """
    Targets for a stored episode under the current policy: advantages use the
    current critic, policy terms carry min(c, pi/mu) for the taken actions.
    """
    episode = forward_episode(params, traj.observations, traj.masks)
    returns, _ = compute_advantages(traj, gamma)
    steps = np.arange(len(traj))
    current = episode.log_probs[steps, traj.actions]
    ratios = np.exp(current - np.asarray(traj.log_probs))
    return LossTargets(
        returns=returns,
        advantages=returns - episode.values,
        weights=np.minimum(importance_clip, ratios),
    )


def _entropy(probs: np.ndarray, log_probs: np.ndarray, mask: np.ndarray) -> Tuple[float, np.ndarray]:
    plogp = np.where(mask, probs * np.where(mask, log_probs, 0.0), 0.0)
    return float(-plogp.sum()), np.where(mask, log_probs, 0.0)


def actor_critic_loss(
    params: PolicyParams,
    batch: List[Trajectory],
    targets: List[LossTargets],
    value_loss_coef: float,
    entropy_coef: float,
) -> Tuple[LossDiagnostics, Dict[str, np.ndarray]]:
    """
    Mean over all batch steps of
        -w_t A_t log pi(a_t) + c_v (R_t - V_t)^2 - c_e H(pi(.|h_t))
    with A_t, R_t and w_t held constant. Returns diagnostics and gradients.
    """
    if not batch:
        raise TrainingError("Update needs a nonempty batch")
    if len(batch) != len(targets):
        raise TrainingError(f"{len(batch)} trajectories but {len(targets)} target sets")

    total_steps = sum(len(traj) for traj in batch)
    grads = params.zeros_like()
    policy_loss = value_loss = entropy_sum = 0.0
    for traj, target in zip(batch, targets):
        episode = forward_episode(params, traj.observations, traj.masks)
        d_logits = np.zeros_like(episode.probs)
        d_values = np.zeros(len(traj))
        for t, action in enumerate(traj.actions):
            probs = episode.probs[t]
            mask = traj.masks[t]
            coef = target.weights[t] * target.advantages[t]
            policy_loss -= coef * episode.log_probs[t, action]
            onehot = np.zeros_like(probs)
            onehot[action] = 1.0
            d_logits[t] = -coef * (onehot - probs)

            entropy, safe_log = _entropy(probs, episode.log_probs[t], mask)
            entropy_sum += entropy
            d_logits[t] += entropy_coef * np.where(mask, probs * (safe_log + entropy), 0.0)

            error = target.returns[t] - episode.values[t]
            value_loss += error ** 2
            d_values[t] = -2.0 * value_loss_coef * error
        step_grads = backward(params, episode, d_logits / total_steps, d_values / total_steps)
        for name, grad in step_grads.items():
            grads[name] += grad

    policy_loss /= total_steps
    value_loss /= total_steps
    entropy_mean = entropy_sum / total_steps
    loss = policy_loss + value_loss_coef * value_loss - entropy_coef * entropy_mean
    if not np.isfinite(loss):
        raise TrainingError(f"Non-finite loss {loss}")
    diagnostics = LossDiagnostics(
        loss=float(loss),
        policy_loss=float(policy_loss),
        value_loss=float(value_loss),
        entropy=float(entropy_mean),
        grad_norm=global_norm(grads),
    )
    return diagnostics, grads


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def loss_fn_for(
    batch: List[Trajectory],
    targets: List[LossTargets],
    value_loss_coef: float,
    entropy_coef: float,
):
    """Closure ``params -> (loss, grads)`` for gradient checking."""
    def loss_fn(params: PolicyParams) -> Tuple[float, Dict[str, np.ndarray]]:
        diagnostics, grads = actor_critic_loss(params, batch, targets, value_loss_coef, entropy_coef)
        return diagnostics.loss, grads
    return loss_fn
