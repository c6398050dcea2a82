"""
Forward pass, sampling and backpropagation through time for the policy
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from .models import Architecture, HiddenState, PolicyError, PolicyOutput, PolicyParams

FORGET_GATE_BIAS = 1.0


def init_params(arch: Architecture, rng: np.random.Generator) -> PolicyParams:
    """
    Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero, forget-gate
    bias 1. Tensors are drawn in checkpoint order.
    """
    tensors = {}
    for name, shape in arch.layer_shapes():
        if len(shape) == 2:
            bound = 1.0 / math.sqrt(shape[1])
            tensors[name] = rng.uniform(-bound, bound, size=shape)
        else:
            tensors[name] = np.zeros(shape, dtype=np.float64)
    width = arch.lstm_width
    tensors["lstm.b"][width:2 * width] = FORGET_GATE_BIAS
    return PolicyParams(architecture=arch, tensors=tensors)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _masked_softmax(logits: np.ndarray, mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (masked logits, probabilities, log-probabilities)."""
    if not mask.any():
        raise PolicyError("Action mask excludes every action")
    masked = np.where(mask, logits, -np.inf)
    shifted = masked - masked[mask].max()
    exp = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
    total = exp.sum()
    probs = exp / total
    log_probs = np.where(mask, shifted - math.log(total), -np.inf)
    return masked, probs, log_probs


@dataclass
class StepCache:
    """Intermediate values of one forward step, consumed by backward."""
    features: List[np.ndarray]
    h_prev: np.ndarray
    c_prev: np.ndarray
    gate_i: np.ndarray
    gate_f: np.ndarray
    gate_g: np.ndarray
    gate_o: np.ndarray
    tanh_c: np.ndarray
    actor: List[np.ndarray]
    critic: List[np.ndarray]
    mask: np.ndarray
    log_probs: np.ndarray


@dataclass
class EpisodeForward:
    """Unrolled forward pass over one episode."""
    probs: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    caches: List[StepCache] = field(repr=False)
    final_hidden: Optional[HiddenState] = field(default=None, repr=False)


def _mlp_forward(
    params: PolicyParams,
    prefix: str,
    depth: int,
    inputs: np.ndarray,
    linear_output: bool,
) -> List[np.ndarray]:
    activations = [inputs]
    for k in range(depth):
        z = params[f"{prefix}.{k}.W"] @ activations[-1] + params[f"{prefix}.{k}.b"]
        last = k == depth - 1
        activations.append(z if (last and linear_output) else np.tanh(z))
    return activations


def _step(
    params: PolicyParams,
    obs: np.ndarray,
    hidden: HiddenState,
    mask: np.ndarray,
) -> Tuple[PolicyOutput, HiddenState, StepCache]:
    arch = params.architecture
    if obs.shape != (arch.input_dim,):
        raise PolicyError(f"Observation shape {obs.shape}, expected ({arch.input_dim},)")
    if mask.shape != (arch.n_actions,):
        raise PolicyError(f"Mask shape {mask.shape}, expected ({arch.n_actions},)")
    if not np.isfinite(obs).all():
        raise PolicyError("Observation contains non-finite values")

    features = _mlp_forward(params, "feature", len(arch.feature_layers), obs, linear_output=False)

    width = arch.lstm_width
    pre = params["lstm.W_x"] @ features[-1] + params["lstm.W_h"] @ hidden.h + params["lstm.b"]
    gate_i = _sigmoid(pre[:width])
    gate_f = _sigmoid(pre[width:2 * width])
    gate_g = np.tanh(pre[2 * width:3 * width])
    gate_o = _sigmoid(pre[3 * width:])
    c = gate_f * hidden.c + gate_i * gate_g
    tanh_c = np.tanh(c)
    h = gate_o * tanh_c

    actor = _mlp_forward(params, "actor", len(arch.actor_layers), h, linear_output=True)
    critic = _mlp_forward(params, "critic", len(arch.critic_layers), h, linear_output=True)
    logits, probs, log_probs = _masked_softmax(actor[-1], mask)

    output = PolicyOutput(action_probs=probs, value=float(critic[-1][0]), logits=logits)
    cache = StepCache(
        features=features, h_prev=hidden.h, c_prev=hidden.c,
        gate_i=gate_i, gate_f=gate_f, gate_g=gate_g, gate_o=gate_o, tanh_c=tanh_c,
        actor=actor, critic=critic, mask=mask, log_probs=log_probs,
    )
    return output, HiddenState(h=h, c=c), cache


def forward(
    params: PolicyParams,
    obs: np.ndarray,
    hidden: HiddenState,
    mask: Optional[np.ndarray] = None,
) -> Tuple[PolicyOutput, HiddenState]:
    """One recurrent step: features -> LSTM -> actor softmax and critic value."""
    if mask is None:
        mask = np.ones(params.architecture.n_actions, dtype=bool)
    output, hidden, _ = _step(params, np.asarray(obs, dtype=np.float64), hidden, np.asarray(mask, dtype=bool))
    return output, hidden


def forward_episode(
    params: PolicyParams,
    observations: np.ndarray,
    masks: np.ndarray,
    hidden: Optional[HiddenState] = None,
) -> EpisodeForward:
    """Unroll the policy over a (T, input_dim) observation sequence."""
    hidden = hidden or HiddenState.zeros(params.architecture.lstm_width)
    probs, log_probs, values, caches = [], [], [], []
    for obs, mask in zip(np.asarray(observations, dtype=np.float64), np.asarray(masks, dtype=bool)):
        output, hidden, cache = _step(params, obs, hidden, mask)
        probs.append(output.action_probs)
        log_probs.append(cache.log_probs)
        values.append(output.value)
        caches.append(cache)
    return EpisodeForward(
        probs=np.array(probs),
        log_probs=np.array(log_probs),
        values=np.array(values),
        caches=caches,
        final_hidden=hidden,
    )


def sample_action(
    output: PolicyOutput,
    rng: np.random.Generator,
    mode: Literal["stochastic", "greedy"] = "stochastic",
) -> int:
    """Draw an action index; greedy takes the argmax, ties to the lowest index."""
    if mode == "greedy":
        return int(np.argmax(output.action_probs))
    return int(rng.choice(len(output.action_probs), p=output.action_probs))


def _mlp_backward(
    params: PolicyParams,
    grads: Dict[str, np.ndarray],
    prefix: str,
    activations: List[np.ndarray],
    d_output: np.ndarray,
    linear_output: bool,
) -> np.ndarray:
    depth = len(activations) - 1
    dz = d_output if linear_output else d_output * (1.0 - activations[-1] ** 2)
    for k in reversed(range(depth)):
        weight = params[f"{prefix}.{k}.W"]
        grads[f"{prefix}.{k}.W"] += np.outer(dz, activations[k])
        grads[f"{prefix}.{k}.b"] += dz
        d_input = weight.T @ dz
        if k > 0:
            dz = d_input * (1.0 - activations[k] ** 2)
    return d_input


def backward(
    params: PolicyParams,
    episode: EpisodeForward,
    d_logits: np.ndarray,
    d_values: np.ndarray,
) -> Dict[str, np.ndarray]:
    """
    Reverse-mode gradients through all layers and through time.

    ``d_logits`` (T, n_actions) and ``d_values`` (T,) are the derivatives of a
    scalar loss with respect to the logits and critic values of each step.
    Entries for masked actions are ignored.
    """
    arch = params.architecture
    steps = len(episode.caches)
    if d_logits.shape != (steps, arch.n_actions) or d_values.shape != (steps,):
        raise PolicyError(
            f"Loss gradient shapes {d_logits.shape}/{d_values.shape} do not match "
            f"episode length {steps} and {arch.n_actions} actions"
        )

    grads = params.zeros_like()
    width = arch.lstm_width
    dh_next = np.zeros(width)
    dc_next = np.zeros(width)
    for t in reversed(range(steps)):
        cache = episode.caches[t]
        d_logit = np.where(cache.mask, d_logits[t], 0.0)
        dh = (
            _mlp_backward(params, grads, "actor", cache.actor, d_logit, linear_output=True)
            + _mlp_backward(params, grads, "critic", cache.critic, np.array([d_values[t]]), linear_output=True)
            + dh_next
        )

        dc = dc_next + dh * cache.gate_o * (1.0 - cache.tanh_c ** 2)
        d_pre = np.concatenate([
            dc * cache.gate_g * cache.gate_i * (1.0 - cache.gate_i),
            dc * cache.c_prev * cache.gate_f * (1.0 - cache.gate_f),
            dc * cache.gate_i * (1.0 - cache.gate_g ** 2),
            dh * cache.tanh_c * cache.gate_o * (1.0 - cache.gate_o),
        ])
        x = cache.features[-1]
        grads["lstm.W_x"] += np.outer(d_pre, x)
        grads["lstm.W_h"] += np.outer(d_pre, cache.h_prev)
        grads["lstm.b"] += d_pre
        dh_next = params["lstm.W_h"].T @ d_pre
        dc_next = dc * cache.gate_f

        dx = params["lstm.W_x"].T @ d_pre
        _mlp_backward(params, grads, "feature", cache.features, dx, linear_output=False)

    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            raise PolicyError(f"Non-finite gradient in {name}")
    return grads
