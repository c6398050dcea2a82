"""
RMSProp with global-norm gradient clipping
"""

from typing import Dict, Optional, Tuple

import numpy as np

from neural_policy import PolicyParams

from .loss import global_norm


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


class RmsProp:
    """theta <- theta - lr * g / (sqrt(E[g^2]) + eps), E[g^2] decayed by alpha."""

    def __init__(self, learning_rate: float, alpha: float = 0.99, eps: float = 1e-5):
        self.learning_rate = learning_rate
        self.alpha = alpha
        self.eps = eps
        self.square_avg: Optional[Dict[str, np.ndarray]] = None

    def step(self, params: PolicyParams, grads: Dict[str, np.ndarray]) -> PolicyParams:
        if self.square_avg is None:
            self.square_avg = params.zeros_like()
        tensors = {}
        for name, tensor in params.tensors.items():
            avg = self.square_avg[name]
            avg *= self.alpha
            avg += (1.0 - self.alpha) * grads[name] ** 2
            tensors[name] = tensor - self.learning_rate * grads[name] / (np.sqrt(avg) + self.eps)
        return PolicyParams(architecture=params.architecture, tensors=tensors)
