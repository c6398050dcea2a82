"""
Central finite-difference check of analytic policy gradients
"""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .models import PolicyError, PolicyParams

logger = logging.getLogger(__name__)

LossAndGrad = Callable[[PolicyParams], Tuple[float, Dict[str, np.ndarray]]]

MIN_COORDINATES = 200


def relative_error(analytic: float, numeric: float, floor: float = 1e-5) -> float:
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    params: PolicyParams,
    loss_fn: LossAndGrad,
    epsilon: float = 1e-5,
    n_coordinates: int = MIN_COORDINATES,
    rng: Optional[np.random.Generator] = None,
    floor: float = 1e-5,
) -> float:
    """
    Compare analytic gradients with (L(theta + eps e) - L(theta - eps e)) / 2 eps.

    ``loss_fn`` returns the scalar loss and its gradient for given parameters.
    At least ``n_coordinates`` coordinates (all of them for small networks)
    are checked. Returns the maximum relative error.
    """
    if epsilon <= 0:
        raise PolicyError(f"epsilon must be positive, got {epsilon}")
    rng = rng or np.random.default_rng(0)

    _, grads = loss_fn(params)
    analytic = np.concatenate([grads[name].ravel() for name in params.tensors])
    theta = params.vector()
    count = min(theta.size, max(n_coordinates, MIN_COORDINATES))
    coordinates = rng.choice(theta.size, size=count, replace=False)

    worst = 0.0
    for k in coordinates:
        shifted = theta.copy()
        shifted[k] = theta[k] + epsilon
        loss_plus, _ = loss_fn(params.with_vector(shifted))
        shifted[k] = theta[k] - epsilon
        loss_minus, _ = loss_fn(params.with_vector(shifted))
        numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
        worst = max(worst, relative_error(analytic[k], numeric, floor))
    logger.debug("Gradient check over %d coordinates: max relative error %.3e", count, worst)
    return worst
