"""
Meta-RL environment for causal discovery
"""

from .models import (
    Action,
    ActionKind,
    ActionSpace,
    EnvConfig,
    EnvError,
    EpisodeState,
    Observation,
    observation_size,
)
from .environment import (
    CausalDiscoveryEnv,
    build_action_space,
    discounted_return,
    legal_action_mask,
    reset,
    step,
)
from .trace import TraceRow, write_trace_csv

__all__ = [
    "Action",
    "ActionKind",
    "ActionSpace",
    "CausalDiscoveryEnv",
    "EnvConfig",
    "EnvError",
    "EpisodeState",
    "Observation",
    "TraceRow",
    "build_action_space",
    "discounted_return",
    "legal_action_mask",
    "observation_size",
    "reset",
    "step",
    "write_trace_csv",
]
