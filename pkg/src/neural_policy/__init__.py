"""
Recurrent actor-critic policy with exact gradients
"""

from .models import (
    Architecture,
    CheckpointError,
    HiddenState,
    PolicyError,
    PolicyOutput,
    PolicyParams,
)
from .network import (
    EpisodeForward,
    backward,
    forward,
    forward_episode,
    init_params,
    sample_action,
)
from .gradcheck import grad_check, relative_error
from .checkpoint import load_params, read_environment, save_params
from .presets import PRESETS, ArchitecturePreset, preset

__all__ = [
    "PRESETS",
    "Architecture",
    "ArchitecturePreset",
    "CheckpointError",
    "EpisodeForward",
    "HiddenState",
    "PolicyError",
    "PolicyOutput",
    "PolicyParams",
    "backward",
    "forward",
    "forward_episode",
    "grad_check",
    "init_params",
    "load_params",
    "preset",
    "read_environment",
    "relative_error",
    "sample_action",
    "save_params",
]
