"""
Named layer sizes used by the experiment configurations
"""

from typing import Dict, List

from pydantic import BaseModel, Field

from .models import Architecture, PolicyError


class ArchitecturePreset(BaseModel):
    """Hidden sizes of the network; input and action widths come from the environment."""
    feature_layers: List[int] = Field(description="Shared feature widths")
    lstm_width: int = Field(description="LSTM size")
    actor_hidden: List[int] = Field(description="Actor hidden widths")
    critic_hidden: List[int] = Field(description="Critic hidden widths")

    def build(self, input_dim: int, n_actions: int) -> Architecture:
        return Architecture.for_env(
            input_dim=input_dim,
            n_actions=n_actions,
            feature_layers=self.feature_layers,
            lstm_width=self.lstm_width,
            actor_hidden=self.actor_hidden,
            critic_hidden=self.critic_hidden,
        )


PRESETS: Dict[str, ArchitecturePreset] = {
    "toy": ArchitecturePreset(feature_layers=[30], lstm_width=30, actor_hidden=[30], critic_hidden=[10]),
    "meta3": ArchitecturePreset(feature_layers=[30], lstm_width=30, actor_hidden=[30], critic_hidden=[10]),
    "meta4": ArchitecturePreset(feature_layers=[64, 64], lstm_width=128, actor_hidden=[32], critic_hidden=[32]),
}


def preset(name: str) -> ArchitecturePreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise PolicyError(f"Unknown architecture preset '{name}', choose from {sorted(PRESETS)}") from None
