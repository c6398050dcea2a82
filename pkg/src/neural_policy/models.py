"""
Data models for the recurrent actor-critic policy
"""

import hashlib
from typing import Dict, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PolicyError(ValueError):
    """Raised for shape mismatches and non-finite values in the policy."""


class CheckpointError(PolicyError):
    """Raised for unreadable or incompatible checkpoint files."""


class Architecture(BaseModel):
    """
    Layer sizes of the policy network.

    Shared tanh feature layers feed one LSTM layer; its output feeds the actor
    MLP (last width = number of actions) and the critic MLP (last width = 1).
    Hidden layers of both heads use tanh, their output layers are linear.
    """
    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(ge=1, description="Flat observation length")
    feature_layers: List[int] = Field(min_length=1, description="Widths of the shared feature layers")
    lstm_width: int = Field(ge=1, description="LSTM hidden and cell size")
    actor_layers: List[int] = Field(min_length=1, description="Actor widths, ending in the action count")
    critic_layers: List[int] = Field(min_length=1, description="Critic widths, ending in 1")
    activation: Literal["tanh"] = Field(default="tanh", description="Feed-forward nonlinearity")

    @model_validator(mode="after")
    def _check_widths(self):
        for name in ("feature_layers", "actor_layers", "critic_layers"):
            if any(width < 1 for width in getattr(self, name)):
                raise ValueError(f"All widths in {name} must be >= 1")
        if self.critic_layers[-1] != 1:
            raise ValueError(f"Critic must end in width 1, got {self.critic_layers[-1]}")
        return self

    @classmethod
    def for_env(
        cls,
        input_dim: int,
        n_actions: int,
        feature_layers: List[int],
        lstm_width: int,
        actor_hidden: List[int],
        critic_hidden: List[int],
    ) -> "Architecture":
        return cls(
            input_dim=input_dim,
            feature_layers=list(feature_layers),
            lstm_width=lstm_width,
            actor_layers=list(actor_hidden) + [n_actions],
            critic_layers=list(critic_hidden) + [1],
        )

    @property
    def n_actions(self) -> int:
        return self.actor_layers[-1]

    def layer_shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """Parameter names and shapes in checkpoint order."""
        shapes = []
        fan_in = self.input_dim
        for k, width in enumerate(self.feature_layers):
            shapes += [(f"feature.{k}.W", (width, fan_in)), (f"feature.{k}.b", (width,))]
            fan_in = width
        gates = 4 * self.lstm_width
        shapes += [
            ("lstm.W_x", (gates, fan_in)),
            ("lstm.W_h", (gates, self.lstm_width)),
            ("lstm.b", (gates,)),
        ]
        for head, widths in (("actor", self.actor_layers), ("critic", self.critic_layers)):
            fan_in = self.lstm_width
            for k, width in enumerate(widths):
                shapes += [(f"{head}.{k}.W", (width, fan_in)), (f"{head}.{k}.b", (width,))]
                fan_in = width
        return shapes


class PolicyParams(BaseModel):
    """Named float64 tensors of one policy, keyed in checkpoint order."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    architecture: Architecture
    tensors: Dict[str, np.ndarray]

    @model_validator(mode="after")
    def _check_tensors(self):
        expected = self.architecture.layer_shapes()
        if [name for name, _ in expected] != list(self.tensors):
            raise ValueError("Tensor names do not match the architecture layer order")
        for name, shape in expected:
            if self.tensors[name].shape != shape:
                raise ValueError(f"{name} has shape {self.tensors[name].shape}, expected {shape}")
        return self

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    @property
    def num_params(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def vector(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors.values()])

    def with_vector(self, vector: np.ndarray) -> "PolicyParams":
        if vector.shape != (self.num_params,):
            raise PolicyError(f"Vector of length {vector.size}, expected {self.num_params}")
        tensors = {}
        offset = 0
        for name, tensor in self.tensors.items():
            tensors[name] = np.array(vector[offset:offset + tensor.size], dtype=np.float64).reshape(tensor.shape)
            offset += tensor.size
        return PolicyParams(architecture=self.architecture, tensors=tensors)

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            architecture=self.architecture,
            tensors={name: t.copy() for name, t in self.tensors.items()},
        )

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(t) for name, t in self.tensors.items()}

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for tensor in self.tensors.values():
            digest.update(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
        return digest.hexdigest()

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors.values())


class HiddenState(BaseModel):
    """LSTM hidden and cell vectors."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, width: int) -> "HiddenState":
        return cls(h=np.zeros(width, dtype=np.float64), c=np.zeros(width, dtype=np.float64))


class PolicyOutput(BaseModel):
    """Actor distribution and critic value for one step."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    action_probs: np.ndarray = Field(description="Probabilities over the action space")
    value: float = Field(description="Critic estimate")
    logits: np.ndarray = Field(description="Masked logits (-inf on illegal actions)")
