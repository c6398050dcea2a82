"""
Data models for the causal-discovery environment
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from graph_core import DirectedGraph, StructureKind
from scm_engine import Intervention, Scm


class EnvError(ValueError):
    """Raised for illegal actions or misuse of an episode."""


class ActionKind(str, Enum):
    """Top-level action families."""
    INTERVENE = "intervene"
    NON_ACTION = "non_action"
    STRUCTURE = "structure"


class Action(BaseModel):
    """One discrete action: an intervention, the non-action or an edge edit."""
    model_config = ConfigDict(frozen=True)

    kind: ActionKind = Field(description="Action family")
    node: Optional[int] = Field(default=None, description="Intervened node for INTERVENE")
    value: Optional[float] = Field(default=None, description="Clamped value for INTERVENE")
    structure: Optional[StructureKind] = Field(default=None, description="Edit kind for STRUCTURE")
    pair: Optional[Tuple[int, int]] = Field(default=None, description="Ordered pair (from, to) for STRUCTURE")

    @model_validator(mode="after")
    def _check_payload(self):
        if self.kind is ActionKind.INTERVENE:
            if self.node is None or self.value is None:
                raise ValueError("Intervention action needs node and value")
        elif self.kind is ActionKind.STRUCTURE:
            if self.structure is None or self.pair is None:
                raise ValueError("Structure action needs structure kind and pair")
            if self.pair[0] == self.pair[1]:
                raise ValueError(f"Structure action on self-loop {self.pair}")
        return self

    @classmethod
    def intervene(cls, node: int, value: float) -> "Action":
        return cls(kind=ActionKind.INTERVENE, node=node, value=value)

    @classmethod
    def non_action(cls) -> "Action":
        return cls(kind=ActionKind.NON_ACTION)

    @classmethod
    def edit(cls, structure: StructureKind, pair: Tuple[int, int]) -> "Action":
        return cls(kind=ActionKind.STRUCTURE, structure=structure, pair=pair)

    def describe(self) -> str:
        if self.kind is ActionKind.INTERVENE:
            return f"do(X{self.node}={self.value:g})"
        if self.kind is ActionKind.NON_ACTION:
            return "observe"
        return f"{self.structure.value} X{self.pair[0]}->X{self.pair[1]}"


class ActionSpace(BaseModel):
    """Ordered list of actions with lookups in both directions."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2, description="Number of variables")
    actions: List[Action] = Field(description="Actions in index order")

    _index: Dict[Action, int] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._index = {action: k for k, action in enumerate(self.actions)}

    def __len__(self) -> int:
        return len(self.actions)

    def action(self, index: int) -> Action:
        if not 0 <= index < len(self.actions):
            raise EnvError(f"Action index {index} out of range [0, {len(self.actions)})")
        return self.actions[index]

    def index(self, action: Action) -> int:
        try:
            return self._index[action]
        except KeyError:
            raise EnvError(f"Action {action.describe()} is not in the action space") from None

    @property
    def intervention_indices(self) -> List[int]:
        return [k for k, a in enumerate(self.actions) if a.kind is ActionKind.INTERVENE]


class Observation(BaseModel):
    """o = o^V || o^A || o^G || o^T."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(description="Sampled variable values o^V")
    target_onehot: np.ndarray = Field(description="Intervention target one-hot o^A")
    graph: np.ndarray = Field(description="Encoded epistemic model o^G")
    time: float = Field(ge=0.0, le=1.0, description="Elapsed fraction of the horizon o^T")

    def flat(self) -> np.ndarray:
        return np.concatenate([self.values, self.target_onehot, self.graph, [self.time]])


def observation_size(n: int) -> int:
    return 2 * n + n * (n - 1) // 2 + 1


class EnvConfig(BaseModel):
    """Episode settings."""
    horizon: int = Field(default=20, ge=1, description="Episode length H")
    intervention_values: Union[List[List[float]], List[float]] = Field(
        default_factory=lambda: [5.0],
        description="Intervention values c, shared by all nodes or one list per node"
    )
    intervention_bonus: float = Field(default=0.1, ge=0.0, description="Reward bonus for intervention steps")
    bonus_non_action: bool = Field(default=False, description="Also grant the bonus to the non-action")
    allow_interventions: bool = Field(default=True, description="False disables intervention actions")
    seed: Optional[int] = Field(default=None, description="Seed for environment randomness")

    def values_for(self, n: int) -> List[List[float]]:
        """Per-node intervention values."""
        values = self.intervention_values
        if values and isinstance(values[0], list):
            if len(values) != n:
                raise EnvError(f"{len(values)} per-node value lists for n={n}")
            return [list(v) for v in values]
        return [list(values) for _ in range(n)]


class EpisodeState(BaseModel):
    """Mutable per-episode state."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scm: Scm = Field(description="Environment SCM")
    truth: DirectedGraph = Field(description="Graph induced by the SCM")
    epistemic: DirectedGraph = Field(description="Current structure estimate")
    action_space: ActionSpace = Field(description="Action space of the episode")
    step: int = Field(default=0, ge=0, description="Steps taken so far")
    current_intervention: Intervention = Field(default_factory=Intervention, description="Intervention of the latest sample")
    done: bool = Field(default=False, description="Whether the horizon was reached")
