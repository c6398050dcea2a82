"""
Data models for meta-training and evaluation
"""

import math
from typing import List, Optional, Set

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from graph_core import Dag
from meta_env import TraceRow
from neural_policy import PolicyParams


class TrainingError(RuntimeError):
    """Raised when training or evaluation cannot proceed."""


class RejectionBudgetExceeded(TrainingError):
    """Raised when no DAG outside the test set was found within the rejection cap."""


class ReplayConfig(BaseModel):
    """Whole-episode experience replay."""
    buffer_size: int = Field(default=500_000, ge=1, description="Capacity in step records")
    replay_ratio: float = Field(default=4.0, ge=0.0, description="Mean replay updates per on-policy update (Poisson)")
    importance_clip: float = Field(default=10.0, gt=0.0, description="Truncation c of the importance weight")


class TrainConfig(BaseModel):
    """Actor-critic training settings."""
    gamma: float = Field(default=0.99, gt=0.0, le=1.0, description="Discount factor")
    learning_rate: float = Field(default=7e-4, gt=0.0, description="Constant RMSProp learning rate")
    rmsprop_alpha: float = Field(default=0.99, gt=0.0, lt=1.0, description="RMSProp decay")
    rmsprop_eps: float = Field(default=1e-5, gt=0.0, description="RMSProp epsilon")
    total_steps: int = Field(default=5_000_000, ge=1, description="Environment step budget")
    n_parallel_envs: int = Field(default=4, ge=1, description="Episodes per on-policy update")
    n_workers: int = Field(default=1, ge=1, description="Rollout threads")
    value_loss_coef: float = Field(default=0.5, ge=0.0, description="Weight of the squared value error")
    entropy_coef: float = Field(default=0.01, ge=0.0, description="Weight of the entropy bonus")
    max_grad_norm: float = Field(default=0.5, gt=0.0, description="Global gradient-norm clip")
    eval_interval: int = Field(default=10_000, ge=1, description="Environment steps between validations")
    eval_episodes: int = Field(default=1, ge=1, description="Validation episodes per validation SCM")
    validation_scms: int = Field(default=20, ge=1, description="Freshly generated validation SCMs")
    eval_greedy: bool = Field(default=True, description="Greedy actions during validation")
    early_stop_patience: Optional[int] = Field(default=10, ge=1, description="Validations without improvement before stopping")
    target_dshd: Optional[float] = Field(default=None, ge=0.0, description="Stop once best validation mean dSHD reaches this")
    replay: Optional[ReplayConfig] = Field(default=None, description="Experience replay, disabled when None")
    max_rejections: int = Field(default=10_000, ge=1, description="Cap on rejected DAG draws per training SCM")
    feature_layers: List[int] = Field(default_factory=lambda: [30], min_length=1, description="Shared feature widths")
    lstm_width: int = Field(default=30, ge=1, description="LSTM size")
    actor_hidden: List[int] = Field(default_factory=lambda: [30], description="Actor hidden widths")
    critic_hidden: List[int] = Field(default_factory=lambda: [10], description="Critic hidden widths")
    seed: int = Field(default=0, description="Master seed")


class Trajectory(BaseModel):
    """One episode of per-step records."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    observations: np.ndarray = Field(description="(T, d) observations seen before each action")
    masks: np.ndarray = Field(description="(T, |A|) legal-action masks")
    actions: List[int] = Field(description="Chosen action indices")
    rewards: List[float] = Field(description="Rewards")
    log_probs: List[float] = Field(description="Behaviour log-probabilities of the chosen actions")
    values: List[float] = Field(description="Critic estimates")
    terminal: List[bool] = Field(description="Terminal flags")
    interventions: List[Optional[int]] = Field(description="Intervened node per step, None otherwise")
    truth: Dag = Field(description="Graph of the episode's SCM")
    final_dshd: int = Field(ge=0, description="dSHD of the final epistemic model")
    trace: List[TraceRow] = Field(default_factory=list, description="Step trace when requested")

    @model_validator(mode="after")
    def _check_lengths(self):
        length = len(self.actions)
        for name in ("rewards", "log_probs", "values", "terminal", "interventions"):
            if len(getattr(self, name)) != length:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {length}")
        if self.observations.shape[0] != length or self.masks.shape[0] != length:
            raise ValueError("Observation and mask rows must match the number of actions")
        if sum(self.terminal) != 1 or not self.terminal[-1]:
            raise ValueError("Trajectory needs exactly one terminal record, at the end")
        return self

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))

    @property
    def n_interventions(self) -> int:
        return sum(node is not None for node in self.interventions)


class LossTargets(BaseModel):
    """Constants of the actor-critic loss for one trajectory."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    returns: np.ndarray = Field(description="Discounted returns")
    advantages: np.ndarray = Field(description="Advantages, held constant")
    weights: np.ndarray = Field(description="Policy-gradient weights (truncated importance ratios)")


class LossDiagnostics(BaseModel):
    """Scalars reported by one update."""
    loss: float = Field(description="Total loss")
    policy_loss: float = Field(description="Policy-gradient term")
    value_loss: float = Field(description="Mean squared value error")
    entropy: float = Field(description="Mean policy entropy")
    grad_norm: float = Field(description="Global gradient norm before clipping")


class EpisodeRecord(BaseModel):
    """Outcome of one evaluation episode."""
    scm_index: int = Field(description="Index of the evaluated SCM")
    episode: int = Field(description="Episode number for that SCM")
    dshd: int = Field(ge=0, description="Final dSHD")
    interventions: int = Field(ge=0, description="Intervention steps")
    latency_ms: float = Field(ge=0.0, description="Wall-clock time of the estimation")
    actions: List[str] = Field(default_factory=list, description="Readable action sequence")


class EvalReport(BaseModel):
    """Frozen-weight evaluation statistics."""
    dshd: List[int] = Field(description="Per-episode dSHD")
    mean_dshd: float = Field(description="Mean dSHD")
    median_dshd: float = Field(description="Median dSHD")
    std_dshd: float = Field(description="Population standard deviation of dSHD")
    mean_interventions: float = Field(description="Mean interventions per episode")
    intervention_counts: List[int] = Field(description="Interventions per variable")
    intervention_shares: List[float] = Field(description="Share of interventions per variable")
    mean_latency_ms: float = Field(description="Mean wall-clock per estimation")
    episodes: List[EpisodeRecord] = Field(default_factory=list, description="Per-episode records")

    @classmethod
    def from_episodes(cls, episodes: List[EpisodeRecord], intervention_counts: List[int]) -> "EvalReport":
        if not episodes:
            raise TrainingError("Evaluation produced no episodes")
        values = np.array([e.dshd for e in episodes], dtype=np.float64)
        total = sum(intervention_counts)
        return cls(
            dshd=[e.dshd for e in episodes],
            mean_dshd=float(values.mean()),
            median_dshd=float(np.median(values)),
            std_dshd=float(values.std()),
            mean_interventions=float(np.mean([e.interventions for e in episodes])),
            intervention_counts=list(intervention_counts),
            intervention_shares=[c / total if total else 0.0 for c in intervention_counts],
            mean_latency_ms=float(np.mean([e.latency_ms for e in episodes])),
            episodes=episodes,
        )


class MetricsRow(BaseModel):
    """One line of the training metrics stream."""
    step: int = Field(description="Environment steps so far")
    mean_episode_return: float = Field(description="Mean undiscounted return since the previous row")
    eval_mean_dshd: float = Field(description="Validation mean dSHD")
    eval_median_dshd: float = Field(description="Validation median dSHD")
    policy_entropy: float = Field(description="Mean policy entropy since the previous row")
    value_loss: float = Field(description="Mean value loss since the previous row")


class TrainRunState(BaseModel):
    """Mutable state of a training run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: PolicyParams = Field(description="Current parameters")
    best_params: PolicyParams = Field(description="Parameters with the best validation score")
    best_score: float = Field(default=math.inf, description="Best validation mean dSHD")
    step: int = Field(default=0, ge=0, description="Environment steps taken")
    updates: int = Field(default=0, ge=0, description="Gradient updates applied")
    metrics: List[MetricsRow] = Field(default_factory=list, description="Metrics history")
    best_history: List[float] = Field(default_factory=list, description="Best score after each validation")
    stale_evaluations: int = Field(default=0, ge=0, description="Validations since the last improvement")
    stopped_early: bool = Field(default=False, description="Whether an early-stop rule ended the run")
    training_graphs: Set[Dag] = Field(default_factory=set, description="Distinct graphs seen in training")
