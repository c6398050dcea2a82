"""
Meta-training of the causal-discovery policy
"""

from .models import (
    EpisodeRecord,
    EvalReport,
    LossDiagnostics,
    LossTargets,
    MetricsRow,
    RejectionBudgetExceeded,
    ReplayConfig,
    TrainConfig,
    TrainingError,
    TrainRunState,
    Trajectory,
)
from .rollout import compute_advantages, rollout, sample_training_scm
from .loss import actor_critic_loss, global_norm, loss_fn_for, on_policy_targets, replay_targets
from .optim import RmsProp, clip_by_global_norm
from .replay import ReplayBuffer
from .evaluation import check_architecture, evaluate, random_baseline
from .training import METRICS_COLUMNS, Trainer, architecture_for, train, update, write_metrics_csv

__all__ = [
    "METRICS_COLUMNS",
    "EpisodeRecord",
    "EvalReport",
    "LossDiagnostics",
    "LossTargets",
    "MetricsRow",
    "RejectionBudgetExceeded",
    "ReplayBuffer",
    "ReplayConfig",
    "RmsProp",
    "TrainConfig",
    "Trainer",
    "TrainingError",
    "TrainRunState",
    "Trajectory",
    "actor_critic_loss",
    "architecture_for",
    "check_architecture",
    "clip_by_global_norm",
    "compute_advantages",
    "evaluate",
    "global_norm",
    "loss_fn_for",
    "on_policy_targets",
    "random_baseline",
    "replay_targets",
    "rollout",
    "sample_training_scm",
    "train",
    "update",
    "write_metrics_csv",
]
