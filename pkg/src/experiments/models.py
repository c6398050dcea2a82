"""
Data models for experiment configuration and reports
"""

import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field

from meta_env import EnvConfig
from neural_policy import preset
from scm_engine import ScmGenConfig
from trainer import EvalReport, ReplayConfig, TrainConfig


class ConfigError(ValueError):
    """Raised for unreadable configuration files and unresolvable paths."""


class StatisticsError(ValueError):
    """Raised for inputs a statistic is undefined on."""


ExperimentKind = Literal["toy", "meta", "ablation", "budget"]
Alternative = Literal["less", "greater", "two-sided"]


class ExperimentConfig(BaseModel):
    """
    Flat experiment configuration, loaded from YAML.

    Environment, training and SCM-generator settings sit side by side at the
    top level; ``env_config``, ``train_config`` and ``scm_config`` split them
    back into the component configs. Unknown keys are rejected.
    """
    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind = Field(description="Pipeline to run")
    seed: int = Field(description="Master seed")
    n: int = Field(default=3, ge=2, description="Number of variables")

    # environment
    horizon: int = Field(default=20, ge=1, description="Episode length H")
    intervention_values: Union[List[List[float]], List[float]] = Field(
        default_factory=lambda: [5.0], description="Intervention values, shared or per node"
    )
    intervention_bonus: float = Field(default=0.1, ge=0.0, description="Bonus per intervention step")
    bonus_non_action: bool = Field(default=False, description="Grant the bonus to the non-action too")
    allow_interventions: bool = Field(default=True, description="False trains the intervention-free variant")

    # training
    architecture: Optional[Literal["toy", "meta3", "meta4"]] = Field(
        default=None, description="Layer-size preset overriding the explicit widths"
    )
    feature_layers: List[int] = Field(default_factory=lambda: [30], description="Shared feature widths")
    lstm_width: int = Field(default=30, ge=1, description="LSTM size")
    actor_hidden: List[int] = Field(default_factory=lambda: [30], description="Actor hidden widths")
    critic_hidden: List[int] = Field(default_factory=lambda: [10], description="Critic hidden widths")
    gamma: float = Field(default=0.99, gt=0.0, le=1.0, description="Discount factor")
    learning_rate: float = Field(default=7e-4, gt=0.0, description="RMSProp learning rate")
    total_steps: int = Field(default=5_000_000, ge=1, description="Environment step budget")
    n_parallel_envs: int = Field(default=4, ge=1, description="Episodes per update")
    n_workers: int = Field(default=1, ge=1, description="Rollout threads")
    value_loss_coef: float = Field(default=0.5, ge=0.0, description="Value loss weight")
    entropy_coef: float = Field(default=0.01, ge=0.0, description="Entropy bonus weight")
    max_grad_norm: float = Field(default=0.5, gt=0.0, description="Gradient clip")
    eval_interval: int = Field(default=10_000, ge=1, description="Steps between validations")
    eval_episodes: int = Field(default=1, ge=1, description="Validation episodes per SCM")
    validation_scms: int = Field(default=20, ge=1, description="Number of validation SCMs")
    eval_greedy: bool = Field(default=True, description="Greedy validation")
    early_stop_patience: Optional[int] = Field(default=10, ge=1, description="Validation plateau patience")
    target_dshd: Optional[float] = Field(default=None, ge=0.0, description="Early-stop validation target")
    replay_ratio: float = Field(default=0.0, ge=0.0, description="Replay updates per update, 0 disables replay")
    replay_buffer_size: int = Field(default=500_000, ge=1, description="Replay capacity in steps")
    importance_clip: float = Field(default=10.0, gt=0.0, description="Importance weight truncation")
    max_rejections: int = Field(default=10_000, ge=1, description="Rejection cap for training DAGs")

    # SCM generator
    weight_low: float = Field(default=-1.0, description="Lower edge-weight bound")
    weight_high: float = Field(default=1.0, description="Upper edge-weight bound")
    sigma_low: float = Field(default=0.0, ge=0.0, description="Lower noise std bound")
    sigma_high: float = Field(default=0.5, ge=0.0, description="Upper noise std bound")

    # evaluation and inputs
    testset: Optional[Path] = Field(default=None, description="JSON-lines SCM test set")
    test_scms: int = Field(default=50, ge=1, description="Leading test SCMs used for evaluation")
    eval_episodes_per_scm: int = Field(default=1, ge=1, description="Final evaluation episodes per SCM")
    final_greedy: bool = Field(default=False, description="Greedy actions in the final evaluation")
    random_repetitions: int = Field(default=1000, ge=1, description="Random-baseline draws per SCM")
    mcd_model: Optional[Path] = Field(default=None, description="Trained checkpoint reused by the ablation")
    models: List[Path] = Field(default_factory=list, description="Checkpoints analysed by the budget study")
    write_traces: bool = Field(default=False, description="Write per-episode trace CSVs")
    output_dir: Optional[Path] = Field(default=None, description="Run directory, default $MCD_OUTPUT_ROOT/<kind>")

    @classmethod
    def from_yaml(cls, path: Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        with path.open("r", encoding="utf-8") as handle:
            try:
                data = yaml.safe_load(handle)
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping of settings")
        config = cls.model_validate(data).resolve_paths(path.parent)
        config.check_inputs()
        return config

    def resolve_paths(self, base: Path) -> "ExperimentConfig":
        """Make relative input paths relative to ``base`` and check they exist."""
        def resolve(p: Optional[Path]) -> Optional[Path]:
            if p is None or p.is_absolute():
                return p
            return base / p

        updated = self.model_copy(update={
            "testset": resolve(self.testset),
            "mcd_model": resolve(self.mcd_model),
            "models": [resolve(p) for p in self.models],
        })
        for p in [updated.testset, updated.mcd_model, *updated.models]:
            if p is not None and not p.exists():
                raise ConfigError(f"Input path does not exist: {p}")
        return updated

    def check_inputs(self) -> None:
        """Inputs each pipeline kind needs at launch."""
        if self.kind in ("meta", "ablation", "budget") and self.testset is None:
            raise ConfigError(f"Experiment kind '{self.kind}' needs a testset")
        if self.kind == "budget" and not self.models:
            raise ConfigError("Budget study needs at least one model")

    def run_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        return Path(os.getenv("MCD_OUTPUT_ROOT", "runs")) / self.kind

    def env_config(self, **overrides) -> EnvConfig:
        settings = dict(
            horizon=self.horizon,
            intervention_values=self.intervention_values,
            intervention_bonus=self.intervention_bonus,
            bonus_non_action=self.bonus_non_action,
            allow_interventions=self.allow_interventions,
            seed=self.seed,
        )
        settings.update(overrides)
        return EnvConfig(**settings)

    def train_config(self) -> TrainConfig:
        widths = dict(
            feature_layers=self.feature_layers,
            lstm_width=self.lstm_width,
            actor_hidden=self.actor_hidden,
            critic_hidden=self.critic_hidden,
        )
        if self.architecture is not None:
            widths = preset(self.architecture).model_dump()
        replay = None
        if self.replay_ratio > 0:
            replay = ReplayConfig(
                buffer_size=self.replay_buffer_size,
                replay_ratio=self.replay_ratio,
                importance_clip=self.importance_clip,
            )
        return TrainConfig(
            gamma=self.gamma,
            learning_rate=self.learning_rate,
            total_steps=self.total_steps,
            n_parallel_envs=self.n_parallel_envs,
            n_workers=self.n_workers,
            value_loss_coef=self.value_loss_coef,
            entropy_coef=self.entropy_coef,
            max_grad_norm=self.max_grad_norm,
            eval_interval=self.eval_interval,
            eval_episodes=self.eval_episodes,
            validation_scms=self.validation_scms,
            eval_greedy=self.eval_greedy,
            early_stop_patience=self.early_stop_patience,
            target_dshd=self.target_dshd,
            replay=replay,
            max_rejections=self.max_rejections,
            seed=self.seed,
            **widths,
        )

    def scm_config(self) -> ScmGenConfig:
        return ScmGenConfig(
            weight_low=self.weight_low,
            weight_high=self.weight_high,
            sigma_low=self.sigma_low,
            sigma_high=self.sigma_high,
        )


class StatSummary(BaseModel):
    """Descriptive statistics of one sample."""
    mean: float = Field(description="Arithmetic mean")
    median: float = Field(description="Median, midpoint for even counts")
    std: float = Field(ge=0.0, description="Population standard deviation")
    count: int = Field(ge=1, description="Sample size")


class WilcoxonResult(BaseModel):
    """Paired Wilcoxon signed-rank test."""
    statistic: float = Field(description="W+ for one-sided tests, min(W+, W-) for two-sided")
    p_value: float = Field(ge=0.0, le=1.0, description="p-value under the null of symmetric differences")
    alternative: Alternative = Field(description="Alternative hypothesis on a - b")
    n_effective: int = Field(ge=0, description="Pairs left after dropping zero differences")
    exact: bool = Field(description="Exact null distribution or normal approximation")


class TrainingSummary(BaseModel):
    """Outcome of one training run."""
    steps: int = Field(description="Environment steps taken")
    updates: int = Field(description="Gradient updates applied")
    best_validation_dshd: float = Field(description="Best validation mean dSHD")
    stopped_early: bool = Field(description="Whether early stopping ended the run")
    distinct_training_graphs: int = Field(description="Distinct graphs trained on")
    checkpoint: Optional[str] = Field(default=None, description="Path of the best checkpoint")


class ToyReport(BaseModel):
    """Report of the two-SCM toy experiment."""
    training: TrainingSummary
    untrained_mean_dshd: float = Field(description="Mean dSHD of the initial policy")
    evaluation: EvalReport
    summary: StatSummary
    x1_intervention_rate: float = Field(
        description="Share of correct episodes on the chain SCM that intervene on X1"
    )


class MetaReport(BaseModel):
    """Report of meta-training on a test set."""
    training: TrainingSummary
    evaluation: EvalReport
    summary: StatSummary
    random_baseline: StatSummary
    versus_random: Optional[WilcoxonResult] = Field(default=None, description="MCD vs random, alternative 'less'")
    reference: Dict[str, float] = Field(default_factory=dict, description="Published reference values")


class AblationReport(BaseModel):
    """Report comparing the full policy with the intervention-free variant."""
    with_interventions: StatSummary
    without_interventions: StatSummary
    evaluation_without_interventions: EvalReport
    comparison: Optional[WilcoxonResult] = Field(default=None, description="MCD vs MCD-O, alternative 'less'")
    reference: Dict[str, float] = Field(default_factory=dict, description="Published reference values")


class BudgetEntry(BaseModel):
    """Intervention budget of one checkpoint."""
    model: str = Field(description="Checkpoint path")
    mean_interventions: float = Field(description="Mean interventions per episode")
    max_interventions: int = Field(description="Most interventions in one episode")
    intervention_counts: List[int] = Field(description="Interventions per variable")
    intervention_shares: List[float] = Field(description="Share per variable")
    mean_dshd: float = Field(description="Mean dSHD of the checkpoint")


class BudgetReport(BaseModel):
    """Intervention budget study."""
    horizon: int = Field(description="Episode length")
    entries: List[BudgetEntry]
    reference: Dict[str, float] = Field(default_factory=dict, description="Published reference values")


class Manifest(BaseModel):
    """What is needed to reproduce a run."""
    command: str = Field(description="CLI command")
    seed: int = Field(description="Master seed")
    config: Dict = Field(description="Full configuration")
    inputs: Dict[str, str] = Field(description="SHA-256 of each input file")
    package_version: str = Field(description="Installed package version")
