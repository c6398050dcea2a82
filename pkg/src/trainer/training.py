"""
Meta-training loop: sample SCM, roll out, update, validate, checkpoint
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from graph_core import Dag
from meta_env import CausalDiscoveryEnv, EnvConfig, build_action_space, observation_size
from neural_policy import Architecture, PolicyParams, init_params, save_params
from scm_engine import Scm, ScmGenConfig

from .evaluation import evaluate
from .loss import actor_critic_loss, on_policy_targets, replay_targets
from .models import LossDiagnostics, LossTargets, MetricsRow, TrainConfig, TrainRunState, Trajectory, TrainingError
from .optim import RmsProp, clip_by_global_norm
from .replay import ReplayBuffer
from .rollout import rollout, sample_training_scm

logger = logging.getLogger(__name__)

ScmSampler = Callable[[np.random.Generator], Scm]

METRICS_COLUMNS = [
    "step", "mean_episode_return", "eval_mean_dshd", "eval_median_dshd", "policy_entropy", "value_loss",
]


def architecture_for(n: int, env_cfg: EnvConfig, cfg: TrainConfig) -> Architecture:
    return Architecture.for_env(
        input_dim=observation_size(n),
        n_actions=len(build_action_space(n, env_cfg.values_for(n))),
        feature_layers=cfg.feature_layers,
        lstm_width=cfg.lstm_width,
        actor_hidden=cfg.actor_hidden,
        critic_hidden=cfg.critic_hidden,
    )


def update(
    params: PolicyParams,
    batch: List[Trajectory],
    cfg: TrainConfig,
    optimizer: Optional[RmsProp] = None,
    targets: Optional[List[LossTargets]] = None,
) -> Tuple[PolicyParams, LossDiagnostics]:
    """
    One clipped RMSProp step on the actor-critic loss. Without explicit
    targets the batch is treated as on-policy.
    """
    optimizer = optimizer or RmsProp(cfg.learning_rate, cfg.rmsprop_alpha, cfg.rmsprop_eps)
    if targets is None:
        targets = [on_policy_targets(traj, cfg.gamma) for traj in batch]
    diagnostics, grads = actor_critic_loss(params, batch, targets, cfg.value_loss_coef, cfg.entropy_coef)
    grads, _ = clip_by_global_norm(grads, cfg.max_grad_norm)
    new_params = optimizer.step(params, grads)
    if not new_params.all_finite():
        raise TrainingError("Update produced non-finite parameters")
    return new_params, diagnostics


def write_metrics_csv(path: Path, rows: Iterable[MetricsRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow([row.step] + [format(getattr(row, c), ".17g") for c in METRICS_COLUMNS[1:]])


class Trainer:
    """Owns the environments, optimizer, replay buffer and run state of one training run."""

    def __init__(
        self,
        n: int,
        env_cfg: EnvConfig,
        cfg: TrainConfig,
        scm_sampler: ScmSampler,
        validation_scms: Sequence[Scm],
        output_dir: Optional[Path] = None,
    ):
        self.n = n
        self.env_cfg = env_cfg
        self.cfg = cfg
        self.validation_scms = list(validation_scms)
        self.output_dir = Path(output_dir) if output_dir is not None else None

        # seeds[0] is reserved for validation SCMs
        seeds = np.random.SeedSequence(cfg.seed).spawn(4 + cfg.n_parallel_envs)
        init_rng, self.update_rng, self.eval_rng = (np.random.default_rng(s) for s in seeds[1:4])
        self.envs = []
        self.action_rngs = []
        for child in seeds[4:]:
            env_seed, action_seed = child.spawn(2)
            env = CausalDiscoveryEnv(env_cfg, n, scm_sampler)
            env.np_random = np.random.default_rng(env_seed)
            self.envs.append(env)
            self.action_rngs.append(np.random.default_rng(action_seed))

        params = init_params(architecture_for(n, env_cfg, cfg), init_rng)
        self.state = TrainRunState(params=params, best_params=params.copy())
        self.optimizer = RmsProp(cfg.learning_rate, cfg.rmsprop_alpha, cfg.rmsprop_eps)
        self.replay = ReplayBuffer(cfg.replay.buffer_size) if cfg.replay else None
        self._window: List[Tuple[float, float, float]] = []

    def collect(self) -> List[Trajectory]:
        """One episode per environment under the current parameter snapshot."""
        snapshot = self.state.params

        def run(k: int) -> Trajectory:
            return rollout(self.envs[k], snapshot, self.action_rngs[k])

        if self.cfg.n_workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.n_workers) as pool:
                return list(pool.map(run, range(len(self.envs))))
        return [run(k) for k in range(len(self.envs))]

    def train_step(self) -> None:
        batch = self.collect()
        for traj in batch:
            self.state.training_graphs.add(traj.truth)
        self.state.step += sum(len(traj) for traj in batch)

        self.state.params, diagnostics = update(self.state.params, batch, self.cfg, self.optimizer)
        self.state.updates += 1
        mean_return = float(np.mean([traj.episode_return for traj in batch]))
        self._window.append((mean_return, diagnostics.entropy, diagnostics.value_loss))

        if self.replay is not None:
            for traj in batch:
                self.replay.add(traj)
            for _ in range(self.update_rng.poisson(self.cfg.replay.replay_ratio)):
                replayed = self.replay.sample(len(batch), self.update_rng)
                targets = [
                    replay_targets(self.state.params, traj, self.cfg.gamma, self.cfg.replay.importance_clip)
                    for traj in replayed
                ]
                self.state.params, _ = update(self.state.params, replayed, self.cfg, self.optimizer, targets)
                self.state.updates += 1

    def _environment(self) -> dict:
        return {"n": self.n, **self.env_cfg.model_dump(exclude={"seed"})}

    def validate(self) -> MetricsRow:
        report = evaluate(
            self.state.params,
            self.validation_scms,
            self.cfg.eval_episodes,
            self.eval_rng,
            self.env_cfg,
            greedy=self.cfg.eval_greedy,
        )
        window = np.array(self._window) if self._window else np.full((1, 3), np.nan)
        self._window = []
        row = MetricsRow(
            step=self.state.step,
            mean_episode_return=float(window[:, 0].mean()),
            eval_mean_dshd=report.mean_dshd,
            eval_median_dshd=report.median_dshd,
            policy_entropy=float(window[:, 1].mean()),
            value_loss=float(window[:, 2].mean()),
        )
        self.state.metrics.append(row)

        if report.mean_dshd < self.state.best_score:
            self.state.best_score = report.mean_dshd
            self.state.best_params = self.state.params.copy()
            self.state.stale_evaluations = 0
            if self.output_dir is not None:
                save_params(self.state.best_params, self.output_dir / "best.ckpt", self._environment())
        else:
            self.state.stale_evaluations += 1
        self.state.best_history.append(self.state.best_score)

        if self.output_dir is not None:
            save_params(self.state.params, self.output_dir / "latest.ckpt", self._environment())
            write_metrics_csv(self.output_dir / "metrics.csv", self.state.metrics)
        logger.info(
            "step=%d return=%.3f val_dshd=%.3f best=%.3f entropy=%.3f value_loss=%.4f",
            row.step, row.mean_episode_return, row.eval_mean_dshd, self.state.best_score,
            row.policy_entropy, row.value_loss,
        )
        return row

    def should_stop(self) -> bool:
        cfg = self.cfg
        if cfg.target_dshd is not None and self.state.best_score <= cfg.target_dshd:
            logger.info("Validation target %.3f reached at step %d", cfg.target_dshd, self.state.step)
            return True
        if cfg.early_stop_patience is not None and self.state.stale_evaluations >= cfg.early_stop_patience:
            logger.info("No improvement for %d validations, stopping at step %d", cfg.early_stop_patience, self.state.step)
            return True
        return False

    def run(self) -> TrainRunState:
        next_eval = self.cfg.eval_interval
        last_eval = -1
        while self.state.step < self.cfg.total_steps:
            self.train_step()
            if self.state.step >= next_eval:
                self.validate()
                last_eval = self.state.step
                while next_eval <= self.state.step:
                    next_eval += self.cfg.eval_interval
                if self.should_stop():
                    self.state.stopped_early = True
                    break
        if last_eval != self.state.step:
            self.validate()
        return self.state


def train(
    test_graphs: Iterable[Dag],
    n: int,
    env_cfg: EnvConfig,
    cfg: TrainConfig,
    scm_cfg: Optional[ScmGenConfig] = None,
    scm_sampler: Optional[ScmSampler] = None,
    validation_scms: Optional[Sequence[Scm]] = None,
    output_dir: Optional[Path] = None,
) -> TrainRunState:
    """
    Meta-train a policy. Training SCMs come from ``scm_sampler`` or, by
    default, from rejection sampling outside ``test_graphs``. Validation SCMs
    are generated from the same distribution unless given.
    """
    test_graphs = list(test_graphs)
    scm_cfg = scm_cfg or ScmGenConfig()
    if scm_sampler is None:
        def scm_sampler(rng: np.random.Generator) -> Scm:
            return sample_training_scm(n, test_graphs, scm_cfg, rng, cfg.max_rejections)
    if validation_scms is None:
        validation_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
        validation_scms = [scm_sampler(validation_rng) for _ in range(cfg.validation_scms)]

    trainer = Trainer(n, env_cfg, cfg, scm_sampler, validation_scms, output_dir)
    logger.info(
        "Training n=%d for %d steps with %d parameters (%d envs, %d workers)",
        n, cfg.total_steps, trainer.state.params.num_params, cfg.n_parallel_envs, cfg.n_workers,
    )
    return trainer.run()
