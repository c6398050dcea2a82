"""
Frozen-weight evaluation and the random-DAG baseline
"""

import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from graph_core import dshd, random_dag
from meta_env import CausalDiscoveryEnv, EnvConfig, build_action_space, observation_size, write_trace_csv
from neural_policy import PolicyParams
from scm_engine import Scm, induced_dag

from .models import EpisodeRecord, EvalReport, TrainingError
from .rollout import rollout

logger = logging.getLogger(__name__)


def check_architecture(params: PolicyParams, env_cfg: EnvConfig, n: int) -> None:
    arch = params.architecture
    n_actions = len(build_action_space(n, env_cfg.values_for(n)))
    if arch.input_dim != observation_size(n) or arch.n_actions != n_actions:
        raise TrainingError(
            f"Policy expects input {arch.input_dim} and {arch.n_actions} actions; "
            f"environment with n={n} has {observation_size(n)} and {n_actions}"
        )


def evaluate(
    params: PolicyParams,
    scms: Sequence[Scm],
    episodes_per_scm: int,
    rng: np.random.Generator,
    env_cfg: EnvConfig,
    greedy: bool = False,
    trace_dir: Optional[Path] = None,
) -> EvalReport:
    """
    Run episodes without updates and collect final dSHD, intervention
    counts per variable and wall-clock time per estimation.
    """
    if not scms:
        raise TrainingError("No SCMs to evaluate")
    n = scms[0].n
    if any(scm.n != n for scm in scms):
        raise TrainingError("All evaluation SCMs must have the same number of variables")
    check_architecture(params, env_cfg, n)

    env = CausalDiscoveryEnv(env_cfg, n)
    env.np_random = rng
    mode = "greedy" if greedy else "stochastic"
    counts = [0] * n
    records: List[EpisodeRecord] = []
    for scm_index, scm in enumerate(scms):
        for episode in range(episodes_per_scm):
            started = time.perf_counter()
            traj = rollout(env, params, rng, scm=scm, mode=mode, record_trace=trace_dir is not None)
            latency_ms = 1000.0 * (time.perf_counter() - started)
            for node in traj.interventions:
                if node is not None:
                    counts[node] += 1
            records.append(EpisodeRecord(
                scm_index=scm_index,
                episode=episode,
                dshd=traj.final_dshd,
                interventions=traj.n_interventions,
                latency_ms=latency_ms,
                actions=[env.space.action(a).describe() for a in traj.actions],
            ))
            if trace_dir is not None:
                write_trace_csv(Path(trace_dir) / f"scm{scm_index:04d}_ep{episode:03d}.csv", traj.trace)
    report = EvalReport.from_episodes(records, counts)
    logger.debug("Evaluated %d episodes: mean dSHD %.3f", len(records), report.mean_dshd)
    return report


def random_baseline(scms: Sequence[Scm], rng: np.random.Generator, repetitions: int = 1) -> EvalReport:
    """Score one uniformly ordered random DAG per SCM and repetition."""
    if not scms:
        raise TrainingError("No SCMs to score")
    records = []
    for scm_index, scm in enumerate(scms):
        truth = induced_dag(scm)
        for episode in range(repetitions):
            started = time.perf_counter()
            guess = random_dag(scm.n, rng)
            records.append(EpisodeRecord(
                scm_index=scm_index,
                episode=episode,
                dshd=dshd(guess, truth),
                interventions=0,
                latency_ms=1000.0 * (time.perf_counter() - started),
            ))
    return EvalReport.from_episodes(records, [0] * scms[0].n)
