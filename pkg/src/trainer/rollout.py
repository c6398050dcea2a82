"""
Training-SCM sampling, episode rollouts and advantage estimation
"""

import logging
from typing import Iterable, Literal, Optional, Tuple

import numpy as np

from graph_core import Dag, count_dags, dshd, random_dag
from meta_env import ActionKind, CausalDiscoveryEnv, TraceRow
from neural_policy import HiddenState, PolicyParams, forward, sample_action
from scm_engine import Scm, ScmGenConfig, generate_linear_scm

from .models import RejectionBudgetExceeded, Trajectory

logger = logging.getLogger(__name__)


def sample_training_scm(
    n: int,
    test_graphs: Iterable[Dag],
    cfg: ScmGenConfig,
    rng: np.random.Generator,
    max_rejections: int = 10_000,
) -> Scm:
    """
    Rejection-sample a random DAG that is not a test graph and build a
    linear SCM on it.
    """
    excluded = {g.edges for g in test_graphs if g.n == n}
    if len(excluded) >= count_dags(n):
        raise RejectionBudgetExceeded(f"Test set holds every DAG on {n} nodes")
    for _ in range(max_rejections):
        dag = random_dag(n, rng)
        if dag.edges not in excluded:
            return generate_linear_scm(dag, cfg, rng)
    raise RejectionBudgetExceeded(
        f"No DAG outside the {len(excluded)} test graphs after {max_rejections} draws"
    )


def rollout(
    env: CausalDiscoveryEnv,
    params: PolicyParams,
    rng: np.random.Generator,
    scm: Optional[Scm] = None,
    mode: Literal["stochastic", "greedy"] = "stochastic",
    record_trace: bool = False,
) -> Trajectory:
    """
    Run one full episode with the recurrent policy.

    The hidden state starts at zero and is dropped after the episode.
    ``rng`` drives action selection; the environment draws from its own
    generator.
    """
    obs, _ = env.reset(options={"scm": scm} if scm is not None else None)
    mask = env.action_masks()
    hidden = HiddenState.zeros(params.architecture.lstm_width)

    observations, masks = [], []
    actions, rewards, log_probs, values, terminal, interventions = [], [], [], [], [], []
    trace = []
    done = False
    while not done:
        output, hidden = forward(params, obs, hidden, mask)
        index = sample_action(output, rng, mode)
        action = env.space.action(index)
        next_obs, reward, done, _, info = env.step(index)

        observations.append(obs)
        masks.append(mask)
        actions.append(index)
        rewards.append(reward)
        log_probs.append(float(np.log(output.action_probs[index])))
        values.append(output.value)
        terminal.append(done)
        interventions.append(action.node if action.kind is ActionKind.INTERVENE else None)
        if record_trace:
            trace.append(TraceRow.from_step(len(actions) - 1, index, action, reward, info["dshd"], next_obs))
        obs = next_obs

    return Trajectory(
        observations=np.array(observations),
        masks=np.array(masks),
        actions=actions,
        rewards=rewards,
        log_probs=log_probs,
        values=values,
        terminal=terminal,
        interventions=interventions,
        truth=env.state.truth,
        final_dshd=dshd(env.state.epistemic, env.state.truth),
        trace=trace,
    )


def compute_advantages(traj: Trajectory, gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Finite-horizon discounted returns and advantages return_t - value_t."""
    rewards = np.asarray(traj.rewards, dtype=np.float64)
    returns = np.zeros_like(rewards)
    running = 0.0
    for t in reversed(range(len(rewards))):
        running = rewards[t] + gamma * running
        returns[t] = running
    return returns, returns - np.asarray(traj.values, dtype=np.float64)
