"""
Episodic causal-discovery environment: actions, observations, rewards
"""

import logging
from typing import Callable, Optional, Sequence, Tuple, Union

import gymnasium as gym
import numpy as np
from gymnasium import spaces
from gymnasium.utils import seeding

from graph_core import StructureKind, apply_structure_action, dshd, encode, random_dag
from scm_engine import Intervention, Scm, induced_dag, sample

from .models import (
    Action,
    ActionKind,
    ActionSpace,
    EnvConfig,
    EnvError,
    EpisodeState,
    Observation,
    observation_size,
)

logger = logging.getLogger(__name__)

STRUCTURE_ORDER = (StructureKind.ADD, StructureKind.DELETE, StructureKind.REVERSE)


def build_action_space(n: int, values: Sequence[Sequence[float]]) -> ActionSpace:
    """
    Build the discrete action space.

    Order: interventions by node then value, the non-action, then structure
    actions by kind (add, delete, reverse) then lexicographic ordered pair.
    """
    if n < 2:
        raise EnvError(f"Action space needs n >= 2, got {n}")
    if len(values) != n:
        raise EnvError(f"{len(values)} per-node value lists for n={n}")

    actions = [Action.intervene(node, float(v)) for node in range(n) for v in values[node]]
    actions.append(Action.non_action())
    ordered_pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for kind in STRUCTURE_ORDER:
        actions.extend(Action.edit(kind, pair) for pair in ordered_pairs)
    return ActionSpace(n=n, actions=actions)


def legal_action_mask(cfg: EnvConfig, n: int) -> np.ndarray:
    """Boolean mask over the action space; interventions off when disallowed."""
    space = build_action_space(n, cfg.values_for(n))
    return _mask_for(space, cfg)


def _mask_for(space: ActionSpace, cfg: EnvConfig) -> np.ndarray:
    mask = np.ones(len(space), dtype=bool)
    if not cfg.allow_interventions:
        mask[space.intervention_indices] = False
    return mask


def make_observation(
    values: np.ndarray,
    intervention: Intervention,
    state: EpisodeState,
    horizon: int,
) -> Observation:
    onehot = np.zeros(state.scm.n, dtype=np.float64)
    if intervention.node is not None:
        onehot[intervention.node] = 1.0
    return Observation(
        values=np.asarray(values, dtype=np.float64),
        target_onehot=onehot,
        graph=encode(state.epistemic),
        time=state.step / horizon,
    )


def reset(cfg: EnvConfig, scm: Scm, rng: np.random.Generator) -> Tuple[EpisodeState, Observation]:
    """Start an episode: random epistemic DAG and one observational sample."""
    if scm.n < 2:
        raise EnvError(f"Environment needs at least 2 variables, got {scm.n}")
    state = EpisodeState(
        scm=scm,
        truth=induced_dag(scm),
        epistemic=random_dag(scm.n, rng),
        action_space=build_action_space(scm.n, cfg.values_for(scm.n)),
    )
    logger.debug("Episode reset: truth=%s epistemic=%s", state.truth.sorted_edges(), state.epistemic.sorted_edges())
    values = sample(scm, state.current_intervention, rng)
    return state, make_observation(values, state.current_intervention, state, cfg.horizon)


def step(
    state: EpisodeState,
    action: Union[int, Action],
    cfg: EnvConfig,
    rng: np.random.Generator,
) -> Tuple[Observation, float, bool]:
    """
    Apply one action, draw one sample and compute the reward.

    The intervention of an intervention action applies to this step's sample
    only. The terminal step (t = H - 1) subtracts the dSHD between the
    epistemic model and the true graph and ends the episode.
    """
    if state.done:
        raise EnvError("Episode is finished; call reset first")
    if isinstance(action, (int, np.integer)):
        action = state.action_space.action(int(action))
    else:
        state.action_space.index(action)

    reward = 0.0
    if action.kind is ActionKind.STRUCTURE:
        state.epistemic = apply_structure_action(state.epistemic, action.structure, action.pair)
        state.current_intervention = Intervention()
    elif action.kind is ActionKind.INTERVENE:
        if not cfg.allow_interventions:
            raise EnvError(f"Interventions are disabled; got {action.describe()}")
        state.current_intervention = Intervention.do(action.node, action.value)
        reward += cfg.intervention_bonus
    else:
        state.current_intervention = Intervention()
        if cfg.bonus_non_action:
            reward += cfg.intervention_bonus

    values = sample(state.scm, state.current_intervention, rng)
    terminal = state.step == cfg.horizon - 1
    state.step += 1
    observation = make_observation(values, state.current_intervention, state, cfg.horizon)

    if terminal:
        reward -= dshd(state.epistemic, state.truth)
        state.done = True
    return observation, reward, state.done


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """sum_t gamma^t r_t."""
    if not 0.0 < gamma <= 1.0:
        raise EnvError(f"gamma must be in (0, 1], got {gamma}")
    return float(sum(r * gamma ** t for t, r in enumerate(rewards)))


class CausalDiscoveryEnv(gym.Env):
    """
    Gymnasium wrapper around reset/step.

    A new SCM is drawn from ``scm_sampler`` at every reset unless one is
    passed through ``options={"scm": scm}``.
    """

    metadata = {"render_modes": []}

    def __init__(
        self,
        cfg: EnvConfig,
        n: int,
        scm_sampler: Optional[Callable[[np.random.Generator], Scm]] = None,
    ):
        super().__init__()
        self.cfg = cfg
        self.n = n
        self.scm_sampler = scm_sampler
        self.space = build_action_space(n, cfg.values_for(n))
        self.mask = _mask_for(self.space, cfg)
        self.action_space = spaces.Discrete(len(self.space))
        self.observation_space = spaces.Box(
            low=-np.inf, high=np.inf, shape=(observation_size(n),), dtype=np.float64
        )
        self.state: Optional[EpisodeState] = None
        if cfg.seed is not None:
            self.np_random, _ = seeding.np_random(cfg.seed)

    def reset(self, *, seed: Optional[int] = None, options: Optional[dict] = None):
        super().reset(seed=seed)
        scm = (options or {}).get("scm")
        if scm is None:
            if self.scm_sampler is None:
                raise EnvError("No SCM given and no scm_sampler configured")
            scm = self.scm_sampler(self.np_random)
        if scm.n != self.n:
            raise EnvError(f"SCM has {scm.n} variables, environment expects {self.n}")
        self.state, observation = reset(self.cfg, scm, self.np_random)
        return observation.flat(), self._info()

    def step(self, action):
        if self.state is None:
            raise EnvError("Call reset before step")
        observation, reward, done = step(self.state, int(action), self.cfg, self.np_random)
        return observation.flat(), reward, done, False, self._info()

    def action_masks(self) -> np.ndarray:
        return self.mask.copy()

    def _info(self) -> dict:
        return {
            "dshd": dshd(self.state.epistemic, self.state.truth),
            "intervention": self.state.current_intervention.node,
            "step": self.state.step,
        }
