#!/usr/bin/env python3
"""
Tests for the causal-discovery environment
"""

import csv

import numpy as np
import pytest

from graph_core import Dag, DirectedGraph, StructureKind, dshd, random_dag
from meta_env import (
    Action,
    ActionKind,
    CausalDiscoveryEnv,
    EnvConfig,
    EnvError,
    TraceRow,
    build_action_space,
    discounted_return,
    legal_action_mask,
    observation_size,
    reset,
    step,
    write_trace_csv,
)
from scm_engine import ScmGenConfig, generate_linear_scm, toy_pair


@pytest.fixture
def chain():
    return toy_pair()[1]


class TestActionSpace:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_size_formula(self, n):
        space = build_action_space(n, [[5.0]] * n)
        assert len(space) == n + 1 + 3 * n * (n - 1)

    def test_known_sizes(self):
        assert len(build_action_space(3, [[5.0]] * 3)) == 22
        assert len(build_action_space(4, [[5.0]] * 4)) == 41
        assert len(build_action_space(3, [[0.0, 5.0]] * 3)) == 25

    def test_order(self):
        space = build_action_space(3, [[5.0]] * 3)
        assert [a.kind for a in space.actions[:4]] == [ActionKind.INTERVENE] * 3 + [ActionKind.NON_ACTION]
        assert space.actions[4] == Action.edit(StructureKind.ADD, (0, 1))
        assert space.actions[5] == Action.edit(StructureKind.ADD, (0, 2))
        assert space.actions[6] == Action.edit(StructureKind.ADD, (1, 0))
        assert space.actions[10] == Action.edit(StructureKind.DELETE, (0, 1))
        assert space.actions[-1] == Action.edit(StructureKind.REVERSE, (2, 1))

    def test_index_lookup(self):
        space = build_action_space(3, [[5.0]] * 3)
        for k, action in enumerate(space.actions):
            assert space.index(action) == k

    def test_unknown_action(self):
        space = build_action_space(3, [[5.0]] * 3)
        with pytest.raises(EnvError):
            space.index(Action.intervene(0, 1.0))
        with pytest.raises(EnvError):
            space.action(22)

    def test_single_node_rejected(self):
        with pytest.raises(EnvError):
            build_action_space(1, [[5.0]])


class TestMask:
    def test_all_legal(self):
        assert legal_action_mask(EnvConfig(), 3).sum() == 22

    def test_interventions_disabled(self):
        mask = legal_action_mask(EnvConfig(allow_interventions=False), 3)
        assert mask.sum() == 19
        assert not mask[:3].any()
        assert mask[3]


class TestReset:
    def test_initial_observation(self, chain):
        state, obs = reset(EnvConfig(), chain, np.random.default_rng(0))
        assert obs.target_onehot.tolist() == [0.0, 0.0, 0.0]
        assert obs.time == 0.0
        assert obs.flat().shape == (observation_size(3),)
        assert state.epistemic.is_acyclic()
        assert state.truth.edges == {(0, 1), (1, 2)}

    def test_same_seed_same_observation(self, chain):
        _, a = reset(EnvConfig(), chain, np.random.default_rng(5))
        _, b = reset(EnvConfig(), chain, np.random.default_rng(5))
        assert np.array_equal(a.flat(), b.flat())


class TestStep:
    def test_structure_action_reward(self, chain):
        state, _ = reset(EnvConfig(), chain, np.random.default_rng(0))
        _, reward, done = step(state, Action.edit(StructureKind.ADD, (0, 1)), EnvConfig(), np.random.default_rng(1))
        assert reward == 0.0 and not done

    def test_intervention_bonus(self, chain):
        cfg = EnvConfig()
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        obs, reward, _ = step(state, Action.intervene(1, 5.0), cfg, np.random.default_rng(1))
        assert reward == pytest.approx(0.1)
        assert obs.target_onehot.tolist() == [0.0, 1.0, 0.0]
        assert obs.values[1] == 5.0 and obs.values[2] == 5.0

    def test_intervention_applies_to_one_sample(self, chain):
        cfg = EnvConfig()
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        step(state, 0, cfg, np.random.default_rng(1))
        obs, _, _ = step(state, Action.non_action(), cfg, np.random.default_rng(2))
        assert obs.target_onehot.sum() == 0.0

    def test_non_action_bonus_flag(self, chain):
        cfg = EnvConfig(bonus_non_action=True)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        _, reward, _ = step(state, Action.non_action(), cfg, np.random.default_rng(1))
        assert reward == pytest.approx(0.1)

    def test_terminal_step_with_correct_graph(self, chain):
        cfg = EnvConfig(horizon=3)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        state.epistemic = DirectedGraph(n=3, edges=state.truth.edges)
        rng = np.random.default_rng(1)
        step(state, Action.non_action(), cfg, rng)
        step(state, Action.non_action(), cfg, rng)
        obs, reward, done = step(state, Action.edit(StructureKind.ADD, (0, 1)), cfg, rng)
        assert done and reward == 0.0
        assert obs.time == 1.0

    def test_terminal_reward_is_negative_dshd(self, chain):
        cfg = EnvConfig(horizon=1)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        state.epistemic = DirectedGraph(n=3, edges=frozenset({(1, 0)}))
        _, reward, done = step(state, Action.intervene(2, 5.0), cfg, np.random.default_rng(1))
        assert done
        assert reward == pytest.approx(0.1 - dshd(state.epistemic, state.truth))

    def test_step_after_done(self, chain):
        cfg = EnvConfig(horizon=1)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        step(state, 3, cfg, np.random.default_rng(1))
        with pytest.raises(EnvError):
            step(state, 3, cfg, np.random.default_rng(1))

    def test_disabled_intervention_rejected(self, chain):
        cfg = EnvConfig(allow_interventions=False)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        with pytest.raises(EnvError):
            step(state, 0, cfg, np.random.default_rng(1))

    def test_time_feature_advances(self, chain):
        cfg = EnvConfig(horizon=4)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        times = [step(state, 3, cfg, np.random.default_rng(t))[0].time for t in range(4)]
        assert times == [0.25, 0.5, 0.75, 1.0]


def random_episode(cfg, scm, seed):
    """Uniform legal actions; returns the actions, rewards and flat observations."""
    rng = np.random.default_rng(seed)
    state, obs = reset(cfg, scm, rng)
    legal = np.flatnonzero(legal_action_mask(cfg, scm.n))
    actions, rewards, observations = [], [], [obs.flat()]
    done = False
    while not done:
        action = int(rng.choice(legal))
        obs, reward, done = step(state, action, cfg, rng)
        actions.append(state.action_space.action(action))
        rewards.append(reward)
        observations.append(obs.flat())
    return actions, rewards, observations


class TestInvariants:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_delete_everything_on_empty_truth(self, n):
        empty = generate_linear_scm(Dag(n=n), ScmGenConfig(), np.random.default_rng(n))
        for seed in range(50):
            cfg = EnvConfig(horizon=n * (n - 1) + 1)
            rng = np.random.default_rng(seed)
            state, _ = reset(cfg, empty, rng)
            edits = [Action.edit(StructureKind.DELETE, edge) for edge in state.epistemic.sorted_edges()]
            edits += [Action.non_action()] * (cfg.horizon - len(edits))
            for action in edits:
                _, reward, done = step(state, action, cfg, rng)
            assert done
            assert reward == 0.0

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_non_terminal_rewards_are_bonuses(self, n):
        cfg = EnvConfig(horizon=12, intervention_bonus=0.25)
        gen_rng = np.random.default_rng(100 + n)
        for seed in range(50):
            scm = generate_linear_scm(random_dag(n, gen_rng), ScmGenConfig(), gen_rng)
            actions, rewards, _ = random_episode(cfg, scm, seed)
            interventions = sum(a.kind is ActionKind.INTERVENE for a in actions[:-1])
            assert sum(rewards[:-1]) == pytest.approx(0.25 * interventions)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_observation_length(self, n):
        expected = 2 * n + n * (n - 1) // 2 + 1
        assert observation_size(n) == expected
        gen_rng = np.random.default_rng(n)
        for seed in range(50):
            scm = generate_linear_scm(random_dag(n, gen_rng), ScmGenConfig(), gen_rng)
            _, _, observations = random_episode(EnvConfig(horizon=8), scm, seed)
            assert all(obs.shape == (expected,) for obs in observations)

    def test_same_seed_same_episode(self, chain):
        cfg = EnvConfig(horizon=10, intervention_values=[0.0, 5.0])
        a_actions, a_rewards, a_obs = random_episode(cfg, chain, 17)
        b_actions, b_rewards, b_obs = random_episode(cfg, chain, 17)
        assert a_actions == b_actions
        assert a_rewards == b_rewards
        assert all(np.array_equal(x, y) for x, y in zip(a_obs, b_obs))


class TestDiscountedReturn:
    def test_examples(self):
        assert discounted_return([0, 0, -3], 1.0) == -3.0
        assert discounted_return([0.1, 0, -2], 0.99) == pytest.approx(-1.8602)
        assert discounted_return([0, 0, 0], 0.99) == 0.0

    def test_invalid_gamma(self):
        with pytest.raises(EnvError):
            discounted_return([1.0], 0.0)


class TestGymEnv:
    def test_episode(self, chain):
        env = CausalDiscoveryEnv(EnvConfig(horizon=5, seed=3), 3, lambda rng: chain)
        obs, info = env.reset()
        assert obs.shape == env.observation_space.shape
        assert env.action_space.n == 22
        done, steps = False, 0
        while not done:
            obs, reward, done, truncated, info = env.step(3)
            steps += 1
            assert not truncated
        assert steps == 5
        assert reward == -info["dshd"]

    def test_scm_option_overrides_sampler(self, chain):
        fork = toy_pair()[0]
        env = CausalDiscoveryEnv(EnvConfig(), 3, lambda rng: chain)
        env.reset(options={"scm": fork})
        assert env.state.truth.edges == {(0, 1), (0, 2)}

    def test_wrong_size_scm(self, chain):
        env = CausalDiscoveryEnv(EnvConfig(), 4)
        with pytest.raises(EnvError):
            env.reset(options={"scm": chain})


class TestTrace:
    def test_csv_columns(self, chain, tmp_path):
        cfg = EnvConfig(horizon=2)
        state, _ = reset(cfg, chain, np.random.default_rng(0))
        rows = []
        for t in range(2):
            action = state.action_space.action(1)
            obs, reward, _ = step(state, 1, cfg, np.random.default_rng(t))
            rows.append(TraceRow.from_step(t, 1, action, reward, dshd(state.epistemic, state.truth), obs.flat()))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, rows)
        with path.open() as handle:
            table = list(csv.reader(handle))
        assert table[0][:7] == ["step", "action_index", "action_kind", "action",
                                "intervened_node", "reward", "dshd_after_step"]
        assert len(table[0]) == 7 + observation_size(3)
        assert table[1][3] == "do(X1=5)"
        assert table[1][4] == "1"
