#!/usr/bin/env python3
"""
Tests for meta-training: SCM sampling, rollouts, the loss, updates,
evaluation and the training loop
"""

import csv

import numpy as np
import pytest
from pydantic import ValidationError

from graph_core import all_dags
from meta_env import CausalDiscoveryEnv, EnvConfig
from neural_policy import grad_check, init_params, load_params, read_environment
from scm_engine import ScmGenConfig, generate_linear_scm, induced_dag, toy_pair
from trainer import (
    METRICS_COLUMNS,
    LossTargets,
    RejectionBudgetExceeded,
    ReplayBuffer,
    ReplayConfig,
    RmsProp,
    TrainConfig,
    TrainingError,
    actor_critic_loss,
    architecture_for,
    clip_by_global_norm,
    compute_advantages,
    evaluate,
    loss_fn_for,
    on_policy_targets,
    random_baseline,
    replay_targets,
    rollout,
    sample_training_scm,
    train,
    update,
)


def small_cfg(**overrides):
    settings = dict(
        feature_layers=[8],
        lstm_width=6,
        actor_hidden=[8],
        critic_hidden=[4],
        total_steps=60,
        n_parallel_envs=2,
        eval_interval=20,
        validation_scms=3,
        early_stop_patience=None,
        seed=1,
    )
    settings.update(overrides)
    return TrainConfig(**settings)


def make_env(horizon=5, **env_overrides):
    cfg = EnvConfig(horizon=horizon, seed=0, **env_overrides)
    chain = toy_pair()[1]
    return CausalDiscoveryEnv(cfg, 3, lambda rng: chain), cfg


def small_params(env_cfg, seed=0):
    return init_params(architecture_for(3, env_cfg, small_cfg()), np.random.default_rng(seed))


@pytest.fixture
def test_graphs():
    return all_dags(3)[:7]


class TestSampleTrainingScm:
    def test_empty_test_set(self):
        scm = sample_training_scm(3, [], ScmGenConfig(), np.random.default_rng(0))
        assert scm.n == 3

    def test_avoids_test_graphs(self, test_graphs):
        excluded = {g.edges for g in test_graphs}
        rng = np.random.default_rng(1)
        for _ in range(300):
            scm = sample_training_scm(3, test_graphs, ScmGenConfig(), rng)
            assert induced_dag(scm).edges not in excluded

    def test_all_but_one_excluded(self):
        dags = all_dags(3)
        rng = np.random.default_rng(2)
        for _ in range(5):
            scm = sample_training_scm(3, dags[:-1], ScmGenConfig(), rng)
            assert induced_dag(scm).edges == dags[-1].edges

    def test_every_dag_excluded(self):
        with pytest.raises(RejectionBudgetExceeded):
            sample_training_scm(3, all_dags(3), ScmGenConfig(), np.random.default_rng(0))

    def test_rejection_cap(self):
        dags = all_dags(3)
        rng = np.random.default_rng(0)
        with pytest.raises(RejectionBudgetExceeded):
            for _ in range(100):
                sample_training_scm(3, dags[:-1], ScmGenConfig(), rng, max_rejections=1)


class TestRollout:
    def test_episode_shape(self):
        env, cfg = make_env(horizon=6)
        traj = rollout(env, small_params(cfg), np.random.default_rng(0))
        assert len(traj) == 6
        assert traj.terminal == [False] * 5 + [True]
        assert traj.observations.shape == (6, 10)
        assert traj.masks.shape == (6, 22)
        assert traj.truth.edges == {(0, 1), (1, 2)}

    def test_terminal_reward_includes_dshd(self):
        env, cfg = make_env(horizon=4)
        traj = rollout(env, small_params(cfg), np.random.default_rng(3))
        bonus = 0.1 if traj.interventions[-1] is not None else 0.0
        assert traj.rewards[-1] == pytest.approx(bonus - traj.final_dshd)

    def test_no_interventions_when_disabled(self):
        env, cfg = make_env(horizon=20, allow_interventions=False)
        traj = rollout(env, small_params(cfg), np.random.default_rng(0))
        assert traj.n_interventions == 0
        assert not traj.masks[:, :3].any()

    def test_reproducible(self):
        trajectories = []
        for _ in range(2):
            env, cfg = make_env()
            trajectories.append(rollout(env, small_params(cfg), np.random.default_rng(9)))
        a, b = trajectories
        assert a.actions == b.actions and a.rewards == b.rewards
        assert np.array_equal(a.observations, b.observations)

    def test_greedy_mode(self):
        env, cfg = make_env()
        traj = rollout(env, small_params(cfg), np.random.default_rng(0), mode="greedy")
        assert len(traj) == 5

    def test_trace_recorded(self):
        env, cfg = make_env(horizon=3)
        traj = rollout(env, small_params(cfg), np.random.default_rng(0), record_trace=True)
        assert [row.step for row in traj.trace] == [0, 1, 2]
        assert traj.trace[-1].dshd_after_step == traj.final_dshd

    def test_trajectory_terminal_flag_checked(self):
        env, cfg = make_env(horizon=3)
        traj = rollout(env, small_params(cfg), np.random.default_rng(0))
        data = traj.model_dump()
        data["terminal"] = [True, False, False]
        data["observations"], data["masks"] = traj.observations, traj.masks
        with pytest.raises(ValidationError):
            type(traj).model_validate(data)


class TestAdvantages:
    def _traj(self, rewards, values):
        env, cfg = make_env(horizon=len(rewards))
        traj = rollout(env, small_params(cfg), np.random.default_rng(0))
        return traj.model_copy(update={"rewards": rewards, "values": values})

    def test_undiscounted(self):
        returns, advantages = compute_advantages(self._traj([0.0, 0.0, -3.0], [0.0, 0.0, 0.0]), 1.0)
        assert returns.tolist() == [-3.0, -3.0, -3.0]
        assert advantages.tolist() == [-3.0, -3.0, -3.0]

    def test_discounted(self):
        returns, advantages = compute_advantages(self._traj([0.1, 0.0, -2.0], [-1.0, 0.5, 0.0]), 0.99)
        assert returns[0] == pytest.approx(-1.8602)
        assert returns[1] == pytest.approx(-1.98)
        assert returns[2] == pytest.approx(-2.0)
        assert advantages.tolist() == pytest.approx([-0.8602, -2.48, -2.0])


class TestLoss:
    def _batch(self, count=2, horizon=4, **env_overrides):
        env, cfg = make_env(horizon=horizon, **env_overrides)
        params = small_params(cfg)
        rng = np.random.default_rng(0)
        return params, [rollout(env, params, rng) for _ in range(count)]

    def test_grad_check_full_loss(self):
        params, batch = self._batch()
        targets = [on_policy_targets(traj, 0.99) for traj in batch]
        loss_fn = loss_fn_for(batch, targets, 0.5, 0.01)
        assert grad_check(params, loss_fn, n_coordinates=300, rng=np.random.default_rng(1)) <= 1e-4

    def test_grad_check_with_masked_actions(self):
        params, batch = self._batch(allow_interventions=False)
        targets = [on_policy_targets(traj, 0.99) for traj in batch]
        loss_fn = loss_fn_for(batch, targets, 0.5, 0.05)
        assert grad_check(params, loss_fn, rng=np.random.default_rng(2)) <= 1e-4

    def test_replay_targets_on_fresh_episode(self):
        params, batch = self._batch(count=1)
        on_policy = on_policy_targets(batch[0], 0.99)
        replayed = replay_targets(params, batch[0], 0.99, importance_clip=10.0)
        assert np.allclose(replayed.weights, 1.0)
        assert np.allclose(replayed.advantages, on_policy.advantages)

    def test_importance_weights_truncated(self):
        params, batch = self._batch(count=1)
        stale = batch[0].model_copy(update={"log_probs": [-50.0] * len(batch[0])})
        replayed = replay_targets(params, stale, 0.99, importance_clip=10.0)
        assert np.all(replayed.weights == 10.0)

    def test_target_count_mismatch(self):
        params, batch = self._batch()
        with pytest.raises(TrainingError):
            actor_critic_loss(params, batch, [on_policy_targets(batch[0], 0.99)], 0.5, 0.01)

    def test_entropy_rises_under_entropy_bonus(self):
        params, batch = self._batch()
        zero = [
            LossTargets(returns=np.zeros(len(t)), advantages=np.zeros(len(t)), weights=np.ones(len(t)))
            for t in batch
        ]
        cfg = small_cfg(value_loss_coef=0.0, entropy_coef=1.0)
        optimizer = RmsProp(cfg.learning_rate, cfg.rmsprop_alpha, cfg.rmsprop_eps)
        _, first = update(params, batch, cfg, optimizer, zero)
        for _ in range(100):
            params, last = update(params, batch, cfg, optimizer, zero)
        assert last.entropy > first.entropy


class TestOptimizer:
    def test_clip_scales_to_max_norm(self):
        grads = {"a": np.array([3.0, 4.0])}
        clipped, norm = clip_by_global_norm(grads, 1.0)
        assert norm == 5.0
        assert np.allclose(clipped["a"], [0.6, 0.8])

    def test_clip_leaves_small_gradients(self):
        grads = {"a": np.array([0.3, 0.4])}
        clipped, _ = clip_by_global_norm(grads, 1.0)
        assert clipped is grads

    def test_first_rmsprop_step(self):
        _, cfg = make_env()
        params = small_params(cfg)
        grads = {name: np.ones_like(t) for name, t in params.tensors.items()}
        stepped = RmsProp(0.01, 0.99, 1e-5).step(params, grads)
        expected = params.vector() - 0.01 / (np.sqrt(0.01) + 1e-5)
        assert np.allclose(stepped.vector(), expected)


class TestReplayBuffer:
    def test_fifo_eviction_by_steps(self):
        env, cfg = make_env(horizon=5)
        params = small_params(cfg)
        rng = np.random.default_rng(0)
        episodes = [rollout(env, params, rng) for _ in range(3)]
        buffer = ReplayBuffer(capacity=12)
        for traj in episodes:
            buffer.add(traj)
        assert len(buffer) == 2 and buffer.size == 10
        assert buffer.episodes[0] is episodes[1]

    def test_keeps_one_oversized_episode(self):
        env, cfg = make_env(horizon=5)
        buffer = ReplayBuffer(capacity=3)
        buffer.add(rollout(env, small_params(cfg), np.random.default_rng(0)))
        assert len(buffer) == 1

    def test_sample_with_replacement(self):
        env, cfg = make_env(horizon=2)
        buffer = ReplayBuffer(capacity=100)
        buffer.add(rollout(env, small_params(cfg), np.random.default_rng(0)))
        assert len(buffer.sample(4, np.random.default_rng(1))) == 4


class TestEvaluate:
    def _scms(self, count=4):
        rng = np.random.default_rng(0)
        dags = all_dags(3)
        return [generate_linear_scm(dags[k], ScmGenConfig(), rng) for k in range(count)]

    def test_weights_frozen(self):
        cfg = EnvConfig(horizon=5)
        params = small_params(cfg)
        before = params.checksum()
        evaluate(params, self._scms(), 2, np.random.default_rng(0), cfg)
        assert params.checksum() == before

    def test_intervention_accounting(self):
        cfg = EnvConfig(horizon=10)
        report = evaluate(small_params(cfg), self._scms(), 2, np.random.default_rng(0), cfg)
        assert len(report.dshd) == 8
        assert sum(report.intervention_counts) == sum(e.interventions for e in report.episodes)
        if sum(report.intervention_counts):
            assert sum(report.intervention_shares) == pytest.approx(1.0)
        assert all(len(e.actions) == 10 for e in report.episodes)

    def test_no_interventions_without_intervention_actions(self):
        cfg = EnvConfig(horizon=10, allow_interventions=False)
        report = evaluate(small_params(cfg), self._scms(), 1, np.random.default_rng(0), cfg)
        assert report.intervention_counts == [0, 0, 0]
        assert report.intervention_shares == [0.0, 0.0, 0.0]

    def test_reproducible(self):
        cfg = EnvConfig(horizon=5)
        params = small_params(cfg)
        a = evaluate(params, self._scms(), 1, np.random.default_rng(4), cfg)
        b = evaluate(params, self._scms(), 1, np.random.default_rng(4), cfg)
        assert a.dshd == b.dshd

    def test_trace_files(self, tmp_path):
        cfg = EnvConfig(horizon=3)
        evaluate(small_params(cfg), self._scms(2), 1, np.random.default_rng(0), cfg, trace_dir=tmp_path)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["scm0000_ep000.csv", "scm0001_ep000.csv"]

    def test_architecture_mismatch(self):
        params = small_params(EnvConfig())
        with pytest.raises(TrainingError):
            evaluate(params, self._scms(), 1, np.random.default_rng(0), EnvConfig(intervention_values=[0.0, 5.0]))

    def test_empty_scm_list(self):
        cfg = EnvConfig()
        with pytest.raises(TrainingError):
            evaluate(small_params(cfg), [], 1, np.random.default_rng(0), cfg)


class TestRandomBaseline:
    def test_counts(self):
        scms = [generate_linear_scm(d, ScmGenConfig(), np.random.default_rng(0)) for d in all_dags(3)[:3]]
        report = random_baseline(scms, np.random.default_rng(0), repetitions=5)
        assert len(report.dshd) == 15
        assert report.mean_interventions == 0.0

    def test_expectation_matches_enumeration(self):
        # each pair: edge with probability 1/2, direction uniform
        chain = toy_pair()[1]
        report = random_baseline([chain], np.random.default_rng(3), repetitions=20_000)
        assert report.mean_dshd == pytest.approx(1.5 + 0.5 * 2, abs=0.05)

    def test_empty_graph_expectation(self):
        empty = generate_linear_scm(all_dags(3)[0], ScmGenConfig(), np.random.default_rng(0))
        assert induced_dag(empty).edges == frozenset()
        report = random_baseline([empty], np.random.default_rng(5), repetitions=20_000)
        assert report.mean_dshd == pytest.approx(1.5, abs=0.05)


class TestTrain:
    def test_reproducible(self, test_graphs):
        a = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg())
        b = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg())
        assert a.params.checksum() == b.params.checksum()
        assert [m.eval_mean_dshd for m in a.metrics] == [m.eval_mean_dshd for m in b.metrics]

    def test_workers_do_not_change_results(self, test_graphs):
        a = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg(n_workers=1))
        b = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg(n_workers=2))
        assert a.params.checksum() == b.params.checksum()

    def test_run_state(self, test_graphs):
        state = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg())
        assert state.step >= 60
        assert state.updates == state.step // 10
        assert [m.step for m in state.metrics] == [20, 40, 60]
        assert all(b <= a for a, b in zip(state.best_history, state.best_history[1:]))
        assert state.best_score == min(m.eval_mean_dshd for m in state.metrics)
        excluded = {g.edges for g in test_graphs}
        assert all(g.edges not in excluded for g in state.training_graphs)

    def test_target_stops_early(self, test_graphs):
        state = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg(target_dshd=100.0))
        assert state.stopped_early
        assert state.step == 20
        assert len(state.metrics) == 1

    def test_replay_adds_updates(self, test_graphs):
        cfg = small_cfg(replay=ReplayConfig(buffer_size=30, replay_ratio=2.0))
        state = train(test_graphs, 3, EnvConfig(horizon=5), cfg)
        assert state.updates > state.step // 10
        assert state.params.all_finite()

    def test_output_files(self, test_graphs, tmp_path):
        state = train(test_graphs, 3, EnvConfig(horizon=5), small_cfg(), output_dir=tmp_path)
        assert load_params(tmp_path / "best.ckpt").checksum() == state.best_params.checksum()
        assert load_params(tmp_path / "latest.ckpt").checksum() == state.params.checksum()
        stored = read_environment(tmp_path / "best.ckpt")
        assert stored["n"] == 3
        assert stored["horizon"] == 5
        assert "seed" not in stored
        with (tmp_path / "metrics.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == METRICS_COLUMNS
        assert len(rows) == 4

    def test_custom_sampler(self):
        fork, chain = toy_pair()
        state = train([], 3, EnvConfig(horizon=5), small_cfg(),
                      scm_sampler=lambda rng: [fork, chain][rng.integers(2)],
                      validation_scms=[fork, chain])
        assert {g.edges for g in state.training_graphs} <= {induced_dag(fork).edges, induced_dag(chain).edges}

    @pytest.mark.slow
    def test_training_lowers_dshd(self):
        chain = toy_pair()[1]
        env_cfg = EnvConfig(horizon=6)
        cfg = small_cfg(feature_layers=[30], lstm_width=30, actor_hidden=[30], critic_hidden=[10],
                        total_steps=60_000, learning_rate=2e-3, eval_interval=2_000, eval_episodes=10)
        state = train([], 3, env_cfg, cfg, scm_sampler=lambda rng: chain, validation_scms=[chain])
        untrained = init_params(architecture_for(3, env_cfg, cfg), np.random.default_rng(cfg.seed))
        before = evaluate(untrained, [chain], 100, np.random.default_rng(5), env_cfg, greedy=True)
        after = evaluate(state.best_params, [chain], 100, np.random.default_rng(5), env_cfg, greedy=True)
        assert after.mean_dshd < before.mean_dshd - 1.0
        assert after.mean_dshd <= 1.0
