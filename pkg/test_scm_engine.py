#!/usr/bin/env python3
"""
Tests for linear SCM sampling, generation, moments and files
"""

import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from graph_core import Dag, all_dags, random_dag
from scm_engine import (
    Intervention,
    NoiseSpec,
    Scm,
    ScmError,
    ScmGenConfig,
    StructuralEq,
    closed_form_covariance,
    generate_linear_scm,
    induced_dag,
    read_scms,
    sample,
    sample_batch,
    toy_pair,
    write_scms,
)


def chain_scm(w=0.8, s0=0.3, s1=0.2):
    return Scm(n=2, equations=[
        StructuralEq(noise=NoiseSpec(std_dev=s0)),
        StructuralEq(parents=[0], weights=[w], noise=NoiseSpec(std_dev=s1)),
    ])


class TestSample:
    def test_fork_observational_copies_root(self):
        fork, _ = toy_pair()
        out = sample(fork, Intervention(), np.random.default_rng(0))
        assert out[0] == out[1] == out[2]

    def test_chain_intervention_propagates(self):
        _, chain = toy_pair()
        out = sample(chain, Intervention.do(1, 5.0), np.random.default_rng(0))
        assert out[1] == 5.0 and out[2] == 5.0

    def test_fork_intervention_leaves_sibling(self):
        fork, _ = toy_pair()
        out = sample(fork, Intervention.do(1, 5.0), np.random.default_rng(0))
        assert out[1] == 5.0
        assert out[2] == out[0]

    def test_none_means_observational(self):
        fork, _ = toy_pair()
        a = sample(fork, None, np.random.default_rng(3))
        b = sample(fork, Intervention(), np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_target_out_of_range(self):
        fork, _ = toy_pair()
        with pytest.raises(ScmError):
            sample(fork, Intervention.do(3, 1.0), np.random.default_rng(0))

    def test_non_descendants_keep_distribution(self):
        rng = np.random.default_rng(21)
        size = 20_000
        for _ in range(5):
            scm = generate_linear_scm(random_dag(4, rng), ScmGenConfig(), rng)
            target = int(rng.integers(4))
            graph = nx.DiGraph()
            graph.add_nodes_from(range(4))
            graph.add_edges_from(induced_dag(scm).edges)
            below = nx.descendants(graph, target)
            keep = [k for k in range(4) if k != target and k not in below]
            observed = sample_batch(scm, None, rng, size)
            intervened = sample_batch(scm, Intervention.do(target, 5.0), rng, size)
            for k in keep:
                se = np.sqrt(observed[:, k].var() / size + intervened[:, k].var() / size)
                assert abs(observed[:, k].mean() - intervened[:, k].mean()) <= 4 * se + 1e-12
            cov_obs = closed_form_covariance(scm)
            cov_do = closed_form_covariance(scm, Intervention.do(target, 5.0))
            assert np.allclose(cov_obs[np.ix_(keep, keep)], cov_do[np.ix_(keep, keep)])

    def test_batch_clamps_target(self):
        scm = generate_linear_scm(random_dag(4, np.random.default_rng(2)), ScmGenConfig(), np.random.default_rng(3))
        batch = sample_batch(scm, Intervention.do(2, 5.0), np.random.default_rng(4), 1000)
        assert batch.shape == (1000, 4)
        assert np.all(batch[:, 2] == 5.0)


class TestGenerate:
    def test_empty_dag(self):
        scm = generate_linear_scm(Dag(n=3), ScmGenConfig(), np.random.default_rng(0))
        assert all(eq.parents == [] for eq in scm.equations)

    def test_deterministic(self):
        chain = Dag(n=3, edges=frozenset({(0, 1), (1, 2)}))
        a = generate_linear_scm(chain, ScmGenConfig(), np.random.default_rng(11))
        b = generate_linear_scm(chain, ScmGenConfig(), np.random.default_rng(11))
        assert a == b

    def test_ranges(self):
        rng = np.random.default_rng(5)
        full = Dag(n=3, edges=frozenset({(0, 1), (0, 2), (1, 2)}))
        for _ in range(2000):
            scm = generate_linear_scm(full, ScmGenConfig(), rng)
            weights = [w for eq in scm.equations for w in eq.weights]
            assert all(-1.0 <= w <= 1.0 for w in weights)
            assert all(0.0 <= eq.noise.std_dev <= 0.5 for eq in scm.equations)

    def test_induced_dag_round_trip(self):
        rng = np.random.default_rng(9)
        for dag in all_dags(3):
            assert induced_dag(generate_linear_scm(dag, ScmGenConfig(), rng)).edges == dag.edges


class TestToyPair:
    def test_graphs(self):
        fork, chain = toy_pair()
        assert induced_dag(fork).edges == {(0, 1), (0, 2)}
        assert induced_dag(chain).edges == {(0, 1), (1, 2)}

    def test_observationally_equivalent(self):
        fork, chain = toy_pair()
        assert np.allclose(closed_form_covariance(fork), 0.01)
        assert np.allclose(closed_form_covariance(chain), 0.01)

    def test_empirically_equivalent(self):
        fork, chain = toy_pair()
        size = 10_000
        a = np.cov(sample_batch(fork, None, np.random.default_rng(1), size), rowvar=False, ddof=0)
        b = np.cov(sample_batch(chain, None, np.random.default_rng(2), size), rowvar=False, ddof=0)
        # standard error of a Gaussian covariance estimate with all entries 0.01
        se = np.sqrt(2 * 0.01 ** 2 / size)
        assert np.all(np.abs(a - b) <= 4 * np.sqrt(2) * se)

    def test_distinguished_by_intervening_on_x1(self):
        fork, chain = toy_pair()
        iv = Intervention.do(1, 5.0)
        assert closed_form_covariance(fork, iv)[2, 2] == pytest.approx(0.01)
        assert closed_form_covariance(chain, iv)[2, 2] == pytest.approx(0.0, abs=1e-15)
        chain_samples = sample_batch(chain, iv, np.random.default_rng(0), 10_000)
        fork_samples = sample_batch(fork, iv, np.random.default_rng(0), 10_000)
        assert chain_samples[:, 2].var() == 0.0
        assert fork_samples[:, 2].var() == pytest.approx(0.01, rel=0.1)


class TestCovariance:
    def test_single_root(self):
        scm = Scm(n=1, equations=[StructuralEq(noise=NoiseSpec(std_dev=0.3))])
        assert closed_form_covariance(scm)[0, 0] == pytest.approx(0.09)

    def test_chain_variance(self):
        cov = closed_form_covariance(chain_scm(w=0.8, s0=0.3, s1=0.2))
        assert cov[1, 1] == pytest.approx(0.8 ** 2 * 0.09 + 0.04)
        assert cov[0, 1] == pytest.approx(0.8 * 0.09)

    def test_intervention_zeroes_target(self):
        cov = closed_form_covariance(chain_scm(), Intervention.do(1, 5.0))
        assert cov[1, 1] == pytest.approx(0.0, abs=1e-15)
        assert cov[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_intervention_does_not_mutate_scm(self):
        scm = chain_scm()
        closed_form_covariance(scm, Intervention.do(1, 5.0))
        assert scm.weight_matrix[0, 1] == 0.8

    @pytest.mark.slow
    def test_empirical_matches_closed_form(self):
        rng = np.random.default_rng(2024)
        cfg = ScmGenConfig()
        for k in range(20):
            n = 3 if k % 2 == 0 else 4
            scm = generate_linear_scm(random_dag(n, rng), cfg, rng)
            samples = sample_batch(scm, None, rng, 100_000)
            expected = closed_form_covariance(scm)
            empirical = np.cov(samples, rowvar=False, ddof=0)
            # standard error of a covariance estimate for Gaussian data
            se = np.sqrt((expected ** 2 + np.outer(np.diag(expected), np.diag(expected))) / 100_000)
            assert np.all(np.abs(empirical - expected) <= 5 * se + 1e-12)


class TestModels:
    def test_cyclic_scm_rejected(self):
        with pytest.raises(ValidationError):
            Scm(n=2, equations=[
                StructuralEq(parents=[1], weights=[1.0]),
                StructuralEq(parents=[0], weights=[1.0]),
            ])

    def test_weight_count_mismatch(self):
        with pytest.raises(ValidationError):
            StructuralEq(parents=[0, 1], weights=[1.0])

    def test_negative_std_rejected(self):
        with pytest.raises(ValidationError):
            NoiseSpec(std_dev=-0.1)

    def test_topological_order_ties_by_index(self):
        fork, _ = toy_pair()
        assert fork.topological_order == [0, 1, 2]

    def test_generator_ranges_checked(self):
        with pytest.raises(ValidationError):
            ScmGenConfig(weight_low=1.0, weight_high=-1.0)


class TestScmFiles:
    def test_write_then_read(self, tmp_path):
        rng = np.random.default_rng(0)
        scms = [generate_linear_scm(dag, ScmGenConfig(), rng) for dag in all_dags(3)[:5]]
        path = tmp_path / "scms.jsonl"
        write_scms(path, scms)
        assert read_scms(path) == scms

    def test_mismatched_edges(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"n": 2, "edges": [[0, 1]], "weights": [], "sigmas": [0.1, 0.1]}\n')
        with pytest.raises(ScmError):
            read_scms(path)
