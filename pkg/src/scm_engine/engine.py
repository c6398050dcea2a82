"""
Sampling, generation and closed-form moments of linear-Gaussian SCMs
"""

from typing import Optional, Tuple

import numpy as np

from graph_core import Dag

from .models import Intervention, NoiseSpec, Scm, ScmError, ScmGenConfig, StructuralEq

OBSERVATIONAL = Intervention()

TOY_ROOT_STD = 0.1


def _check_intervention(scm: Scm, iv: Optional[Intervention]) -> Intervention:
    iv = iv or OBSERVATIONAL
    if iv.node is not None and iv.node >= scm.n:
        raise ScmError(f"Intervention target X{iv.node} out of range for n={scm.n}")
    return iv


def sample(scm: Scm, iv: Optional[Intervention], rng: np.random.Generator) -> np.ndarray:
    """
    Draw one joint sample of the endogenous variables.

    All exogenous terms are drawn fresh, then the equations are evaluated in
    the SCM's topological order. An intervened variable takes the clamped
    value and ignores its parents and noise; its descendants see the value.
    """
    iv = _check_intervention(scm, iv)
    weights = scm.weight_matrix
    noise = scm.noise_means + scm.noise_stds * rng.standard_normal(scm.n)
    values = np.zeros(scm.n, dtype=np.float64)
    for node in scm.topological_order:
        if node == iv.node:
            values[node] = iv.value
        else:
            values[node] = weights[:, node] @ values + noise[node]
    return values


def sample_batch(
    scm: Scm,
    iv: Optional[Intervention],
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Vectorised version of sample; returns an array of shape (size, n)."""
    iv = _check_intervention(scm, iv)
    weights = scm.weight_matrix
    noise = scm.noise_means + scm.noise_stds * rng.standard_normal((size, scm.n))
    values = np.zeros((size, scm.n), dtype=np.float64)
    for node in scm.topological_order:
        if node == iv.node:
            values[:, node] = iv.value
        else:
            values[:, node] = values @ weights[:, node] + noise[:, node]
    return values


def generate_linear_scm(dag: Dag, cfg: ScmGenConfig, rng: np.random.Generator) -> Scm:
    """
    Build a random additive linear SCM on the given DAG.

    Every edge gets a weight drawn from U[weight_low, weight_high] and every
    variable a noise standard deviation drawn from U[sigma_low, sigma_high].
    Draws happen node by node, parents in ascending order.
    """
    if not dag.is_acyclic():
        raise ScmError("Cannot build an SCM on a cyclic graph")
    equations = []
    for node in range(dag.n):
        parents = dag.parents(node)
        weights = rng.uniform(cfg.weight_low, cfg.weight_high, size=len(parents))
        std_dev = rng.uniform(cfg.sigma_low, cfg.sigma_high)
        equations.append(StructuralEq(
            parents=parents,
            weights=[float(w) for w in weights],
            noise=NoiseSpec(mean=0.0, std_dev=float(std_dev)),
        ))
    return Scm(n=dag.n, equations=equations)


def toy_pair() -> Tuple[Scm, Scm]:
    """
    The two observationally equivalent 3-variable SCMs:
    G1: X1 <- X0 -> X2 and G2: X0 -> X1 -> X2.

    X0 ~ N(0, 0.1); non-root variables copy their parent exactly.
    """
    root = StructuralEq(noise=NoiseSpec(std_dev=TOY_ROOT_STD))

    def copy_of(parent: int) -> StructuralEq:
        return StructuralEq(parents=[parent], weights=[1.0], noise=NoiseSpec(std_dev=0.0))

    fork = Scm(n=3, equations=[root, copy_of(0), copy_of(0)])
    chain = Scm(n=3, equations=[root, copy_of(0), copy_of(1)])
    return fork, chain


def induced_dag(scm: Scm) -> Dag:
    """Graph with an edge parent -> child for every listed parent."""
    edges = {
        (parent, child)
        for child, eq in enumerate(scm.equations)
        for parent in eq.parents
    }
    return Dag(n=scm.n, edges=frozenset(edges))


def closed_form_covariance(scm: Scm, iv: Optional[Intervention] = None) -> np.ndarray:
    """
    Exact covariance M D M^T with M = (I - A^T)^-1.

    A is the weighted adjacency matrix with the intervened variable's incoming
    weights removed, D the diagonal of noise variances with the intervened
    variable's variance set to zero. The intervened coordinate's constant
    mean is not part of the result.
    """
    iv = _check_intervention(scm, iv)
    weights = scm.weight_matrix
    variances = scm.noise_stds ** 2
    if iv.node is not None:
        weights[:, iv.node] = 0.0
        variances[iv.node] = 0.0
    mixing = np.linalg.inv(np.eye(scm.n) - weights.T)
    return mixing @ np.diag(variances) @ mixing.T
