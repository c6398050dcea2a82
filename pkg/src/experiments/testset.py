"""
Held-out test sets of random DAGs and linear SCMs
"""

import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from graph_core import Dag, count_dags, random_dag, write_graphs
from scm_engine import Scm, ScmGenConfig, generate_linear_scm, induced_dag, read_scms, write_scms

from .models import ConfigError

logger = logging.getLogger(__name__)


def graphs_path_for(scms_path: Path) -> Path:
    scms_path = Path(scms_path)
    return scms_path.with_name(f"{scms_path.stem}.graphs.jsonl")


def gen_testset(
    n: int,
    graph_count: int,
    scms_per_graph: int,
    cfg: ScmGenConfig,
    seed: int,
    out_path: Path,
) -> Tuple[List[Dag], List[Scm]]:
    """
    Write ``graph_count`` distinct random DAGs with ``scms_per_graph`` linear
    SCMs each. SCMs go to ``out_path``, graphs to ``<stem>.graphs.jsonl``.
    SCMs of one graph are consecutive.
    """
    if graph_count < 1 or scms_per_graph < 1:
        raise ConfigError("graph_count and scms_per_graph must be positive")
    available = count_dags(n)
    if graph_count > available:
        raise ConfigError(f"Requested {graph_count} distinct DAGs but only {available} exist on {n} nodes")

    rng = np.random.default_rng(seed)
    graphs: List[Dag] = []
    seen = set()
    max_draws = 100_000 + 1000 * graph_count
    draws = 0
    while len(graphs) < graph_count:
        if draws == max_draws:
            raise ConfigError(f"Found only {len(graphs)} distinct DAGs after {max_draws} draws")
        draws += 1
        dag = random_dag(n, rng)
        if dag.edges not in seen:
            seen.add(dag.edges)
            graphs.append(dag)

    scms = [generate_linear_scm(dag, cfg, rng) for dag in graphs for _ in range(scms_per_graph)]
    write_scms(out_path, scms)
    write_graphs(graphs_path_for(out_path), graphs)
    logger.info("Wrote %d graphs and %d SCMs to %s", len(graphs), len(scms), out_path)
    return graphs, scms


def load_testset(path: Path) -> Tuple[List[Dag], List[Scm]]:
    """SCMs of a test set and their distinct graphs in order of appearance."""
    scms = read_scms(path)
    if not scms:
        raise ConfigError(f"Test set {path} is empty")
    graphs: List[Dag] = []
    seen = set()
    for scm in scms:
        dag = induced_dag(scm)
        if dag.edges not in seen:
            seen.add(dag.edges)
            graphs.append(dag)
    return graphs, scms
