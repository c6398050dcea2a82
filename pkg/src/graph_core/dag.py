"""
Graph operations: lexicographic encoding, dSHD, random DAGs and enumeration
"""

import itertools
import math
from typing import List, Sequence, Tuple

import numpy as np

from .models import Dag, DirectedGraph, GraphError, StructureKind

# Encoding alphabet for one unordered pair (i, j), i < j
NO_EDGE = 0.0
FORWARD = 0.5
BACKWARD = 1.0

MAX_ENUMERATION_NODES = 4


def node_pairs(n: int) -> List[Tuple[int, int]]:
    """All unordered pairs (i, j) with i < j in lexicographic order."""
    if n < 1:
        raise GraphError(f"Node count must be >= 1, got {n}")
    return list(itertools.combinations(range(n), 2))


def encode(graph: DirectedGraph) -> np.ndarray:
    """
    Encode a graph as a vector over lexicographically ordered node pairs.

    Each entry is 0 for no edge, 0.5 for an edge from the smaller to the
    larger node and 1 for the opposite direction. If an epistemic model
    holds both orientations of a pair, the smaller-to-larger one is encoded.
    """
    pairs = node_pairs(graph.n)
    values = np.zeros(len(pairs), dtype=np.float64)
    for k, (i, j) in enumerate(pairs):
        if (i, j) in graph.edges:
            values[k] = FORWARD
        elif (j, i) in graph.edges:
            values[k] = BACKWARD
    return values


def decode(encoding: Sequence[float], n: int) -> DirectedGraph:
    """Inverse of encode. The result is not required to be acyclic."""
    pairs = node_pairs(n)
    if len(encoding) != len(pairs):
        raise GraphError(
            f"Encoding length {len(encoding)} does not match n={n} "
            f"(expected {len(pairs)})"
        )
    edges = set()
    for value, (i, j) in zip(encoding, pairs):
        if value == NO_EDGE:
            continue
        if value == FORWARD:
            edges.add((i, j))
        elif value == BACKWARD:
            edges.add((j, i))
        else:
            raise GraphError(f"Encoding value {value} not in {{0, 0.5, 1}}")
    return DirectedGraph(n=n, edges=frozenset(edges))


def dshd(pred: DirectedGraph, target: DirectedGraph) -> int:
    """Directed structural Hamming distance |E_P \\ E_T| + |E_T \\ E_P|."""
    if pred.n != target.n:
        raise GraphError(f"Node count mismatch: {pred.n} vs {target.n}")
    return len(pred.edges ^ target.edges)


def random_dag(n: int, rng: np.random.Generator) -> Dag:
    """
    Sample a DAG: a uniform random topological order, then each of the
    C(n, 2) order-respecting edges independently with probability 0.5.
    """
    if n < 1:
        raise GraphError(f"Node count must be >= 1, got {n}")
    order = rng.permutation(n)
    keep = rng.random(n * (n - 1) // 2) < 0.5
    edges = {
        (int(order[a]), int(order[b]))
        for (a, b), kept in zip(itertools.combinations(range(n), 2), keep)
        if kept
    }
    return Dag(n=n, edges=frozenset(edges))


def apply_structure_action(
    graph: DirectedGraph,
    kind: StructureKind,
    pair: Tuple[int, int],
) -> DirectedGraph:
    """
    Add, delete or reverse the directed edge pair[0] -> pair[1].

    Edits that do not apply (deleting or reversing a missing edge, adding an
    existing one) return the graph unchanged. Acyclicity is not enforced.
    """
    src, dst = pair
    if src == dst:
        raise GraphError(f"Structure action on self-loop ({src}, {dst})")
    if not (0 <= src < graph.n and 0 <= dst < graph.n):
        raise GraphError(f"Pair ({src}, {dst}) out of range for n={graph.n}")

    edge = (src, dst)
    edges = set(graph.edges)
    kind = StructureKind(kind)
    if kind is StructureKind.ADD:
        if edge in edges:
            return graph
        edges.add(edge)
    elif kind is StructureKind.DELETE:
        if edge not in edges:
            return graph
        edges.discard(edge)
    else:
        if edge not in edges:
            return graph
        edges.discard(edge)
        edges.add((dst, src))
    return DirectedGraph(n=graph.n, edges=frozenset(edges))


def all_dags(n: int) -> List[Dag]:
    """Every labelled DAG on n <= 4 nodes, without duplicates."""
    if n < 1:
        raise GraphError(f"Node count must be >= 1, got {n}")
    if n > MAX_ENUMERATION_NODES:
        raise GraphError(f"Enumeration supports n <= {MAX_ENUMERATION_NODES}, got {n}")

    pairs = node_pairs(n)
    dags = []
    for encoding in itertools.product((NO_EDGE, FORWARD, BACKWARD), repeat=len(pairs)):
        graph = decode(encoding, n)
        if graph.is_acyclic():
            dags.append(Dag(n=n, edges=graph.edges))
    return dags


def count_dags(n: int) -> int:
    """Number of labelled DAGs on n nodes (Robinson's recurrence)."""
    if n < 0:
        raise GraphError(f"Node count must be >= 0, got {n}")
    counts = [1]
    for m in range(1, n + 1):
        counts.append(sum(
            (-1) ** (k + 1) * math.comb(m, k) * 2 ** (k * (m - k)) * counts[m - k]
            for k in range(1, m + 1)
        ))
    return counts[n]
