"""
Directed graphs, lexicographic encoding, dSHD and random DAG sampling
"""

from .models import Dag, DirectedGraph, GraphError, StructureKind
from .dag import (
    all_dags,
    apply_structure_action,
    count_dags,
    decode,
    dshd,
    encode,
    node_pairs,
    random_dag,
)
from .io import read_graphs, write_graphs

__all__ = [
    "Dag",
    "DirectedGraph",
    "GraphError",
    "StructureKind",
    "all_dags",
    "apply_structure_action",
    "count_dags",
    "decode",
    "dshd",
    "encode",
    "node_pairs",
    "random_dag",
    "read_graphs",
    "write_graphs",
]
