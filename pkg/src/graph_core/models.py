"""
Data models for directed graphs and DAGs
"""

from enum import Enum
from typing import FrozenSet, List, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator


class GraphError(ValueError):
    """Raised for malformed graphs, encodings or structure edits."""


class StructureKind(str, Enum):
    """Edit applied to one directed edge of an epistemic model."""
    ADD = "add"
    DELETE = "delete"
    REVERSE = "reverse"


class DirectedGraph(BaseModel):
    """Directed graph without self-loops. May contain cycles."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, description="Number of nodes, labelled 0..n-1")
    edges: FrozenSet[Tuple[int, int]] = Field(
        default_factory=frozenset,
        description="Directed edges as (from, to) pairs"
    )

    @model_validator(mode="after")
    def _check_edges(self):
        for src, dst in self.edges:
            if not (0 <= src < self.n and 0 <= dst < self.n):
                raise ValueError(f"Edge ({src}, {dst}) out of range for n={self.n}")
            if src == dst:
                raise ValueError(f"Self-loop on node {src}")
        return self

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.to_networkx())

    def parents(self, node: int) -> List[int]:
        """Parents of a node in ascending order."""
        return sorted(src for src, dst in self.edges if dst == node)

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)

    def to_record(self) -> dict:
        """JSON-lines record: {"n": int, "edges": [[from, to], ...]}."""
        return {"n": self.n, "edges": [list(edge) for edge in self.sorted_edges()]}


class Dag(DirectedGraph):
    """Directed acyclic graph. Ground-truth structures are always Dags."""

    @model_validator(mode="after")
    def _check_acyclic(self):
        if not self.is_acyclic():
            raise ValueError(f"Graph with edges {self.sorted_edges()} contains a cycle")
        return self
