"""
Data models for linear-Gaussian structural causal models
"""

from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


class ScmError(ValueError):
    """Raised for invalid SCMs, interventions or SCM files."""


class NoiseSpec(BaseModel):
    """Gaussian exogenous noise N(mean, std_dev)."""
    model_config = ConfigDict(frozen=True)

    mean: float = Field(default=0.0, description="Noise mean")
    std_dev: float = Field(default=0.0, ge=0.0, description="Noise standard deviation")


class StructuralEq(BaseModel):
    """Additive linear mechanism X_i = sum(w * parent) + U_i."""
    model_config = ConfigDict(frozen=True)

    parents: List[int] = Field(default_factory=list, description="Parent node indices")
    weights: List[float] = Field(default_factory=list, description="One weight per parent")
    noise: NoiseSpec = Field(default_factory=NoiseSpec, description="Exogenous noise")

    @model_validator(mode="after")
    def _check_parents(self):
        if len(self.weights) != len(self.parents):
            raise ValueError(
                f"{len(self.weights)} weights for {len(self.parents)} parents"
            )
        if len(set(self.parents)) != len(self.parents):
            raise ValueError(f"Duplicate parents {self.parents}")
        return self


class Scm(BaseModel):
    """Structural causal model over n endogenous variables."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, description="Number of endogenous variables")
    equations: List[StructuralEq] = Field(description="One structural equation per variable")

    # tuples, not arrays: private state takes part in model equality
    _order: Tuple[int, ...] = PrivateAttr(default=())
    _weights: Tuple[Tuple[float, ...], ...] = PrivateAttr(default=())
    _means: Tuple[float, ...] = PrivateAttr(default=())
    _stds: Tuple[float, ...] = PrivateAttr(default=())

    @model_validator(mode="after")
    def _check_structure(self):
        if len(self.equations) != self.n:
            raise ValueError(f"{len(self.equations)} equations for n={self.n}")
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        for child, eq in enumerate(self.equations):
            for parent in eq.parents:
                if not 0 <= parent < self.n:
                    raise ValueError(f"Parent {parent} of X{child} out of range")
                if parent == child:
                    raise ValueError(f"X{child} lists itself as a parent")
                graph.add_edge(parent, child)
        if not nx.is_directed_acyclic_graph(graph):
            raise ValueError("Induced graph of the SCM is cyclic")
        return self

    def model_post_init(self, __context) -> None:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        weights = [[0.0] * self.n for _ in range(self.n)]
        for child, eq in enumerate(self.equations):
            for parent, weight in zip(eq.parents, eq.weights):
                if 0 <= parent < self.n and child < self.n and parent != child:
                    graph.add_edge(parent, child)
                    weights[parent][child] = float(weight)
        try:
            # ties broken by node index
            self._order = tuple(nx.lexicographical_topological_sort(graph))
        except nx.NetworkXUnfeasible:
            self._order = ()  # rejected by _check_structure
        self._weights = tuple(tuple(row) for row in weights)
        self._means = tuple(eq.noise.mean for eq in self.equations)
        self._stds = tuple(eq.noise.std_dev for eq in self.equations)

    @property
    def topological_order(self) -> List[int]:
        return list(self._order)

    @property
    def weight_matrix(self) -> np.ndarray:
        """A[p, c] = weight of parent p in the equation of c."""
        return np.array(self._weights, dtype=np.float64).reshape(self.n, self.n)

    @property
    def noise_means(self) -> np.ndarray:
        return np.array(self._means, dtype=np.float64)

    @property
    def noise_stds(self) -> np.ndarray:
        return np.array(self._stds, dtype=np.float64)


class Intervention(BaseModel):
    """do(X_node = value), or observational sampling when node is None."""
    model_config = ConfigDict(frozen=True)

    node: Optional[int] = Field(default=None, ge=0, description="Intervened node, None for I = {}")
    value: float = Field(default=0.0, description="Clamped value of the intervened node")

    @classmethod
    def do(cls, node: int, value: float) -> "Intervention":
        return cls(node=node, value=value)


class ScmGenConfig(BaseModel):
    """Ranges for random linear SCM generation."""
    model_config = ConfigDict(frozen=True)

    weight_low: float = Field(default=-1.0, description="Lower bound of edge weights")
    weight_high: float = Field(default=1.0, description="Upper bound of edge weights")
    sigma_low: float = Field(default=0.0, ge=0.0, description="Lower bound of noise std dev")
    sigma_high: float = Field(default=0.5, ge=0.0, description="Upper bound of noise std dev")

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.weight_low > self.weight_high:
            raise ValueError(f"weight_low {self.weight_low} > weight_high {self.weight_high}")
        if self.sigma_low > self.sigma_high:
            raise ValueError(f"sigma_low {self.sigma_low} > sigma_high {self.sigma_high}")
        return self
