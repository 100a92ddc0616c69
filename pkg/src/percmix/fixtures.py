"""Small closed-form graphs accepted anywhere a cluster is.

These carry no lattice metadata; they exist so walk, spectral and conductance
results can be pinned against hand-computable values.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .lattice import BoxSpec
from .percolation import ClusterGraph, largest_cluster, sample_bond_config


def cycle_graph(m: int) -> ClusterGraph:
    if m < 3:
        raise DomainError("cycle needs at least 3 vertices")
    edges = [(i, (i + 1) % m) for i in range(m)]
    return ClusterGraph(np.arange(m), np.array(edges))


def path_graph(m: int) -> ClusterGraph:
    if m < 2:
        raise DomainError("path needs at least 2 vertices")
    edges = [(i, i + 1) for i in range(m - 1)]
    return ClusterGraph(np.arange(m), np.array(edges))


def complete_graph(m: int) -> ClusterGraph:
    if m < 2:
        raise DomainError("complete graph needs at least 2 vertices")
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    return ClusterGraph(np.arange(m), np.array(edges))


def single_edge() -> ClusterGraph:
    return path_graph(2)


def full_box_cluster(d: int, n: int) -> ClusterGraph:
    """The whole box B_d(n) as the p=1 percolation cluster."""
    return largest_cluster(sample_bond_config(BoxSpec(d, n), 1.0, 0))
