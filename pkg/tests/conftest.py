"""Shared builders for small test trees."""

from __future__ import annotations

import numpy as np

from rumor_source import GraphSpec, InfectionTree


def arrival_tree(parents, d=None, spec=None) -> InfectionTree:
    """Tree from a parent list for labels 2..n (1-based labels).

    The host degree defaults to the smallest regular degree that fits the
    realized degrees (at least 3).
    """
    n = len(parents) + 1
    parent = np.zeros(n + 1, dtype=np.int64)
    parent[2:] = parents
    if spec is None:
        if d is None:
            deg = np.bincount(parent[2:], minlength=n + 1)
            deg[2:] += 1
            d = max(3, int(deg.max()))
        spec = GraphSpec("regular", d)
    return InfectionTree(spec=spec, parent=parent)


def path_tree(n, d=3) -> InfectionTree:
    return arrival_tree([k - 1 for k in range(2, n + 1)], d=d)


def star_tree(n, d=None) -> InfectionTree:
    return arrival_tree([1] * (n - 1), d=d)


def tree_from_networkx(graph, root) -> InfectionTree:
    """Relabel an arbitrary networkx tree by BFS order from root."""
    import networkx as nx

    order = [root] + [v for _, v in nx.bfs_edges(graph, root)]
    label = {v: i + 1 for i, v in enumerate(order)}
    parents = [0] * (graph.number_of_nodes() + 1)
    for u, v in nx.bfs_edges(graph, root):
        parents[label[v]] = label[u]
    return arrival_tree(parents[2:])


def random_arrival_tree(rng, n, d=None) -> InfectionTree:
    """Uniform-attachment tree: a generic valid arrival labeling."""
    parents = [int(rng.integers(1, k)) for k in range(2, n + 1)]
    return arrival_tree(parents, d=d)
