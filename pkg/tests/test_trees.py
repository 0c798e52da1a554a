"""Tree structure, rerooted subtree sizes, distances, and the document format."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import arrival_tree, path_tree, random_arrival_tree, star_tree
from rumor_source import (GraphSpec, InfectionTree, SimConfig,
                          TreeDocumentError, ball, derive_seed, deserialize,
                          distance, serialize, simulate, subtree_sizes)


class TestSubtreeSizes:
    def test_three_path_rooted_at_middle(self):
        tree = path_tree(3)
        assert subtree_sizes(tree, 2) == {1: 1, 3: 1}

    def test_star_rooted_at_leaf(self):
        tree = star_tree(4)
        assert subtree_sizes(tree, 2) == {1: 3, 3: 1, 4: 1}

    def test_neighbor_subtrees_partition(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(2, 60))
            tree = random_arrival_tree(rng, n)
            root = int(rng.integers(1, n + 1))
            sizes = subtree_sizes(tree, root)
            neighbors = set(tree.children(root).tolist())
            if root != 1:
                neighbors.add(int(tree.parent[root]))
            assert sum(sizes[v] for v in neighbors) == n - 1

    def test_sizes_recurse(self):
        tree = random_arrival_tree(np.random.default_rng(6), 40)
        root = 17
        sizes = dict(subtree_sizes(tree, root))
        sizes[root] = tree.n
        # size(v) = 1 + sum over v's children in the rooting at root
        order = sorted(sizes, key=lambda v: -sizes[v])
        parent_in_rooting = {root: None}
        stack = [root]
        while stack:
            u = stack.pop()
            for w in list(tree.children(u)) + [int(tree.parent[u])]:
                if w >= 1 and w not in parent_in_rooting:
                    parent_in_rooting[w] = u
                    stack.append(w)
        for v in order:
            kids = [w for w, p in parent_in_rooting.items() if p == v]
            assert sizes[v] == 1 + sum(sizes[w] for w in kids)

    def test_unknown_root_rejected(self):
        with pytest.raises(ValueError):
            subtree_sizes(path_tree(3), 9)


class TestDistance:
    def test_path_ends(self):
        assert distance(path_tree(3), 1, 3) == 2

    def test_reflexive(self):
        tree = random_arrival_tree(np.random.default_rng(7), 30)
        for v in (1, 7, 30):
            assert distance(tree, v, v) == 0

    def test_star_leaves(self):
        assert distance(star_tree(5), 3, 4) == 2

    def test_symmetry(self):
        tree = random_arrival_tree(np.random.default_rng(8), 50)
        rng = np.random.default_rng(9)
        for _ in range(20):
            a, b = rng.integers(1, 51, size=2)
            assert distance(tree, int(a), int(b)) == distance(tree, int(b), int(a))

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            distance(path_tree(3), 1, 4)


class TestInvariants:
    def test_boundary_count_regular(self):
        for d in (2, 3, 10):
            for n in (1, 2, 17, 400):
                tree = simulate(SimConfig(spec=GraphSpec("regular", d),
                                          n=n, seed=derive_seed(1, d * n)))
                assert tree.boundary_size() == n * (d - 2) + 2

    def test_prefix_connectivity(self):
        tree = simulate(SimConfig(spec=GraphSpec("regular", 3), n=200, seed=3))
        for k in (1, 2, 50, 199):
            prefix = tree.prefix(k)
            assert prefix.n == k
            # parent < child for all labels implies every prefix is connected
            reached = {1}
            for v in range(2, k + 1):
                assert int(prefix.parent[v]) in reached
                reached.add(v)

    def test_degree_above_host_rejected(self):
        with pytest.raises(ValueError):
            arrival_tree([1, 1, 1, 1], spec=GraphSpec("regular", 3))

    def test_d2_flagged_simulation_only(self):
        assert GraphSpec("regular", 2).simulation_only
        assert not GraphSpec("regular", 3).simulation_only


class TestBall:
    def test_radius_zero(self):
        assert ball(path_tree(5), [3], 0) == {3}

    def test_covers_everything(self):
        tree = random_arrival_tree(np.random.default_rng(11), 40)
        assert ball(tree, [1], 40) == set(range(1, 41))

    def test_union_of_centers(self):
        tree = path_tree(6)
        assert ball(tree, [2, 5], 1) == {1, 2, 3, 4, 5, 6}


class TestDocuments:
    def test_single_node_round_trip(self):
        tree = arrival_tree([], spec=GraphSpec("regular", 3))
        doc = serialize(tree)
        assert doc == {"spec": {"kind": "regular", "d": 3}, "n": 1,
                       "nodes": [{"id": 1, "parent": None}]}
        assert deserialize(doc) == tree

    def test_large_round_trip(self):
        tree = simulate(SimConfig(spec=GraphSpec("regular", 3), n=1000, seed=42))
        assert deserialize(json.loads(json.dumps(serialize(tree)))) == tree

    def test_glued_round_trip(self):
        tree = simulate(SimConfig(spec=GraphSpec("glued", 3, 6), n=300, seed=4))
        doc = serialize(tree)
        assert doc["spec"] == {"kind": "glued", "d": 3, "D": 6}
        assert {node["side"] for node in doc["nodes"]} <= {"d", "D"}
        restored = deserialize(doc)
        assert restored == tree
        if tree.bridge_D is not None:
            assert restored.bridge_D == tree.bridge_D

    def test_parent_after_child_rejected(self):
        doc = {"spec": {"kind": "regular", "d": 3}, "n": 2,
               "nodes": [{"id": 1, "parent": None}, {"id": 2, "parent": 3}]}
        with pytest.raises(TreeDocumentError, match="earlier arrivals"):
            deserialize(doc)

    def test_missing_node_rejected(self):
        doc = {"spec": {"kind": "regular", "d": 3}, "n": 2,
               "nodes": [{"id": 1, "parent": None}, {"id": 1, "parent": None}]}
        with pytest.raises(TreeDocumentError, match="duplicate"):
            deserialize(doc)

    def test_root_with_parent_rejected(self):
        doc = {"spec": {"kind": "regular", "d": 3}, "n": 1,
               "nodes": [{"id": 1, "parent": 1}]}
        with pytest.raises(TreeDocumentError, match="null parent"):
            deserialize(doc)

    def test_missing_side_rejected(self):
        doc = {"spec": {"kind": "glued", "d": 3, "D": 4}, "n": 1,
               "nodes": [{"id": 1, "parent": None}]}
        with pytest.raises(TreeDocumentError, match="side"):
            deserialize(doc)

    def test_overfull_node_rejected(self):
        doc = {"spec": {"kind": "regular", "d": 3}, "n": 5,
               "nodes": [{"id": 1, "parent": None}] +
                        [{"id": k, "parent": 1} for k in range(2, 6)]}
        with pytest.raises(TreeDocumentError, match="host degree"):
            deserialize(doc)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 10 ** 6), min_size=0, max_size=60),
       st.integers(0, 2 ** 32))
def test_round_trip_property(raw, salt):
    rng = np.random.default_rng(salt)
    parents = [int(rng.integers(1, k)) for k in range(2, len(raw) + 2)]
    tree = arrival_tree(parents)
    assert deserialize(serialize(tree)) == tree


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2 ** 32))
def test_subtree_partition_property(n, salt):
    rng = np.random.default_rng(salt)
    tree = random_arrival_tree(rng, n)
    root = int(rng.integers(1, n + 1))
    sizes = subtree_sizes(tree, root)
    neighbors = set(tree.children(root).tolist())
    if root != 1:
        neighbors.add(int(tree.parent[root]))
    assert sum(sizes[v] for v in neighbors) == n - 1
