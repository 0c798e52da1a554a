"""Infected subtrees over an implicit infinite host tree.

The host graph is never materialized.  A tree stores, per infected vertex,
its parent in arrival order plus (for glued hosts) which half it lies in;
everything else (degrees, free host slots, adjacency) is derived.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels

REGULAR = "regular"
GLUED = "glued"


class TreeDocumentError(ValueError):
    """A tree document is malformed or violates a structural invariant."""


@dataclass(frozen=True)
class GraphSpec:
    """Host graph: a d-regular tree, or two regular trees joined by a bridge.

    The glued host connects one vertex of a d-regular tree to one vertex of
    a D-regular tree by a single edge, so the bridge endpoints have host
    degree d+1 and D+1.
    """

    kind: str
    d: int
    D: int | None = None

    def __post_init__(self):
        if self.kind == REGULAR:
            if self.d < 2:
                raise ValueError("regular host needs degree d >= 2")
            if self.D is not None:
                raise ValueError("regular host takes no second degree")
        elif self.kind == GLUED:
            if self.D is None or not (3 <= self.d < self.D):
                raise ValueError("glued host needs 3 <= d < D")
        else:
            raise ValueError(f"unknown host kind {self.kind!r}")

    @property
    def simulation_only(self) -> bool:
        """True for d = 2, where the error-bound theory does not apply."""
        return self.kind == REGULAR and self.d == 2

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "d": self.d}
        if self.kind == GLUED:
            out["D"] = self.D
        return out

    @staticmethod
    def from_dict(doc: dict) -> "GraphSpec":
        return GraphSpec(doc["kind"], int(doc["d"]),
                         int(doc["D"]) if "D" in doc else None)


@dataclass(frozen=True, eq=False)
class InfectionTree:
    """Infected subtree with 1-based arrival labels.

    parent[k] < k for every k >= 2 and parent[1] = 0, so every prefix of
    the label range is a connected subtree.  For glued hosts, side[k] is 0
    in the d-half and 1 in the D-half; bridge_d / bridge_D give the labels
    of the infected bridge endpoints when known (simulation records them,
    documents recover them only once the bridge has been crossed).

    Instances are immutable after construction and safe to share across
    workers.
    """

    spec: GraphSpec
    parent: np.ndarray
    side: np.ndarray | None = None
    bridge_d: int | None = None
    bridge_D: int | None = None

    def __post_init__(self):
        parent = np.ascontiguousarray(self.parent, dtype=np.int64)
        object.__setattr__(self, "parent", parent)
        if self.side is not None:
            object.__setattr__(
                self, "side", np.ascontiguousarray(self.side, dtype=np.uint8))
        self._validate()

    def _validate(self):
        n = self.n
        if self.parent.ndim != 1 or self.parent.shape[0] != n + 1:
            raise ValueError("parent must be a flat array of length n+1")
        if n >= 1 and self.parent[1] != 0:
            raise ValueError("the source (label 1) has no parent")
        if n >= 2:
            ks = np.arange(2, n + 1)
            if not np.all((self.parent[2:] >= 1) & (self.parent[2:] < ks)):
                raise ValueError("every parent label must be smaller than its child")
        if self.spec.kind == GLUED:
            if self.side is None or self.side.shape[0] != n + 1:
                raise ValueError("glued tree needs a side marker per node")
            if n >= 2:
                cross = np.flatnonzero(
                    self.side[2:] != self.side[self.parent[2:]]) + 2
                if cross.size > 1:
                    raise ValueError("at most one parent edge may cross the bridge")
                if cross.size == 1:
                    child = int(cross[0])
                    par = int(self.parent[child])
                    got_d = par if self.side[par] == 0 else child
                    got_D = child if self.side[child] == 1 else par
                    if self.bridge_d is None:
                        object.__setattr__(self, "bridge_d", got_d)
                    if self.bridge_D is None:
                        object.__setattr__(self, "bridge_D", got_D)
                    if self.bridge_d != got_d or self.bridge_D != got_D:
                        raise ValueError("bridge labels disagree with the cross edge")
        elif self.side is not None:
            raise ValueError("regular tree carries no side markers")
        if n >= 2:
            deg = np.bincount(self.parent[2:], minlength=n + 1)
            deg[2:] += 1
            host = np.full(n + 1, self.spec.d, dtype=np.int64)
            if self.spec.kind == GLUED:
                host[1:][self.side[1:] == 1] = self.spec.D
                for b in (self.bridge_d, self.bridge_D):
                    if b is not None:
                        host[b] += 1
            if (deg[1:] > host[1:]).any():
                v = int(np.flatnonzero(deg[1:] > host[1:])[0]) + 1
                raise ValueError(
                    f"node {v} has degree {int(deg[v])} above its host degree")

    @property
    def n(self) -> int:
        return self.parent.shape[0] - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, InfectionTree):
            return NotImplemented
        if self.spec != other.spec or not np.array_equal(self.parent, other.parent):
            return False
        if (self.side is None) != (other.side is None):
            return False
        return self.side is None or np.array_equal(self.side, other.side)

    __hash__ = None  # arrays inside; compare by value, do not hash

    @cached_property
    def _children_csr(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        counts = np.bincount(self.parent[2:], minlength=n + 1) if n >= 2 else \
            np.zeros(n + 1, dtype=np.int64)
        ptr = np.zeros(n + 2, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        if n >= 2:
            order = np.argsort(self.parent[2:], kind="stable") + 2
        else:
            order = np.empty(0, dtype=np.int64)
        return ptr, order.astype(np.int64)

    def children(self, v: int) -> np.ndarray:
        """Children of v in arrival order (ascending labels)."""
        self._check_label(v)
        ptr, idx = self._children_csr
        return idx[ptr[v]:ptr[v + 1]]

    def degree(self, v: int) -> int:
        """Degree of v within the infected tree."""
        self._check_label(v)
        ptr, _ = self._children_csr
        deg = int(ptr[v + 1] - ptr[v])
        return deg + (1 if v != 1 else 0)

    def host_degree(self, v: int) -> int:
        self._check_label(v)
        if self.spec.kind == REGULAR:
            return self.spec.d
        base = self.spec.d if self.side[v] == 0 else self.spec.D
        if v == self.bridge_d or v == self.bridge_D:
            return base + 1
        return base

    def free_slots(self, v: int) -> int:
        """Host edges from v to uninfected vertices."""
        return self.host_degree(v) - self.degree(v)

    def boundary_size(self) -> int:
        """Total host edges from the infected set to uninfected vertices."""
        return sum(self.free_slots(v) for v in range(1, self.n + 1))

    @cached_property
    def depth(self) -> np.ndarray:
        """Distance to the source per label (index 0 unused)."""
        return _kernels.depths(self.parent)

    def prefix(self, k: int) -> "InfectionTree":
        """The first k arrivals as a tree (a snapshot of the same trajectory)."""
        if not 1 <= k <= self.n:
            raise ValueError(f"prefix size {k} outside 1..{self.n}")
        if k == self.n:
            return self

        def _kept(label):
            return label if label is not None and label <= k else None

        return InfectionTree(
            spec=self.spec,
            parent=self.parent[:k + 1].copy(),
            side=None if self.side is None else self.side[:k + 1].copy(),
            bridge_d=_kept(self.bridge_d),
            bridge_D=_kept(self.bridge_D),
        )

    def _check_label(self, v: int):
        if not 1 <= v <= self.n:
            raise ValueError(f"label {v} outside 1..{self.n}")


def subtree_sizes(tree: InfectionTree, root: int) -> dict[int, int]:
    """Sizes of the subtrees hanging off every v != root when rooted at root.

    Rerooting is virtual: the stored arrival rooting is traversed once and
    sizes are patched along the root-to-source path.
    """
    tree._check_label(root)
    down = _kernels.down_sizes(tree.parent)
    n = tree.n
    sizes = {v: int(down[v]) for v in range(1, n + 1) if v != root}
    # walking from root up to the source, each hop flips the complement
    v = root
    while v != 1:
        p = int(tree.parent[v])
        sizes[p] = n - int(down[v])
        v = p
    return sizes


def distance(tree: InfectionTree, a: int, b: int) -> int:
    """Edge count on the unique tree path between labels a and b."""
    tree._check_label(a)
    tree._check_label(b)
    dep = tree.depth
    da, db = int(dep[a]), int(dep[b])
    dist = 0
    while da > db:
        a = int(tree.parent[a]); da -= 1; dist += 1
    while db > da:
        b = int(tree.parent[b]); db -= 1; dist += 1
    while a != b:
        a = int(tree.parent[a]); b = int(tree.parent[b]); dist += 2
    return dist


def ball(tree: InfectionTree, centers, radius: int) -> frozenset[int]:
    """Labels within tree-distance radius of any center (BFS, undirected)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    seen = set(int(c) for c in centers)
    for c in seen:
        tree._check_label(c)
    frontier = list(seen)
    for _ in range(radius):
        nxt = []
        for v in frontier:
            p = int(tree.parent[v])
            if p >= 1 and p not in seen:
                seen.add(p); nxt.append(p)
            for c in tree.children(v):
                c = int(c)
                if c not in seen:
                    seen.add(c); nxt.append(c)
        if not nxt:
            break
        frontier = nxt
    return frozenset(seen)


# ---------------------------------------------------------------------------
# document format


def serialize(tree: InfectionTree) -> dict:
    """Tree document: spec, n, and per-node id/parent (plus side when glued)."""
    nodes = []
    for k in range(1, tree.n + 1):
        node: dict = {"id": k, "parent": None if k == 1 else int(tree.parent[k])}
        if tree.spec.kind == GLUED:
            node["side"] = "d" if tree.side[k] == 0 else "D"
        nodes.append(node)
    return {"spec": tree.spec.to_dict(), "n": tree.n, "nodes": nodes}


def deserialize(doc: dict) -> InfectionTree:
    """Rebuild a tree from a document, naming the violated invariant on failure."""
    try:
        spec = GraphSpec.from_dict(doc["spec"])
        n = int(doc["n"])
        nodes = doc["nodes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise TreeDocumentError(f"document missing or malformed field: {exc}") from exc
    if n < 1:
        raise TreeDocumentError("node count must be at least 1")
    if len(nodes) != n:
        raise TreeDocumentError(f"expected {n} nodes, document lists {len(nodes)}")
    parent = np.zeros(n + 1, dtype=np.int64)
    side = np.zeros(n + 1, dtype=np.uint8) if spec.kind == GLUED else None
    seen = np.zeros(n + 1, dtype=bool)
    for node in nodes:
        try:
            k = int(node["id"])
        except (KeyError, TypeError, ValueError):
            raise TreeDocumentError("node without a valid id") from None
        if not 1 <= k <= n:
            raise TreeDocumentError(f"node id {k} outside 1..{n}")
        if seen[k]:
            raise TreeDocumentError(f"duplicate node id {k}")
        seen[k] = True
        p = node.get("parent")
        if k == 1:
            if p is not None:
                raise TreeDocumentError("node 1 must have a null parent")
        else:
            if p is None:
                raise TreeDocumentError(f"node {k} lacks a parent")
            p = int(p)
            if not 1 <= p < k:
                raise TreeDocumentError(
                    f"node {k} has parent {p}; parents must be earlier arrivals")
            parent[k] = p
        if spec.kind == GLUED:
            s = node.get("side")
            if s not in ("d", "D"):
                raise TreeDocumentError(f"node {k} needs side 'd' or 'D'")
            side[k] = 0 if s == "d" else 1
    if not seen[1:].all():
        missing = int(np.flatnonzero(~seen[1:])[0]) + 1
        raise TreeDocumentError(f"node id {missing} missing from document")
    try:
        return InfectionTree(spec=spec, parent=parent, side=side)
    except ValueError as exc:
        raise TreeDocumentError(str(exc)) from exc


def save_tree(tree: InfectionTree, path) -> None:
    Path(path).write_text(json.dumps(serialize(tree)))


def load_tree(path) -> InfectionTree:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TreeDocumentError(f"not valid JSON: {exc}") from exc
    return deserialize(doc)
