"""Source scores: ordering count, subtree product, and max subtree.

For a tree T rooted at a candidate source u, with |(T,u)_v| the size of the
subtree hanging below v:

  ordering count  R(u)   = n! / prod over all v of |(T,u)_v|   (|(T,u)_u| = n)
  subtree product phi(u) = prod over v != u of |(T,u)_v|
  max subtree     psi(u) = max  over v != u of |(T,u)_v|

R(u) counts the arrival orders that start at u and keep every prefix
connected; maximizing R is the same as minimizing phi.  Everything is kept
in log space (log-gamma for n!) and computed for all u in O(n) by two
rerooting passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .trees import InfectionTree

#: absolute tolerance on log phi when detecting tied minimizers
PHI_TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Per-node scores for one tree: log_phi, log_r, psi (index 0 unused)."""

    tree: InfectionTree
    log_phi: np.ndarray
    log_r: np.ndarray
    psi: np.ndarray

    @property
    def n(self) -> int:
        return self.tree.n

    @cached_property
    def log_n_factorial(self) -> float:
        return math.lgamma(self.n + 1)

    def identity_residuals(self) -> np.ndarray:
        """log R + log phi + log n - log n! per node; zero in exact arithmetic."""
        n = self.n
        return (self.log_r[1:] + self.log_phi[1:] + math.log(n)
                - self.log_n_factorial)


def score_all(tree: InfectionTree) -> ScoreTable:
    """All three scores for every node in O(n)."""
    if tree.n < 1:
        raise ValueError("scores need at least one node")
    down = _kernels.down_sizes(tree.parent)
    log_phi, log_r, psi = _kernels.score_arrays(tree.parent, down)
    return ScoreTable(tree=tree, log_phi=log_phi, log_r=log_r, psi=psi)


def _argmin_set(values: np.ndarray, tol: float) -> tuple[int, ...]:
    lo = values[1:].min()
    return tuple(int(v) for v in np.flatnonzero(values[1:] <= lo + tol) + 1)


def _assert_center_set(tree: InfectionTree, labels: tuple[int, ...], what: str):
    # classical fact: at most two minimizers, adjacent when tied
    if not 1 <= len(labels) <= 2:
        raise AssertionError(f"{what} set has {len(labels)} members")
    if len(labels) == 2:
        a, b = labels
        if tree.parent[a] != b and tree.parent[b] != a:
            raise AssertionError(f"tied {what}s {a},{b} are not adjacent")


def rumor_centers(table: ScoreTable) -> tuple[int, ...]:
    """All minimizers of the subtree product, within PHI_TIE_TOL on logs.

    Returns one or two labels; two are always adjacent.  No tie-breaking is
    applied here; consumers decide how to use the full set.
    """
    if table.n == 1:
        return (1,)
    centers = _argmin_set(table.log_phi, PHI_TIE_TOL)
    _assert_center_set(table.tree, centers, "rumor center")
    return centers


def max_ordering_nodes(table: ScoreTable) -> tuple[int, ...]:
    """All maximizers of the ordering count; equals rumor_centers as a set."""
    if table.n == 1:
        return (1,)
    return _argmin_set(-table.log_r, PHI_TIE_TOL)


def centroid(table: ScoreTable) -> tuple[int, ...]:
    """All minimizers of the max-subtree size (exact integer comparison)."""
    if table.n == 1:
        return (1,)
    labels = _argmin_set(table.psi.astype(np.float64), 0.0)
    _assert_center_set(table.tree, labels, "centroid")
    return labels


def brute_force_orderings(tree: InfectionTree, source: int, limit: int = 10) -> int:
    """Count arrival orders starting at source with every prefix connected.

    Independent oracle for the ordering count: enumerates orders grouped by
    visited set (the continuation count depends only on the set).  Refuses
    n > limit since the state space is exponential.
    """
    n = tree.n
    if n > limit:
        raise ValueError(f"brute force refused for n={n} > {limit}")
    tree._check_label(source)
    neighbors = [[] for _ in range(n + 1)]
    for k in range(2, n + 1):
        p = int(tree.parent[k])
        neighbors[k].append(p)
        neighbors[p].append(k)
    full = (1 << n) - 1

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def count(visited: int) -> int:
        if visited == full:
            return 1
        total = 0
        for v in range(1, n + 1):
            bit = 1 << (v - 1)
            if visited & bit:
                continue
            if any(visited & (1 << (w - 1)) for w in neighbors[v]):
                total += count(visited | bit)
        return total

    return count(1 << (source - 1))


def ordering_count_from_scores(table: ScoreTable, u: int) -> int:
    """Round-trip the log-space ordering count back to an integer."""
    return round(math.exp(table.log_r[u]))


def phi_compare_exact(tree: InfectionTree, a: int, b: int) -> int:
    """Exact sign of phi(a) - phi(b) using integer products along tree paths.

    phi(v)/phi(1) telescopes to prod over the source-to-v path of
    (n - s_i)/s_i with s_i the arrival-rooted subtree sizes, so the ratio
    phi(a)/phi(b) is a ratio of two exact integer products.
    """
    down = _kernels.down_sizes(tree.parent)
    n = tree.n

    def path_products(v: int) -> tuple[int, int]:
        num = den = 1
        while v != 1:
            s = int(down[v])
            num *= n - s
            den *= s
            v = int(tree.parent[v])
        return num, den

    na, da = path_products(a)
    nb, db = path_products(b)
    lhs = na * db
    rhs = nb * da
    return (lhs > rhs) - (lhs < rhs)


def monotonicity_violations(tree: InfectionTree,
                            table: ScoreTable) -> list[tuple[int, int]]:
    """Pairs (v, u) violating path monotonicity of the subtree product.

    The property: if phi(v) <= phi(1) and u != 1 lies on the source-to-v
    path, then phi(u) <= phi(1).  Candidates are screened in float and every
    suspect is re-verified with exact integer arithmetic, so a nonempty
    result is a genuine counterexample, not rounding noise.
    """
    suspects = _kernels.monotone_suspects(tree.parent, table.log_phi,
                                          PHI_TIE_TOL)
    out: list[tuple[int, int]] = []
    for v in np.flatnonzero(suspects[1:]) + 1:
        v = int(v)
        if phi_compare_exact(tree, v, 1) > 0:
            continue  # phi(v) > phi(1) exactly; not an event node
        u = int(tree.parent[v])
        while u != 1:
            if phi_compare_exact(tree, u, 1) > 0:
                out.append((v, u))
                break
            u = int(tree.parent[u])
    return out
