"""Diffusion simulator: uniform choice over boundary edges at every step.

At each step the next infected vertex is drawn uniformly among host edges
from the infected set to uninfected vertices.  Discrete time only; the
equivalent exponential-clock formulation is intentionally not implemented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import derive_seed
from .trees import GLUED, REGULAR, GraphSpec, InfectionTree


@dataclass(frozen=True)
class SourcePlacement:
    """Where the source sits on a glued host.

    half is "d" or "D"; bridge_distance is the host distance from the
    source to the bridge endpoint of its own half (0 means the source is
    that endpoint).
    """

    half: str = "d"
    bridge_distance: int = 1

    def __post_init__(self):
        if self.half not in ("d", "D"):
            raise ValueError("half must be 'd' or 'D'")
        if self.bridge_distance < 0:
            raise ValueError("bridge distance must be nonnegative")

    @staticmethod
    def in_small_half() -> "SourcePlacement":
        return SourcePlacement("d", 1)

    @staticmethod
    def in_big_half() -> "SourcePlacement":
        return SourcePlacement("D", 1)

    @staticmethod
    def at_bridge_distance(k: int) -> "SourcePlacement":
        return SourcePlacement("d", k)

    def to_dict(self) -> dict:
        return {"half": self.half, "bridge_distance": self.bridge_distance}

    @staticmethod
    def from_dict(doc: dict) -> "SourcePlacement":
        return SourcePlacement(doc.get("half", "d"),
                               int(doc.get("bridge_distance", 1)))


@dataclass(frozen=True)
class SimConfig:
    spec: GraphSpec
    n: int
    seed: int
    source_placement: SourcePlacement | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("target size n must be at least 1")
        if self.spec.kind == GLUED and self.source_placement is None:
            object.__setattr__(self, "source_placement", SourcePlacement())
        if self.spec.kind == REGULAR and self.source_placement is not None:
            raise ValueError("source placement only applies to glued hosts")

    def to_dict(self) -> dict:
        out = {"spec": self.spec.to_dict(), "n": self.n, "seed": self.seed}
        if self.source_placement is not None:
            out["source_placement"] = self.source_placement.to_dict()
        return out

    @staticmethod
    def from_dict(doc: dict) -> "SimConfig":
        placement = doc.get("source_placement")
        return SimConfig(
            spec=GraphSpec.from_dict(doc["spec"]),
            n=int(doc["n"]),
            seed=int(doc["seed"]),
            source_placement=None if placement is None
            else SourcePlacement.from_dict(placement),
        )


def simulate(config: SimConfig) -> InfectionTree:
    """Run the diffusion to n infected vertices; bit-reproducible per config."""
    spec = config.spec
    seed = np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF)
    if spec.kind == REGULAR:
        parent = _kernels.grow_regular(config.n, spec.d, seed)
        return InfectionTree(spec=spec, parent=parent)
    placement = config.source_placement
    start_side = 0 if placement.half == "d" else 1
    parent, side, near, far = _kernels.grow_glued(
        config.n, spec.d, spec.D, start_side, placement.bridge_distance,
        seed)
    if start_side == 0:
        bridge_d, bridge_D = near, far
    else:
        bridge_d, bridge_D = far, near
    return InfectionTree(
        spec=spec, parent=parent, side=side,
        bridge_d=bridge_d or None, bridge_D=bridge_D or None)


def simulate_stream(config: SimConfig, checkpoints) -> list[InfectionTree]:
    """Snapshots of one trajectory at the requested sizes.

    Snapshot i is exactly the first checkpoints[i] arrivals of the final
    tree, so later snapshots extend earlier ones.
    """
    checkpoints = [int(c) for c in checkpoints]
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    if checkpoints and not 1 <= checkpoints[0]:
        raise ValueError("checkpoints must be positive")
    if checkpoints and checkpoints[-1] > config.n:
        raise ValueError("checkpoints may not exceed the configured size")
    final = simulate(config)
    return [final.prefix(c) for c in checkpoints]


def trial_config(config: SimConfig, trial_index: int) -> SimConfig:
    """The same template with the per-trial derived seed."""
    return SimConfig(
        spec=config.spec, n=config.n,
        seed=derive_seed(config.seed, trial_index),
        source_placement=config.source_placement)


@dataclass(frozen=True)
class GluedSplit:
    """The two half-trees of a glued diffusion, relabeled to arrival order.

    original_d[k] / original_D[k] translate a half-tree label k back to the
    label in the full tree (index 0 unused).  An uninfected half comes back
    as an empty tree.
    """

    tree_d: InfectionTree
    tree_D: InfectionTree
    original_d: np.ndarray
    original_D: np.ndarray


def split_glued(tree: InfectionTree) -> GluedSplit:
    """Partition a glued tree into its d-half and D-half diffusions."""
    if tree.spec.kind != GLUED:
        raise ValueError("split requires a glued host")
    halves = []
    for side_value, deg in ((0, tree.spec.d), (1, tree.spec.D)):
        labels = np.flatnonzero(tree.side[1:] == side_value) + 1
        m = labels.shape[0]
        original = np.zeros(m + 1, dtype=np.int64)
        original[1:] = labels
        new_of = np.zeros(tree.n + 1, dtype=np.int64)
        new_of[labels] = np.arange(1, m + 1)
        parent = np.zeros(m + 1, dtype=np.int64)
        if m > 0:
            parent_orig = tree.parent[labels]
            is_entry = (parent_orig == 0) | (tree.side[parent_orig] != side_value)
            if int(is_entry.sum()) != 1:
                raise ValueError("half is not connected through a single entry vertex")
            parent[1:] = np.where(is_entry, 0, new_of[parent_orig])
        halves.append((InfectionTree(spec=GraphSpec(REGULAR, deg),
                                     parent=parent), original))
    (tree_d, original_d), (tree_big, original_big) = halves
    return GluedSplit(tree_d=tree_d, tree_D=tree_big,
                      original_d=original_d, original_D=original_big)
