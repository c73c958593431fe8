"""Coarse-graph hierarchy construction and position prolongation.

Coarsening visits nodes in a seeded random order; an unassigned node
absorbs its still-unassigned first-order neighbors into one coarse node.
The hierarchy stops when a level stops shrinking fast enough or gets
small enough, which keeps the total size a constant multiple of the
input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, from_edges


@dataclass(frozen=True)
class Hierarchy:
    """Graphs G0..GL (G0 is the input) and child->parent maps between them.

    maps[l][child] is the id in levels[l + 1] the child collapses into.
    """

    levels: list[Graph]
    maps: list[np.ndarray]
    rho: float
    min_size: int

    @property
    def depth(self) -> int:
        """Index of the coarsest level."""
        return len(self.levels) - 1

    def nbytes(self) -> int:
        return (sum(g.nbytes() for g in self.levels)
                + sum(m.nbytes for m in self.maps))

    def dump_text(self) -> str:
        """Debug dump: "|V| |E|" per level, then each parent array."""
        lines = [f"{g.node_count} {g.edge_count}" for g in self.levels]
        for m in self.maps:
            lines.append(" ".join(str(int(p)) for p in m))
        return "\n".join(lines) + "\n"


def coarsen_with_order(g: Graph, order: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Coarsening pass with an explicit visitation order.

    Each unassigned node in turn becomes a seed and absorbs its
    still-unassigned first-order neighbors; already-grouped nodes stay
    put. Parent ids are dense, assigned in group-creation order.
    """
    n = g.node_count
    parent = np.full(n, -1, dtype=np.int32)
    indptr = g.indptr
    indices = g.indices
    next_id = 0
    for v in order:
        v = int(v)
        if parent[v] != -1:
            continue
        parent[v] = next_id
        for u in indices[indptr[v]:indptr[v + 1]]:
            if parent[u] == -1:
                parent[u] = next_id
        next_id += 1

    edges = g.edge_array()
    if edges.size:
        cu = parent[edges[:, 0]]
        cv = parent[edges[:, 1]]
        keep = cu != cv
        coarse_edges = np.column_stack([cu[keep], cv[keep]])
    else:
        coarse_edges = np.empty((0, 2), dtype=np.int64)
    coarse = from_edges(coarse_edges, node_count=next_id)
    return coarse, parent


def coarsen_once(g: Graph, seed: int) -> tuple[Graph, np.ndarray]:
    """One coarsening pass over a seeded random permutation of the nodes.

    Returns the coarse graph and the child->parent map; fully determined
    by the seed.
    """
    n = g.node_count
    if n < 1:
        raise ValueError("cannot coarsen an empty graph")
    order = np.random.default_rng(seed).permutation(n)
    return coarsen_with_order(g, order)


def build_hierarchy(g: Graph, rho: float = 0.8, min_size: int = 16,
                    seed: int = 0) -> Hierarchy:
    """Coarsen repeatedly until shrinkage stalls (> rho) or the graph is
    at most min_size nodes. Level 0 is the input graph by reference."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    rng = np.random.default_rng(seed)
    levels = [g]
    maps: list[np.ndarray] = []
    while levels[-1].node_count > min_size:
        level_seed = int(rng.integers(0, 2**63 - 1))
        coarse, parent = coarsen_once(levels[-1], level_seed)
        if coarse.node_count > rho * levels[-1].node_count:
            break
        levels.append(coarse)
        maps.append(parent)
    return Hierarchy(levels=levels, maps=maps, rho=rho, min_size=min_size)


def compose_maps(h: Hierarchy, level: int) -> np.ndarray:
    """Flat map from level-0 node ids to their level-`level` ancestors."""
    if not 0 <= level <= h.depth:
        raise ValueError(f"level {level} outside hierarchy of depth {h.depth}")
    flat = np.arange(h.levels[0].node_count, dtype=np.int32)
    for m in h.maps[:level]:
        flat = m[flat]
    return flat


def prolong(coarse_positions: np.ndarray, cmap: np.ndarray,
            jitter_scale: float, seed: int) -> np.ndarray:
    """Initialize fine positions from parent positions plus Gaussian jitter.

    Zero jitter makes children coincide with their parent exactly; a small
    positive jitter keeps same-parent children from sitting at zero layout
    distance, where the repulsive gradient degenerates.
    """
    fine = coarse_positions[cmap].astype(np.float64, copy=True)
    if jitter_scale > 0:
        rng = np.random.default_rng(seed)
        fine += rng.normal(0.0, jitter_scale, size=fine.shape)
    return fine
