"""Compressed-row graph representation, file ingestion and BFS neighborhoods.

Graphs are undirected, unweighted and simple: parsing drops self-loops,
deduplicates edges and always symmetrizes. Node ids are dense 0-based
integers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np


class ParseError(ValueError):
    """Malformed graph input. Carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in compressed-row layout.

    ``indices[indptr[i]:indptr[i+1]]`` holds the sorted neighbor ids of
    node ``i``; every edge appears in both rows.
    """

    indptr: np.ndarray   # int64, length node_count + 1
    indices: np.ndarray  # int32, length 2 * edge_count

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def edge_array(self) -> np.ndarray:
        """All edges as an (edge_count, 2) array with u < v."""
        u = np.repeat(np.arange(self.node_count, dtype=np.int32), self.degrees)
        v = self.indices
        keep = u < v
        return np.column_stack([u[keep], v[keep]])

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, v in self.edge_array():
            yield int(u), int(v)

    def nbytes(self) -> int:
        return self.indptr.nbytes + self.indices.nbytes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self) -> str:
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"


def from_edges(pairs: np.ndarray, node_count: int | None = None,
               remap_sparse_ids: bool = False) -> Graph:
    """Build a Graph from an array of (u, v) pairs.

    Self-loops are dropped, duplicate and reversed edges collapse to one
    undirected edge. With ``remap_sparse_ids``, ids are compacted when the
    max id exceeds twice the distinct-id count (sparse-id inputs).
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and pairs.min() < 0:
        raise ParseError("negative node id")

    if node_count is None:
        if pairs.size == 0:
            node_count = 0
        else:
            distinct = np.unique(pairs)
            max_id = int(distinct[-1])
            if remap_sparse_ids and max_id > 2 * len(distinct):
                lookup = np.full(max_id + 1, -1, dtype=np.int64)
                lookup[distinct] = np.arange(len(distinct))
                pairs = lookup[pairs]
                node_count = len(distinct)
            else:
                node_count = max_id + 1

    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.size:
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        keys = np.unique(lo * np.int64(node_count) + hi)
        lo = keys // node_count
        hi = keys % node_count
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)

    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return Graph(indptr=indptr, indices=dst.astype(np.int32))


def _iter_lines(source: str | TextIO | Iterable[str]) -> Iterator[str]:
    if isinstance(source, str):
        return iter(source.splitlines())
    return iter(source)


def parse_edge_list(source: str | TextIO | Iterable[str]) -> Graph:
    """Parse a whitespace-separated "u v" edge list.

    Lines starting with '#' or '%' are comments. Node ids are non-negative
    integers; sparse id spaces are remapped to dense 0-based ids.
    """
    us: list[int] = []
    vs: list[int] = []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected two ids, got {len(tokens)} tokens", lineno)
        try:
            u = int(tokens[0])
            v = int(tokens[1])
        except ValueError:
            raise ParseError(f"malformed integer in {tokens!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative node id in {tokens!r}", lineno)
        us.append(u)
        vs.append(v)
    if not us:
        return Graph(indptr=np.zeros(1, dtype=np.int64),
                     indices=np.empty(0, dtype=np.int32))
    pairs = np.column_stack([np.asarray(us, dtype=np.int64),
                             np.asarray(vs, dtype=np.int64)])
    return from_edges(pairs, remap_sparse_ids=True)


_MM_FIELDS = {"pattern", "real", "integer", "complex"}
_MM_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def parse_matrix_market(source: str | TextIO | Iterable[str]) -> Graph:
    """Parse a MatrixMarket coordinate file as an undirected graph.

    Values are ignored (the sparsity pattern is the graph); indices are
    1-based. Symmetric-storage files are expanded, general files are
    symmetrized, diagonal entries are dropped.
    """
    lines = _iter_lines(source)
    try:
        header = next(lines)
    except StopIteration:
        raise ParseError("empty file, missing MatrixMarket header") from None
    tokens = header.strip().split()
    if len(tokens) < 5 or tokens[0] != "%%MatrixMarket":
        raise ParseError("missing '%%MatrixMarket' header", 1)
    obj, fmt, fld, sym = (t.lower() for t in tokens[1:5])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(f"unsupported MatrixMarket type '{obj} {fmt}'"
                         " (need 'matrix coordinate')", 1)
    if fld not in _MM_FIELDS:
        raise ParseError(f"unsupported field '{fld}'", 1)
    if sym not in _MM_SYMMETRIES:
        raise ParseError(f"unsupported symmetry '{sym}'", 1)

    rows = cols = declared = None
    lineno = 1
    for lineno, raw in enumerate(lines, start=2):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("size line must be 'rows cols nnz'", lineno)
        try:
            rows, cols, declared = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"malformed size line {line!r}", lineno) from None
        break
    if rows is None:
        raise ParseError("missing size line")
    if rows != cols:
        raise ParseError(f"adjacency matrix must be square, got {rows}x{cols}",
                         lineno)
    if rows < 0 or declared < 0:
        raise ParseError("negative dimension in size line", lineno)

    us = np.empty(declared, dtype=np.int64)
    vs = np.empty(declared, dtype=np.int64)
    seen = 0
    for lineno, raw in enumerate(lines, start=lineno + 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if seen >= declared:
            raise ParseError(f"more than the declared {declared} entries", lineno)
        parts = line.split()
        if len(parts) < 2:
            raise ParseError("coordinate entry needs at least 'i j'", lineno)
        try:
            i = int(parts[0])
            j = int(parts[1])
        except ValueError:
            raise ParseError(f"malformed coordinate entry {line!r}", lineno) from None
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise ParseError(f"index ({i}, {j}) outside declared {rows}x{cols}",
                             lineno)
        us[seen] = i - 1
        vs[seen] = j - 1
        seen += 1
    if seen != declared:
        raise ParseError(f"declared {declared} entries but found {seen}")

    pairs = np.column_stack([us, vs])
    return from_edges(pairs, node_count=rows)


def format_edge_list(g: Graph) -> str:
    """Serialize to the edge-list format accepted by parse_edge_list."""
    lines = [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class NeighborDistances:
    """For every node, its neighbors within k hops with exact hop distances.

    Rows are sorted by (distance, id) and the relation is symmetric:
    (i, j, d) is present iff (j, i, d) is.
    """

    indptr: np.ndarray  # int64, length node_count + 1
    ids: np.ndarray     # int32
    dists: np.ndarray   # int32, values in 1..k
    k: int

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.ids[lo:hi], self.dists[lo:hi]

    def row_size(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def nbytes(self) -> int:
        return self.indptr.nbytes + self.ids.nbytes + self.dists.nbytes


def bfs_k_neighborhood(g: Graph, source: int, k: int) -> list[tuple[int, int]]:
    """All nodes within k hops of ``source`` with their exact hop distance.

    Excludes the source itself; output sorted by (distance, id).
    """
    if not 0 <= source < g.node_count:
        raise ValueError(f"source {source} out of range for {g.node_count} nodes")
    if k < 1:
        raise ValueError("k must be >= 1")
    indptr, indices = g.indptr, g.indices
    dist = {source: 0}
    queue = deque([source])
    out: list[tuple[int, int]] = []
    while queue:
        v = queue.popleft()
        d = dist[v]
        if d == k:
            break
        for u in indices[indptr[v]:indptr[v + 1]]:
            u = int(u)
            if u not in dist:
                dist[u] = d + 1
                out.append((u, d + 1))
                queue.append(u)
    out.sort(key=lambda e: (e[1], e[0]))
    return out


def all_k_neighborhoods(g: Graph, k: int,
                        with_stats: bool = False) -> NeighborDistances | tuple[NeighborDistances, int]:
    """Run bfs_k_neighborhood from every node into one compressed structure.

    k = 1 reuses the adjacency arrays directly (no BFS). ``with_stats``
    additionally returns the number of queue pushes, for cost assertions.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = g.node_count
    if k == 1:
        nd = NeighborDistances(indptr=g.indptr.copy(),
                               ids=g.indices.copy(),
                               dists=np.ones(len(g.indices), dtype=np.int32),
                               k=1)
        return (nd, len(g.indices)) if with_stats else nd

    indptr_g = g.indptr
    indices_g = g.indices
    # Stamp array avoids clearing visited flags between sources.
    stamp = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int32)
    ops = 0
    row_ids: list[np.ndarray] = []
    row_dists: list[np.ndarray] = []
    counts = np.zeros(n, dtype=np.int64)
    for s in range(n):
        stamp[s] = s
        depth[s] = 0
        queue = deque([s])
        found: list[int] = []
        while queue:
            v = queue.popleft()
            d = depth[v]
            if d == k:
                break
            for u in indices_g[indptr_g[v]:indptr_g[v + 1]]:
                u = int(u)
                if stamp[u] != s:
                    stamp[u] = s
                    depth[u] = d + 1
                    found.append(u)
                    queue.append(u)
                    ops += 1
        if found:
            ids = np.asarray(found, dtype=np.int32)
            ds = depth[ids]
            order = np.lexsort((ids, ds))
            row_ids.append(ids[order])
            row_dists.append(ds.astype(np.int32)[order])
            counts[s] = len(found)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    nd = NeighborDistances(
        indptr=indptr,
        ids=np.concatenate(row_ids) if row_ids else np.empty(0, dtype=np.int32),
        dists=np.concatenate(row_dists) if row_dists else np.empty(0, dtype=np.int32),
        k=k)
    return (nd, ops) if with_stats else nd


def connected_components(g: Graph) -> np.ndarray:
    """Label nodes 0..C-1 by connected component, in first-seen order."""
    n = g.node_count
    labels = np.full(n, -1, dtype=np.int32)
    indptr, indices = g.indptr, g.indices
    current = 0
    for s in range(n):
        if labels[s] != -1:
            continue
        labels[s] = current
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in indices[indptr[v]:indptr[v + 1]]:
                u = int(u)
                if labels[u] == -1:
                    labels[u] = current
                    queue.append(u)
        current += 1
    return labels


def induced_subgraph(g: Graph, nodes: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` (sorted ids), plus the old-id array kept.

    Used by metrics that are undefined across components.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    lookup = np.full(g.node_count, -1, dtype=np.int64)
    lookup[nodes] = np.arange(len(nodes))
    edges = g.edge_array()
    if edges.size:
        keep = (lookup[edges[:, 0]] >= 0) & (lookup[edges[:, 1]] >= 0)
        sub_edges = lookup[edges[keep]]
    else:
        sub_edges = np.empty((0, 2), dtype=np.int64)
    return from_edges(sub_edges, node_count=len(nodes)), nodes
