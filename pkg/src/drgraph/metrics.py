"""Layout quality metrics: neighborhood preservation, scale-optimal
stress, crosslessness and minimum angle.

All metrics are pure functions of (graph, positions). Stress needs
shortest-path distances, so its exact mode is quadratic and restricted
to connected graphs; a pivot mode restricts the sums to BFS trees from a
random pivot subset.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, all_k_neighborhoods, connected_components, induced_subgraph

EXACT_KNN_LIMIT = 20_000
DEFAULT_EDGE_CAP = 200_000


class MetricError(ValueError):
    """A metric is undefined or too expensive on this input."""


@dataclass
class MetricsReport:
    """Values of the four metrics for one (graph, layout) pair.

    A metric that had to be skipped or approximated is None with an entry
    in flags explaining why.
    """

    np: float | None = None
    stress: float | None = None
    alpha_star: float | None = None
    crossings: int | None = None
    c_max: int | None = None
    crosslessness: float | None = None
    min_angle: float | None = None
    flags: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "np": self.np,
            "stress": self.stress,
            "alpha_star": self.alpha_star,
            "crossings": self.crossings,
            "c_max": self.c_max,
            "crosslessness": self.crosslessness,
            "min_angle": self.min_angle,
            "flags": dict(self.flags),
        }

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "skipped"
            if isinstance(v, float):
                return f"{v:.6f}"
            return str(v)

        lines = [f"np {fmt(self.np)}",
                 f"stress {fmt(self.stress)}",
                 f"alpha_star {fmt(self.alpha_star)}",
                 f"crossings {fmt(self.crossings)}",
                 f"c_max {fmt(self.c_max)}",
                 f"crosslessness {fmt(self.crosslessness)}",
                 f"min_angle {fmt(self.min_angle)}"]
        for key, note in sorted(self.flags.items()):
            lines.append(f"flag.{key} {note}")
        return "\n".join(lines) + "\n"


def _layout_knn_exact(positions: np.ndarray, k_per_node: np.ndarray) -> list[np.ndarray]:
    """k_i nearest other nodes per node, ties broken by node id."""
    n = len(positions)
    out: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * n
    chunk = max(1, min(n, 8_388_608 // max(n, 1)))  # ~64 MB of float64 per block
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        diff = positions[lo:hi, None, :] - positions[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        for row, i in enumerate(range(lo, hi)):
            k_i = int(k_per_node[i])
            if k_i <= 0:
                continue
            d = d2[row]
            d[i] = np.inf
            order = np.argsort(d, kind="stable")  # stable: ties fall to lower id
            out[i] = order[:k_i].astype(np.int64)
    return out


def _layout_knn_tree(positions: np.ndarray, k_per_node: np.ndarray) -> list[np.ndarray]:
    from scipy.spatial import cKDTree

    n = len(positions)
    k_max = int(k_per_node.max()) if n else 0
    tree = cKDTree(positions)
    _, idx = tree.query(positions, k=min(k_max + 1, n))
    idx = np.atleast_2d(idx)
    out: list[np.ndarray] = []
    for i in range(n):
        k_i = int(k_per_node[i])
        row = idx[i]
        row = row[row != i][:k_i]
        out.append(row.astype(np.int64))
    return out


def neighborhood_preservation(g: Graph, positions: np.ndarray,
                              k_eval: int = 2) -> float:
    """Mean Jaccard overlap between each node's k_eval-hop neighborhood and
    its equally sized set of nearest layout neighbors.

    Nodes with an empty neighborhood contribute 1. Exact k-NN (ties by
    node id) below EXACT_KNN_LIMIT nodes, spatial tree above.
    """
    if k_eval < 1:
        raise ValueError("k_eval must be >= 1")
    positions = np.asarray(positions, dtype=np.float64)
    n = g.node_count
    if len(positions) != n:
        raise ValueError("layout does not cover all nodes")
    nd = all_k_neighborhoods(g, k_eval)
    k_per_node = np.diff(nd.indptr)
    if n <= EXACT_KNN_LIMIT:
        knn = _layout_knn_exact(positions, k_per_node)
    else:
        knn = _layout_knn_tree(positions, k_per_node)
    total = 0.0
    for i in range(n):
        ids, _ = nd.row(i)
        if len(ids) == 0:
            total += 1.0
            continue
        graph_set = set(int(x) for x in ids)
        layout_set = set(int(x) for x in knn[i])
        inter = len(graph_set & layout_set)
        union = len(graph_set | layout_set)
        total += inter / union
    return total / n


def _bfs_distances(g: Graph, source: int) -> np.ndarray:
    dist = np.full(g.node_count, -1, dtype=np.int32)
    dist[source] = 0
    queue = deque([source])
    indptr, indices = g.indptr, g.indices
    while queue:
        v = queue.popleft()
        d = dist[v]
        for u in indices[indptr[v]:indptr[v + 1]]:
            if dist[u] < 0:
                dist[u] = d + 1
                queue.append(u)
    return dist


def stress(g: Graph, positions: np.ndarray, mode: str = "exact",
           pivots: int = 0, seed: int = 0) -> tuple[float, float]:
    """Scale-optimal normalized stress and its optimal scale alpha.

    Each unordered pair is counted once with weight 1/spd^2 and the sum
    is normalized by node_count^2. alpha minimizes the weighted squared
    error in closed form. Exact mode requires a connected graph; pivot
    mode sums only pairs incident to `pivots` random BFS sources.
    """
    positions = np.asarray(positions, dtype=np.float64)
    n = g.node_count
    if len(positions) != n:
        raise ValueError("layout does not cover all nodes")
    if n < 2:
        return 0.0, 1.0

    if mode == "exact":
        sources = np.arange(n)
    elif mode == "pivot":
        if pivots < 1:
            raise ValueError("pivot mode needs pivots >= 1")
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=min(pivots, n), replace=False))
    else:
        raise ValueError(f"unknown stress mode {mode!r}")

    s_xy = 0.0
    s_xx = 0.0
    terms_w: list[np.ndarray] = []
    terms_spd: list[np.ndarray] = []
    terms_dl: list[np.ndarray] = []
    for s in sources:
        s = int(s)
        dist = _bfs_distances(g, s)
        if mode == "exact":
            if (dist < 0).any():
                raise MetricError("exact stress is undefined on a "
                                  "disconnected graph")
            mask = np.arange(n) > s
        else:
            mask = np.ones(n, dtype=bool)
            # pivot-pivot pairs appear in two BFS trees; keep the s < j copy
            mask[sources[sources <= s]] = False
        mask &= dist > 0
        js = np.nonzero(mask)[0]
        if len(js) == 0:
            continue
        spd = dist[js].astype(np.float64)
        w = 1.0 / (spd * spd)
        diff = positions[js] - positions[s]
        dl = np.sqrt((diff * diff).sum(axis=1))
        s_xy += float((w * spd * dl).sum())
        s_xx += float((w * dl * dl).sum())
        terms_w.append(w)
        terms_spd.append(spd)
        terms_dl.append(dl)

    alpha = s_xy / s_xx if s_xx > 0 else 0.0
    total = 0.0
    for w, spd, dl in zip(terms_w, terms_spd, terms_dl):
        total += float((w * (alpha * dl - spd) ** 2).sum())
    return total / (n * n), alpha


def count_crossings(g: Graph, positions: np.ndarray,
                    edge_cap: int = DEFAULT_EDGE_CAP) -> int:
    """Number of unordered edge pairs whose open segments intersect.

    Pairs sharing a graph endpoint never count; collinear overlap counts
    once per pair. Brute force over bounding-box-pruned candidates.
    """
    positions = np.asarray(positions, dtype=np.float64)
    edges = g.edge_array()
    m = len(edges)
    if m > edge_cap:
        raise MetricError(f"{m} edges exceed the crossing cap {edge_cap}")
    if m < 2:
        return 0

    p1 = positions[edges[:, 0]]
    p2 = positions[edges[:, 1]]
    xmin = np.minimum(p1[:, 0], p2[:, 0])
    xmax = np.maximum(p1[:, 0], p2[:, 0])
    ymin = np.minimum(p1[:, 1], p2[:, 1])
    ymax = np.maximum(p1[:, 1], p2[:, 1])

    order = np.argsort(xmin, kind="stable")
    e = edges[order]
    p1, p2 = p1[order], p2[order]
    xmin, xmax = xmin[order], xmax[order]
    ymin, ymax = ymin[order], ymax[order]

    count = 0
    for a in range(m - 1):
        hi = np.searchsorted(xmin, xmax[a], side="right")
        if hi <= a + 1:
            continue
        cand = np.arange(a + 1, hi)
        cand = cand[(ymin[cand] <= ymax[a]) & (ymax[cand] >= ymin[a])]
        cand = cand[(e[cand, 0] != e[a, 0]) & (e[cand, 0] != e[a, 1])
                    & (e[cand, 1] != e[a, 0]) & (e[cand, 1] != e[a, 1])]
        if len(cand) == 0:
            continue
        ax, ay = p1[a]
        bx, by = p2[a]
        q1 = p1[cand]
        q2 = p2[cand]
        # orientation of each q endpoint against segment a, and vice versa
        d1 = (bx - ax) * (q1[:, 1] - ay) - (by - ay) * (q1[:, 0] - ax)
        d2 = (bx - ax) * (q2[:, 1] - ay) - (by - ay) * (q2[:, 0] - ax)
        d3 = ((q2[:, 0] - q1[:, 0]) * (ay - q1[:, 1])
              - (q2[:, 1] - q1[:, 1]) * (ax - q1[:, 0]))
        d4 = ((q2[:, 0] - q1[:, 0]) * (by - q1[:, 1])
              - (q2[:, 1] - q1[:, 1]) * (bx - q1[:, 0]))
        proper = (d1 * d2 < 0) & (d3 * d4 < 0)
        count += int(proper.sum())
        collinear = (d1 == 0) & (d2 == 0) & (d3 == 0) & (d4 == 0)
        for c in np.nonzero(collinear)[0]:
            qa, qb = q1[c], q2[c]
            # project on the dominant axis of segment a
            axis = 0 if abs(bx - ax) >= abs(by - ay) else 1
            lo1, hi1 = sorted((p1[a][axis], p2[a][axis]))
            lo2, hi2 = sorted((qa[axis], qb[axis]))
            if max(lo1, lo2) < min(hi1, hi2):
                count += 1
    return count


def max_crossings_bound(g: Graph) -> int:
    """Approximate upper bound: all pairs minus pairs sharing an endpoint."""
    m = g.edge_count
    deg = g.degrees.astype(np.int64)
    shared = int((deg * (deg - 1)).sum()) // 2
    return m * (m - 1) // 2 - shared


def crosslessness(g: Graph, positions: np.ndarray,
                  edge_cap: int = DEFAULT_EDGE_CAP) -> float:
    """1 - sqrt(crossings / bound), or 1 when the bound is nonpositive."""
    c_max = max_crossings_bound(g)
    if c_max <= 0:
        return 1.0
    c = count_crossings(g, positions, edge_cap=edge_cap)
    return 1.0 - math.sqrt(c / c_max)


def _minimum_angle_impl(g: Graph, positions: np.ndarray) -> tuple[float, int]:
    positions = np.asarray(positions, dtype=np.float64)
    n = g.node_count
    if len(positions) != n:
        raise ValueError("layout does not cover all nodes")
    total_dev = 0.0
    evaluated = 0
    skipped = 0
    for v in range(n):
        nbrs = g.neighbors(v)
        deg = len(nbrs)
        if deg <= 1:
            evaluated += 1
            continue
        vec = positions[nbrs] - positions[v]
        lengths2 = (vec * vec).sum(axis=1)
        if (lengths2 == 0).any():
            skipped += 1
            continue
        angles = np.sort(np.degrees(np.arctan2(vec[:, 1], vec[:, 0])))
        gaps = np.diff(angles)
        wrap = 360.0 - (angles[-1] - angles[0])
        theta_min = min(float(gaps.min()) if len(gaps) else 360.0, wrap)
        theta = 360.0 / deg
        total_dev += abs((theta - theta_min) / theta)
        evaluated += 1
    if evaluated == 0:
        return 1.0, skipped
    return 1.0 - total_dev / evaluated, skipped


def minimum_angle(g: Graph, positions: np.ndarray) -> float:
    """Mean agreement between each node's smallest incident-edge angle and
    the ideal 360/degree split. Degree <= 1 nodes contribute zero
    deviation; nodes with a zero-length incident edge are skipped."""
    value, _ = _minimum_angle_impl(g, positions)
    return value


def compute_metrics(g: Graph, positions: np.ndarray, k_eval: int = 2,
                    edge_cap: int = DEFAULT_EDGE_CAP,
                    stress_mode: str = "auto", stress_pivots: int = 64,
                    seed: int = 0) -> MetricsReport:
    """All four metrics with graceful degradation, as one report.

    stress_mode "auto" picks exact up to 2000 nodes, else pivot sampling.
    Disconnected graphs get stress on the largest component, flagged.
    """
    report = MetricsReport()
    positions = np.asarray(positions, dtype=np.float64)
    n = g.node_count

    report.np = neighborhood_preservation(g, positions, k_eval)
    if n > EXACT_KNN_LIMIT:
        report.flags["np"] = "layout knn via spatial tree"

    mode = stress_mode
    if mode == "auto":
        mode = "exact" if n <= 2000 else "pivot"
    try:
        if mode == "pivot":
            report.flags["stress"] = f"pivot approximation ({stress_pivots} pivots)"
        report.stress, report.alpha_star = stress(
            g, positions, mode=mode, pivots=stress_pivots, seed=seed)
    except MetricError:
        labels = connected_components(g)
        sizes = np.bincount(labels)
        keep = np.nonzero(labels == int(sizes.argmax()))[0]
        sub, old_ids = induced_subgraph(g, keep)
        report.stress, report.alpha_star = stress(
            sub, positions[old_ids], mode=mode, pivots=stress_pivots, seed=seed)
        report.flags["stress"] = (f"largest component only "
                                  f"({len(keep)}/{n} nodes; graph disconnected)")

    try:
        report.crossings = count_crossings(g, positions, edge_cap=edge_cap)
        report.c_max = max_crossings_bound(g)
        if report.c_max > 0:
            report.crosslessness = 1.0 - math.sqrt(report.crossings / report.c_max)
        else:
            report.crosslessness = 1.0
    except MetricError as exc:
        report.flags["crossings"] = str(exc)

    report.min_angle, skipped = _minimum_angle_impl(g, positions)
    if skipped:
        report.flags["min_angle"] = f"{skipped} nodes skipped (zero-length edge)"
    return report
