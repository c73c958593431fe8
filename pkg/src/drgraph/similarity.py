"""Node similarity over k-hop neighborhoods.

Hop distances are turned into per-node Gaussian conditional rows, then
symmetrized and globally normalized into one probability mass over
directed node pairs. With k = 1 every row is uniform, which collapses to
a closed form per edge and skips the bandwidth search entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import NeighborDistances

# Evaluation counters for cost assertions in tests.
_counters = {"exp_evals": 0}


def reset_counters() -> None:
    _counters["exp_evals"] = 0


def get_counters() -> dict[str, int]:
    return dict(_counters)


@dataclass
class SimilarityParams:
    """Knobs for the similarity construction.

    perplexity may be a positive float or "auto"; auto targets
    min(neighborhood size, degree) per node. The bandwidth search runs on
    the perplexity scale (2**entropy) within [sigma_min, sigma_max].
    """

    k: int = 1
    perplexity: float | str = "auto"
    tol: float = 1e-5
    max_iter: int = 64
    sigma_min: float = 1e-5
    sigma_max: float = 1e5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.k > 6:
            raise ValueError("k > 6 is unsupported (neighborhoods explode)")
        if self.perplexity != "auto" and not self.perplexity >= 1:
            raise ValueError("perplexity must be >= 1 or 'auto'")


@dataclass(frozen=True)
class SparseSimilarity:
    """Symmetric normalized similarity, stored directed (both orders).

    weights[e] is the pair mass of (row_of(e), targets[e]); the same value
    is stored under the mirrored entry. total_mass sums every directed
    entry and is 1 up to rounding whenever the graph has any edge.
    """

    indptr: np.ndarray    # int64, length node_count + 1
    targets: np.ndarray   # int32
    weights: np.ndarray   # float64
    total_mass: float
    sigma: np.ndarray     # float64 per node (1.0 where unused)
    k: int

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def entry_count(self) -> int:
        return len(self.targets)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.targets[lo:hi], self.weights[lo:hi]

    def row_masses(self) -> np.ndarray:
        """Per-node total incident mass (negative-sampling node weight)."""
        if self.node_count == 0 or len(self.weights) == 0:
            return np.zeros(self.node_count, dtype=np.float64)
        return np.add.reduceat(
            np.append(self.weights, 0.0),
            self.indptr[:-1],
        ) * (np.diff(self.indptr) > 0)

    def sources(self) -> np.ndarray:
        """Row id of every directed entry, aligned with targets/weights."""
        return np.repeat(np.arange(self.node_count, dtype=np.int32),
                         np.diff(self.indptr))

    def nbytes(self) -> int:
        return (self.indptr.nbytes + self.targets.nbytes
                + self.weights.nbytes + self.sigma.nbytes)

    def dump_text(self) -> str:
        """Debug dump, one "i j mass" triple per directed entry."""
        src = self.sources()
        lines = [f"{int(i)} {int(j)} {w:.17g}"
                 for i, j, w in zip(src, self.targets, self.weights)]
        return "\n".join(lines) + ("\n" if lines else "")


def precompute_gaussian_table(k: int, sigma: float) -> np.ndarray:
    """Gaussian kernel values for the k possible hop distances 1..k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    table = np.empty(k, dtype=np.float64)
    inv = 1.0 / (2.0 * sigma * sigma)
    for d in range(1, k + 1):
        table[d - 1] = math.exp(-(d * d) * inv)
    _counters["exp_evals"] += k
    return table


def conditional_similarity_row(
        row: Sequence[tuple[int, int]],
        sigma: float) -> list[tuple[int, float]]:
    """Gaussian conditional probabilities of one node's neighbors.

    ``row`` holds (neighbor id, hop distance) pairs. Returns (id, p) with
    the p summing to 1. An empty row (isolated node) returns []. If every
    kernel value underflows, mass falls uniformly on the nearest
    neighbors (the vanishing-bandwidth limit).
    """
    if not row:
        return []
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    dmax = max(d for _, d in row)
    table = precompute_gaussian_table(dmax, sigma)
    vals = [table[d - 1] for _, d in row]
    total = math.fsum(vals)
    if total == 0.0:
        dmin = min(d for _, d in row)
        nearest = [j for j, d in row if d == dmin]
        p = 1.0 / len(nearest)
        return [(j, p if d == dmin else 0.0) for j, d in row]
    return [(j, v / total) for (j, _), v in zip(row, vals)]


def _row_perplexity(counts: np.ndarray, dists: np.ndarray, sigma: float) -> float:
    """2**entropy of a conditional row, from per-distance multiplicities.

    Shift-stabilized so it stays finite for any positive sigma.
    """
    inv = 1.0 / (2.0 * sigma * sigma)
    expo = -(dists.astype(np.float64) ** 2) * inv
    expo -= expo.max()
    vals = np.exp(expo)
    _counters["exp_evals"] += len(vals)
    total = float(np.dot(counts, vals))
    p = vals / total
    # H = -sum_j p_j log2 p_j, grouped by distance value
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    h = -float(np.dot(counts, terms))
    return 2.0 ** h


def search_sigma(row: Sequence[tuple[int, int]], perplexity: float,
                 tol: float = 1e-5, max_iter: int = 64,
                 sigma_min: float = 1e-5, sigma_max: float = 1e5) -> float:
    """Bisect for the bandwidth whose row perplexity matches the target.

    The target is clamped to [1, len(row)]. Returns the best bandwidth
    found (monotonicity of perplexity in sigma makes bisection exact up
    to tol or max_iter).
    """
    n = len(row)
    if n == 0:
        raise ValueError("cannot search sigma for an empty row")
    if n == 1:
        return 1.0
    target = min(max(perplexity, 1.0), float(n))
    dist_vals, counts = np.unique([d for _, d in row], return_counts=True)
    lo, hi = sigma_min, sigma_max
    best_sigma = 1.0
    best_err = math.inf
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)  # geometric mid: the bracket spans decades
        perp = _row_perplexity(counts, dist_vals, mid)
        err = abs(perp - target)
        if err < best_err:
            best_err = err
            best_sigma = mid
        if err <= tol:
            break
        if perp > target:
            hi = mid
        else:
            lo = mid
    return best_sigma


def _uniform_row_similarity(nd: NeighborDistances) -> tuple[np.ndarray, np.ndarray]:
    """Closed form when every row is uniform (all hop distances equal 1):
    pair mass = (1/deg_i + 1/deg_j) / (2 * non_isolated_count)."""
    counts = np.diff(nd.indptr)
    inv = np.zeros(nd.node_count, dtype=np.float64)
    nonzero = counts > 0
    inv[nonzero] = 1.0 / counts[nonzero]
    denom = 2.0 * max(int(nonzero.sum()), 1)
    src = np.repeat(np.arange(nd.node_count, dtype=np.int64), counts)
    weights = (inv[src] + inv[nd.ids]) / denom
    sigma = np.ones(nd.node_count, dtype=np.float64)
    return weights, sigma


def build_sparse_similarity(nd: NeighborDistances,
                            params: SimilarityParams | None = None) -> SparseSimilarity:
    """Symmetrized, globally normalized similarity over the neighborhoods.

    Pair mass is (p_{j|i} + p_{i|j}) / (2 * N_ne) where N_ne counts nodes
    with a nonempty neighborhood, so the total directed mass is exactly 1
    even when isolated nodes are present. Symmetric entries are stored
    bit-identically.
    """
    if params is None:
        params = SimilarityParams()
    n = nd.node_count
    if len(nd.dists) == 0:
        return SparseSimilarity(indptr=nd.indptr.copy(),
                                targets=nd.ids.copy(),
                                weights=np.empty(0, dtype=np.float64),
                                total_mass=0.0,
                                sigma=np.ones(n, dtype=np.float64),
                                k=nd.k)

    if nd.k == 1 or int(nd.dists.max()) == 1:
        weights, sigma = _uniform_row_similarity(nd)
    else:
        counts = np.diff(nd.indptr)
        src_all = np.repeat(np.arange(n, dtype=np.int64), counts)
        degrees = np.zeros(n, dtype=np.int64)
        np.add.at(degrees, src_all[nd.dists == 1], 1)

        cond = np.empty(len(nd.ids), dtype=np.float64)
        sigma = np.ones(n, dtype=np.float64)
        for i in range(n):
            lo, hi = int(nd.indptr[i]), int(nd.indptr[i + 1])
            if lo == hi:
                continue
            ids_i = nd.ids[lo:hi]
            dists_i = nd.dists[lo:hi]
            row = list(zip(ids_i.tolist(), dists_i.tolist()))
            if params.perplexity == "auto":
                target = float(min(hi - lo, max(int(degrees[i]), 1)))
            else:
                target = float(params.perplexity)
            sigma[i] = search_sigma(row, target, tol=params.tol,
                                    max_iter=params.max_iter,
                                    sigma_min=params.sigma_min,
                                    sigma_max=params.sigma_max)
            for off, (_, p) in enumerate(conditional_similarity_row(row, sigma[i])):
                cond[lo + off] = p

        # Pair each directed entry with its mirror to symmetrize exactly.
        keys = src_all * np.int64(n) + nd.ids
        mirror_keys = nd.ids.astype(np.int64) * np.int64(n) + src_all
        order = np.argsort(keys)
        mirror_pos = order[np.searchsorted(keys[order], mirror_keys)]
        n_ne = int((counts > 0).sum())
        weights = (cond + cond[mirror_pos]) / (2.0 * n_ne)

    total = float(math.fsum(weights.tolist()))
    return SparseSimilarity(indptr=nd.indptr.copy(),
                            targets=nd.ids.copy(),
                            weights=weights,
                            total_mass=total,
                            sigma=sigma,
                            k=nd.k)
