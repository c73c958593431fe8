"""Negative-sampling SGD over the coarse-to-fine hierarchy.

The objective pulls similarity-sampled pairs together through the heavy
tailed kernel 1/(1 + d^(2b)) and pushes weight-sampled negatives apart;
positions are optimized jointly across levels by drawing pairs at the
finest level and forwarding the update to their current-level ancestors.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .graph import Graph, all_k_neighborhoods, connected_components
from .multilevel import Hierarchy, build_hierarchy, compose_maps, prolong
from .similarity import SimilarityParams, SparseSimilarity, build_sparse_similarity

logger = logging.getLogger("drgraph")

_HIERARCHY_TAG = 1
_INIT_TAG = 2
_JITTER_TAG = 3
_EPOCH_TAG = 4


def _derive_seed(seed: int, *tags: int) -> int:
    """Deterministic uint64 child seed for independent random streams."""
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1, np.uint64)[0])


@dataclass
class OptimizerParams:
    """Tunables of the sampled-gradient optimizer.

    iters is the per-level epoch count; one epoch performs one gradient
    step per node of the current level. neg_samples = 0 is an
    attractive-only mode used by dynamics tests.
    """

    neg_samples: int = 5
    gamma: float = 0.1
    gamma_coarsest: float = 0.01
    iters: int = 400
    b: int = 2
    lr0: float = 1.0
    grad_clip: float = 5.0
    eps: float = 1e-3
    neg_power: float = 0.75
    init_scale: float = 1e-4
    jitter_rel: float = 1e-3
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.neg_samples < 0:
            raise ValueError("neg_samples must be >= 0")
        if self.gamma <= 0 or self.gamma_coarsest <= 0:
            raise ValueError("gamma must be positive")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class Layout:
    """2D position per node plus bookkeeping from the run."""

    positions: np.ndarray
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AliasTable:
    """Constant-time discrete sampler over a fixed weight vector."""

    prob: np.ndarray    # float64, acceptance threshold per bucket
    alias: np.ndarray   # int32, fallback item per bucket
    total_weight: float

    def __len__(self) -> int:
        return len(self.prob)

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.random(2)
        idx = min(int(u[0] * len(self.prob)), len(self.prob) - 1)
        return idx if u[1] < self.prob[idx] else int(self.alias[idx])

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = np.minimum((rng.random(size) * len(self.prob)).astype(np.int64),
                         len(self.prob) - 1)
        coin = rng.random(size)
        take_alias = coin >= self.prob[idx]
        out = idx.copy()
        out[take_alias] = self.alias[idx[take_alias]]
        return out


def build_alias_table(weights: np.ndarray) -> AliasTable:
    """Vose construction; deterministic for a given weight vector."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) == 0:
        raise ValueError("cannot build an alias table over zero items")
    if weights.min() < 0:
        raise ValueError("negative weight")
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("all weights are zero")
    n = len(weights)
    scaled = weights * (n / total)
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int32)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in small:  # leftovers are 1 up to rounding
        prob[i] = 1.0
    return AliasTable(prob=prob, alias=alias, total_weight=total)


def _ipow(x: float, n: int) -> float:
    # repeated multiply, matching the kernel bit for bit
    r = 1.0
    for _ in range(n):
        r *= x
    return r


def lp_kernel(ld: float, b: int) -> float:
    """Unnormalized layout-proximity kernel 1/(1 + ld^(2b))."""
    return 1.0 / (1.0 + _ipow(ld * ld, b))


@dataclass(frozen=True)
class GradientSample:
    """One sampled interaction, for tracing and inspection."""

    i: int
    j: int
    ld: float
    lp_kernel: float
    kind: Literal["positive", "negative"]

    @classmethod
    def from_positions(cls, i: int, j: int, y_i, y_j, b: int,
                       kind: str) -> "GradientSample":
        dx = float(y_i[0]) - float(y_j[0])
        dy = float(y_i[1]) - float(y_j[1])
        ld = math.sqrt(dx * dx + dy * dy)
        return cls(i=i, j=j, ld=ld, lp_kernel=lp_kernel(ld, b), kind=kind)


def attractive_gradient(y_i, y_j, b: int) -> np.ndarray:
    """Gradient of log(1/(1 + d^(2b))) with respect to y_i.

    Points from y_i toward y_j; zero when the positions coincide.
    """
    dx = float(y_i[0]) - float(y_j[0])
    dy = float(y_i[1]) - float(y_j[1])
    ld2 = dx * dx + dy * dy
    if ld2 == 0.0:
        return np.zeros(2)
    pw = _ipow(ld2, b - 1)
    coef = -2.0 * float(b) * pw / (1.0 + pw * ld2)
    return np.array([coef * dx, coef * dy])


def repulsive_gradient(y_i, y_jm, b: int, gamma: float, eps: float,
                       clip: float = math.inf) -> np.ndarray:
    """Gradient of gamma * log(1 - 1/(1 + d^(2b))) with respect to y_i,
    with an eps floor on the d^2 factor. Points away from y_jm; each
    component is clamped to +-clip."""
    dx = float(y_i[0]) - float(y_jm[0])
    dy = float(y_i[1]) - float(y_jm[1])
    ld2 = dx * dx + dy * dy
    if ld2 + eps <= 0.0:
        return np.zeros(2)
    pw = _ipow(ld2, b - 1)
    coef = gamma * 2.0 * float(b) / ((ld2 + eps) * (1.0 + pw * ld2))
    gx = min(max(coef * dx, -clip), clip)
    gy = min(max(coef * dy, -clip), clip)
    return np.array([gx, gy])


@dataclass(frozen=True)
class PositiveSampler:
    """Directed-entry sampler: an alias table over unordered pairs (the
    mass is symmetric) plus a direction coin. Draw (i, j) lands with
    probability NS_ij / total, exactly as if the table held both
    directions, at half the memory."""

    table: AliasTable
    lo: np.ndarray  # int32
    hi: np.ndarray  # int32

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        e = self.table.sample(rng)
        if rng.random() < 0.5:
            return int(self.lo[e]), int(self.hi[e])
        return int(self.hi[e]), int(self.lo[e])

    def sample_many(self, rng: np.random.Generator,
                    size: int) -> tuple[np.ndarray, np.ndarray]:
        e = self.table.sample_many(rng, size)
        flip = rng.random(size) >= 0.5
        src = np.where(flip, self.hi[e], self.lo[e])
        dst = np.where(flip, self.lo[e], self.hi[e])
        return src, dst


def build_positive_sampler(ns: SparseSimilarity) -> PositiveSampler:
    """O(1) sampler of directed pairs proportional to their similarity."""
    if ns.entry_count == 0 or float(ns.weights.sum()) <= 0.0:
        raise ValueError("similarity carries no mass; nothing to sample")
    src = ns.sources()
    canonical = src < ns.targets
    return PositiveSampler(table=build_alias_table(ns.weights[canonical]),
                           lo=src[canonical].astype(np.int32),
                           hi=ns.targets[canonical].astype(np.int32))


def build_negative_sampler(ns: SparseSimilarity, power: float = 0.75) -> AliasTable:
    """O(1) sampler of nodes by (incident similarity mass)**power.

    Isolated nodes get a 1e-8-of-max floor weight so repulsion still
    places them.
    """
    mass = ns.row_masses()
    with np.errstate(invalid="ignore"):
        w = np.where(mass > 0, mass, 0.0) ** power
    if power == 0:
        w = np.ones_like(mass)
    top = float(w.max()) if len(w) else 0.0
    if top <= 0.0:
        w = np.ones_like(mass)
        top = 1.0
    w = np.where(w > 0, w, 1e-8 * top)
    return build_alias_table(w)


def _pack_alias(table: AliasTable) -> np.ndarray:
    """(threshold, alias) per row so one cache line serves a pick."""
    rec = np.empty((len(table.prob), 2), dtype=np.float64)
    rec[:, 0] = table.prob
    rec[:, 1] = table.alias
    return rec


@dataclass
class Samplers:
    """Sampling state shared across levels, built once per layout.

    pos_rec / pair_rec / neg_rec are row-packed copies the kernel reads;
    they carry the same values as the public tables.
    """

    positive: PositiveSampler
    negative: AliasTable
    pos_rec: np.ndarray
    pair_rec: np.ndarray
    neg_rec: np.ndarray
    _maps: dict[int, np.ndarray] = field(default_factory=dict)

    def level_map(self, h: Hierarchy, level: int) -> np.ndarray:
        if level not in self._maps:
            self._maps[level] = compose_maps(h, level)
        return self._maps[level]


def build_samplers(ns: SparseSimilarity, neg_power: float = 0.75) -> Samplers:
    positive = build_positive_sampler(ns)
    negative = build_negative_sampler(ns, neg_power)
    pair_rec = np.empty((len(positive.lo), 2), dtype=np.int32)
    pair_rec[:, 0] = positive.lo
    pair_rec[:, 1] = positive.hi
    return Samplers(positive=positive, negative=negative,
                    pos_rec=_pack_alias(positive.table),
                    pair_rec=pair_rec,
                    neg_rec=_pack_alias(negative))


def _infer_level(h: Hierarchy, n: int) -> int:
    for level, g in enumerate(h.levels):
        if g.node_count == n:
            return level
    raise ValueError(f"no hierarchy level has {n} nodes")


def sgd_epoch(positions: np.ndarray, h: Hierarchy, samplers: Samplers,
              params: OptimizerParams, t: int,
              stats: dict | None = None) -> np.ndarray:
    """One epoch (one gradient step per node of the level) in place.

    The level is inferred from the position count; the coarsest level
    runs with the reduced repulsion weight. Learning rate decays linearly
    in t and restarts at every level.
    """
    n = len(positions)
    level = _infer_level(h, n)
    gamma = params.gamma_coarsest if level == h.depth else params.gamma
    lr = max(params.lr0 * (1.0 - t / params.iters), 0.0)
    node_map = samplers.level_map(h, level)

    def run(worker: int, n_steps: int, out: list) -> None:
        seed = _derive_seed(params.seed, _EPOCH_TAG, level, t, worker)
        evals = _kernels.sgd_steps(
            positions, samplers.pos_rec, samplers.pair_rec,
            samplers.neg_rec, node_map, level > 0,
            n_steps, params.neg_samples, params.b, gamma,
            params.eps, params.grad_clip, lr, np.uint64(seed))
        out[worker] = int(evals)

    workers = min(params.threads, n) if params.threads > 1 else 1
    counts = [n // workers + (1 if w < n % workers else 0) for w in range(workers)]
    evals_out = [0] * workers
    if workers == 1:
        run(0, n, evals_out)
    else:
        threads = [threading.Thread(target=run, args=(w, counts[w], evals_out))
                   for w in range(workers)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()

    if not np.isfinite(positions).all():
        raise FloatingPointError(
            f"non-finite coordinate after epoch {t} at level {level}")
    if stats is not None:
        stats["gradient_steps"] = stats.get("gradient_steps", 0) + n
        stats["distance_evals"] = stats.get("distance_evals", 0) + sum(evals_out)
    return positions


def _layout_radius(positions: np.ndarray) -> float:
    center = positions.mean(axis=0)
    return float(np.sqrt(((positions - center) ** 2).sum(axis=1)).max())


def layout_graph(g: Graph, sim_params: SimilarityParams | None = None,
                 opt_params: OptimizerParams | None = None,
                 rho: float = 0.8, min_size: int = 16) -> Layout:
    """Full pipeline: neighborhoods, similarity, hierarchy, then SGD from
    the coarsest level down, prolonging positions between levels.

    Deterministic for a fixed seed with threads = 1.
    """
    if g.node_count < 1:
        raise ValueError("cannot lay out an empty graph")
    sim = sim_params or SimilarityParams()
    opt = opt_params or OptimizerParams()

    labels = connected_components(g)
    n_components = int(labels.max()) + 1 if len(labels) else 0
    if n_components > 1:
        logger.warning("input has %d connected components; repulsion alone "
                       "separates them", n_components)

    nd = all_k_neighborhoods(g, sim.k)
    ns = build_sparse_similarity(nd, sim)
    h = build_hierarchy(g, rho=rho, min_size=min_size,
                        seed=_derive_seed(opt.seed, _HIERARCHY_TAG))
    stats: dict = {
        "components": n_components,
        "levels": [lvl.node_count for lvl in h.levels],
        "similarity_nbytes": ns.nbytes(),
        "hierarchy_nbytes": h.nbytes(),
        "gradient_steps": 0,
        "distance_evals": 0,
    }

    rng_init = np.random.default_rng(_derive_seed(opt.seed, _INIT_TAG))
    positions = rng_init.normal(0.0, opt.init_scale,
                                size=(h.levels[-1].node_count, 2))

    if ns.entry_count == 0:
        # No similarity mass (edgeless input): nothing to optimize.
        stats["skipped_optimization"] = True
        full = np.asarray(prolong(positions, compose_maps(h, h.depth),
                                  0.0, 0), dtype=np.float64)
        return Layout(positions=full, stats=stats)

    samplers = build_samplers(ns, opt.neg_power)
    for level in range(h.depth, -1, -1):
        for t in range(opt.iters):
            sgd_epoch(positions, h, samplers, opt, t, stats)
        if level > 0:
            radius = _layout_radius(positions)
            jitter = opt.jitter_rel * radius if radius > 0 else opt.init_scale
            positions = prolong(positions, h.maps[level - 1], jitter,
                                _derive_seed(opt.seed, _JITTER_TAG, level))
    return Layout(positions=positions, stats=stats)
