"""Shared graph builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from drgraph.graph import Graph, from_edges


def path_graph(n: int) -> Graph:
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return from_edges(edges, node_count=n)


def cycle_graph(n: int) -> Graph:
    edges = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    return from_edges(edges, node_count=n)


def star_graph(leaves: int) -> Graph:
    edges = np.column_stack([np.zeros(leaves, dtype=np.int64),
                             np.arange(1, leaves + 1)])
    return from_edges(edges, node_count=leaves + 1)


def complete_graph(n: int) -> Graph:
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return from_edges(np.array(pairs), node_count=n)


def grid_graph(w: int, h: int) -> Graph:
    def idx(r, c):
        return r * w + c

    pairs = []
    for r in range(h):
        for c in range(w):
            if c + 1 < w:
                pairs.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < h:
                pairs.append((idx(r, c), idx(r + 1, c)))
    return from_edges(np.array(pairs), node_count=w * h)


def random_graph(n: int, m: int, seed: int = 0,
                 connect: bool = False) -> Graph:
    """m distinct random edges on n nodes; `connect` threads a random
    spanning path first so every node has degree >= 1."""
    rng = np.random.default_rng(seed)
    pairs = set()
    if connect:
        perm = rng.permutation(n)
        for a, b in zip(perm[:-1], perm[1:]):
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    while len(pairs) < m:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u != v:
            pairs.add((min(u, v), max(u, v)))
    return from_edges(np.array(sorted(pairs)), node_count=n)


def random_positions(n: int, seed: int = 0, scale: float = 10.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-scale, scale, size=(n, 2))


@pytest.fixture
def p3() -> Graph:
    return path_graph(3)
