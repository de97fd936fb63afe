"""Deterministic graph fixtures: small named graphs and seeded generators."""

from __future__ import annotations

import numpy as np

from .graph import CsrGraph, from_edges

__all__ = [
    "path_graph",
    "complete_graph",
    "star_graph",
    "erdos_renyi",
    "preferential_attachment",
]


def path_graph(n: int) -> CsrGraph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> CsrGraph:
    return from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n: int) -> CsrGraph:
    """Star on n nodes with node 0 as the center."""
    return from_edges(n, [(0, i) for i in range(1, n)])


def erdos_renyi(n: int, p: float, seed: int, ensure_connected_source: int | None = 0) -> CsrGraph:
    """G(n, p) with a fixed seed.

    When ensure_connected_source is given, that node is guaranteed at least
    one neighbor (solvers need a non-dangling source).
    """
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    mask = rng.random(iu[0].shape[0]) < p
    edges = list(zip(iu[0][mask].tolist(), iu[1][mask].tolist()))
    if ensure_connected_source is not None:
        s = ensure_connected_source
        if not any(s in e for e in edges):
            t = int(rng.integers(0, n - 1))
            t = t + 1 if t >= s else t
            edges.append((min(s, t), max(s, t)))
    return from_edges(n, edges)


def preferential_attachment(n: int, m_per_node: int, seed: int) -> CsrGraph:
    """Seeded preferential-attachment graph with a power-law-ish degree tail.

    Each arriving node attaches to m_per_node distinct existing nodes chosen
    with probability proportional to degree (repeated-endpoint sampling).
    """
    if n <= m_per_node:
        raise ValueError("need n > m_per_node")
    rng = np.random.default_rng(seed)
    # endpoint pool: every arc endpoint appears once, so sampling the pool
    # is degree-proportional sampling
    pool = np.empty(2 * n * m_per_node, dtype=np.int64)
    pool_len = 0
    edges: list[tuple[int, int]] = []
    for v in range(m_per_node):
        edges.append((v, m_per_node))
        pool[pool_len] = v
        pool[pool_len + 1] = m_per_node
        pool_len += 2
    for v in range(m_per_node + 1, n):
        chosen: set[int] = set()
        while len(chosen) < m_per_node:
            u = int(pool[rng.integers(0, pool_len)])
            chosen.add(u)
        for u in chosen:
            edges.append((u, v))
            pool[pool_len] = u
            pool[pool_len + 1] = v
            pool_len += 2
    return from_edges(n, edges)
