"""Undirected social graphs with a Poisson-converging degree law."""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SocialGraph:
    """Adjacency lists, sorted per vertex, symmetric, loop- and duplicate-free."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.adjacency) != self.n:
            raise ValueError("adjacency must list every vertex")
        for u, nbrs in enumerate(self.adjacency):
            prev = -1
            for v in nbrs:
                if not (0 <= v < self.n):
                    raise ValueError(f"vertex {u} links to out-of-range id {v}")
                if v == u:
                    raise ValueError(f"vertex {u} has a self-loop")
                if v <= prev:
                    raise ValueError(f"neighbors of {u} must be sorted and unique")
                prev = v
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                other = self.adjacency[v]
                j = bisect_left(other, u)
                if j >= len(other) or other[j] != u:
                    raise ValueError(f"edge {u}-{v} is not symmetric")

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def degrees(self) -> list[int]:
        return [len(nbrs) for nbrs in self.adjacency]

    def mean_degree(self) -> float:
        return 2.0 * self.edge_count / self.n


def generate_graph(n: int, mean_degree: float, graph_seed: int) -> SocialGraph:
    """Sample G(n, p) with p = mean_degree/(n-1).

    The degree distribution converges to Poisson(mean_degree) for large n.
    The skip-sampling construction touches only realized edges, so dense
    populations stay cheap, and the PCG64 stream makes the result a pure
    function of the seed.
    """
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if not (isinstance(mean_degree, (int, float)) and 0.0 < mean_degree <= n - 1):
        raise ValueError(f"mean_degree must lie in (0, n-1], got {mean_degree!r}")
    p = mean_degree / (n - 1)
    neighbors: list[list[int]] = [[] for _ in range(n)]
    if p >= 1.0:
        for u in range(n):
            neighbors[u] = [v for v in range(n) if v != u]
    else:
        rng = np.random.Generator(np.random.PCG64(graph_seed))
        log_q = math.log1p(-p)
        # Walk the strictly-lower-triangular pair sequence with geometric skips.
        v, w = 1, -1
        while v < n:
            w += 1 + int(math.log1p(-rng.random()) / log_q)
            while w >= v and v < n:
                w -= v
                v += 1
            if v < n:
                neighbors[v].append(w)
                neighbors[w].append(v)
    return SocialGraph(n=n, adjacency=tuple(tuple(sorted(ns)) for ns in neighbors))
