"""Gilbert graphs and subgraph counting over sampled point configurations.

Counting follows the kernel convention: the number of (not necessarily
induced) copies of a connected pattern H equals the number of injective
homomorphisms of H into the graph divided by the automorphism count of H.
"""

from __future__ import annotations

import io
import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SizeError
from .point_process import SpatioTemporalSample, restrict

__all__ = [
    "GraphPattern",
    "GeometricGraph",
    "distance",
    "build_gilbert_graph",
    "count_subgraphs",
    "automorphism_count",
    "PATTERNS",
]


@dataclass(frozen=True)
class GraphPattern:
    """A small connected graph given by vertex count and edge set."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices) or a == b:
                raise ConfigurationError(f"bad edge ({a}, {b})")

    @classmethod
    def complete(cls, n: int) -> "GraphPattern":
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def path(cls, n_edges: int) -> "GraphPattern":
        return cls(n_edges + 1, tuple((i, i + 1) for i in range(n_edges)))

    @classmethod
    def star(cls, n_leaves: int) -> "GraphPattern":
        return cls(n_leaves + 1, tuple((0, i + 1) for i in range(n_leaves)))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj


PATTERNS: dict[str, GraphPattern] = {
    "K_2": GraphPattern.complete(2),
    "K_3": GraphPattern.complete(3),
    "triangle": GraphPattern.complete(3),
    "K_4": GraphPattern.complete(4),
    "path_2": GraphPattern.path(2),
    "star_2": GraphPattern.star(2),
    "star_3": GraphPattern.star(3),
    "star_4": GraphPattern.star(4),
}


def automorphism_count(pattern: GraphPattern) -> int:
    """Number of adjacency-preserving vertex permutations, by brute force."""
    if pattern.n_vertices > 8:
        raise SizeError("automorphism count supported for at most 8 vertices")
    adj = pattern.adjacency()
    count = 0
    for perm in itertools.permutations(range(pattern.n_vertices)):
        p = np.asarray(perm)
        if np.array_equal(adj[np.ix_(p, p)], adj):
            count += 1
    return count


def distance(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Pairwise-compatible distance; torus metric wraps on the unit cube."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if metric == "torus":
        diff = np.abs(diff)
        diff = np.minimum(diff, 1.0 - diff)
    elif metric != "euclidean":
        raise ConfigurationError(f"unknown metric {metric!r}")
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class GeometricGraph:
    """Adjacency of a Gilbert graph: edge iff distance <= radius."""

    points: np.ndarray  # (n, N)
    radius: float
    metric: str
    neighbors: tuple[tuple[int, ...], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.neighbors) // 2

    def to_edge_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j"])
        for i, nb in enumerate(self.neighbors):
            for j in nb:
                if j > i:
                    writer.writerow([i, j])
        return buf.getvalue()


def _bucket_key(point: np.ndarray, cell: float) -> tuple[int, ...]:
    return tuple(int(math.floor(v / cell)) for v in point)


def build_gilbert_graph(
    sample: SpatioTemporalSample,
    t: float | None = None,
    r: float = 0.1,
    metric: str = "torus",
) -> GeometricGraph:
    """Exact adjacency via grid bucketing with cell size r."""
    if r <= 0:
        raise ConfigurationError("radius must be positive")
    if t is not None:
        sample = restrict(sample, t)
    pts = np.atleast_2d(np.asarray(sample.locations, dtype=float))
    n = len(sample)
    if n == 0:
        return GeometricGraph(points=np.zeros((0, 1)), radius=r, metric=metric, neighbors=())
    dim = pts.shape[1]
    if metric == "torus":
        # cells must tile the torus exactly, so use width 1/n_cells >= r
        n_cells = max(1, int(math.floor(1.0 / r)))
        cell = 1.0 / n_cells
    else:
        n_cells = None
        cell = r
    buckets: dict[tuple[int, ...], list[int]] = {}
    for i in range(n):
        key = _bucket_key(pts[i], cell)
        if n_cells is not None:
            key = tuple(min(v, n_cells - 1) for v in key)
        buckets.setdefault(key, []).append(i)
    offsets = list(itertools.product((-1, 0, 1), repeat=dim))
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for key, members in buckets.items():
        cand: list[int] = []
        for off in offsets:
            nkey = tuple(k + o for k, o in zip(key, off))
            if metric == "torus":
                nkey = tuple(v % n_cells for v in nkey)
            got = buckets.get(nkey)
            if got:
                cand.extend(got)
        cand = sorted(set(cand))
        cand_pts = pts[cand]
        for i in members:
            dist = distance(pts[i][None, :], cand_pts, metric)
            for j, dij in zip(cand, dist):
                if j != i and dij <= r:
                    neighbors[i].append(j)
    neighbors = [tuple(sorted(set(nb))) for nb in neighbors]
    return GeometricGraph(points=pts, radius=float(r), metric=metric, neighbors=tuple(neighbors))


_COUNT_CAPS = {2: 10_000, 3: 1_000, 4: 200}


def count_subgraphs(graph: GeometricGraph, pattern: GraphPattern | str) -> int:
    """Number of copies of the pattern: injective homomorphisms / Aut."""
    if isinstance(pattern, str):
        if pattern not in PATTERNS:
            raise ConfigurationError(f"unsupported pattern {pattern!r}")
        pattern = PATTERNS[pattern]
    d = pattern.n_vertices
    cap = _COUNT_CAPS.get(d)
    if cap is not None and graph.n_vertices > cap:
        raise SizeError(f"at most {cap} vertices supported for order-{d} patterns")
    adj_sets = [set(nb) for nb in graph.neighbors]
    pat_adj = pattern.adjacency()
    # pattern vertices in DFS order so each new vertex attaches to a placed one
    order = _dfs_order(pattern)
    back = [
        [order.index(u) for u in range(d) if pat_adj[order[k], u] and u in order[:k]]
        for k in range(d)
    ]
    homs = 0
    assignment = [-1] * d

    def extend(k: int) -> int:
        nonlocal homs
        if k == d:
            homs += 1
            return 0
        if back[k]:
            cands = set(adj_sets[assignment[back[k][0]]])
            for b in back[k][1:]:
                cands &= adj_sets[assignment[b]]
        else:
            cands = set(range(graph.n_vertices))
        used = set(assignment[:k])
        for v in sorted(cands - used):
            assignment[k] = v
            extend(k + 1)
        assignment[k] = -1
        return 0

    extend(0)
    aut = automorphism_count(pattern)
    assert homs % aut == 0
    return homs // aut


def _dfs_order(pattern: GraphPattern) -> list[int]:
    adj = pattern.adjacency()
    seen = [0]
    while len(seen) < pattern.n_vertices:
        for u in range(pattern.n_vertices):
            if u not in seen and any(adj[u, v] for v in seen):
                seen.append(u)
                break
        else:  # disconnected pattern: append remaining vertices
            seen.append(next(u for u in range(pattern.n_vertices) if u not in seen))
    return seen
