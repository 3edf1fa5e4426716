"""Recommendation graph generators and small-world metrics.

Videos are numbered 1..n. Index 0 is reserved for the dummy source state of
the request chain and never appears in a graph.
"""
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from ._rng import UniformBuffer, keyed_generator

__all__ = [
    "RecommendationGraph",
    "PathLength",
    "GraphDisconnectedError",
    "generate_ba_graph",
    "generate_directed_graph",
    "degree_distribution",
    "clustering_coefficient",
    "characteristic_path_length",
    "bidirectional_fraction",
    "EXACT_PATH_LENGTH_MAX_N",
    "PATH_LENGTH_SAMPLE_SIZE",
]

EXACT_PATH_LENGTH_MAX_N = 2000
PATH_LENGTH_SAMPLE_SIZE = 200

# rejection attempts before falling back to an explicit weighted draw
_MAX_REJECTIONS = 64


class GraphDisconnectedError(ValueError):
    pass


@dataclass(frozen=True)
class RecommendationGraph:
    """Directed recommendation graph over videos ``1..n``.

    ``out_edges[i]`` holds the recommendations of video ``i`` in ascending
    id order; entry 0 is always empty.
    """

    n: int
    out_edges: tuple
    in_degree: np.ndarray = field(repr=False)
    out_degree: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n, edges):
        adj = [set() for _ in range(n + 1)]
        for i, j in edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i}, {j}) outside 1..{n}")
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            adj[i].add(j)
        out_edges = tuple(tuple(sorted(s)) for s in adj)
        in_degree = np.zeros(n + 1, dtype=np.int64)
        out_degree = np.array([len(s) for s in out_edges], dtype=np.int64)
        for targets in out_edges:
            for j in targets:
                in_degree[j] += 1
        return cls(n, out_edges, in_degree, out_degree)

    @property
    def num_edges(self):
        return int(self.out_degree.sum())

    def edges(self):
        """Directed edges sorted by (src, dst)."""
        for i in range(1, self.n + 1):
            for j in self.out_edges[i]:
                yield i, j

    def has_edge(self, i, j):
        targets = self.out_edges[i]
        k = bisect_left(targets, j)
        return k < len(targets) and targets[k] == j

    def undirected_neighbors(self):
        nbrs = [set(t) for t in self.out_edges]
        for i, j in self.edges():
            nbrs[j].add(i)
        return nbrs

    def undirected_adjacency(self):
        """Symmetric 0/1 CSR matrix over nodes 1..n (shifted to 0..n-1)."""
        src, dst = [], []
        for i, j in self.edges():
            src.append(i - 1)
            dst.append(j - 1)
        data = np.ones(len(src), dtype=np.int64)
        a = sp.coo_matrix((data, (src, dst)), shape=(self.n, self.n)).tocsr()
        a = ((a + a.T) > 0).astype(np.int64)
        return a.tocsr()

    def to_text(self):
        lines = [f"n={self.n} directed=true"]
        lines.extend(f"{i} {j}" for i, j in self.edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("n="):
            raise ValueError("graph file must start with a 'n=<n> directed=true' header")
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n = int(header["n"])
        edges = []
        for ln in lines[1:]:
            a, b = ln.split()
            edges.append((int(a), int(b)))
        return cls.from_edges(n, edges)

    def __eq__(self, other):
        if not isinstance(other, RecommendationGraph):
            return NotImplemented
        return self.n == other.n and self.out_edges == other.out_edges

    def __hash__(self):
        return hash((self.n, self.out_edges))


def _seed_ring(m):
    """Undirected ring on nodes 1..m (a single edge for m=2, empty for m=1)."""
    if m == 1:
        return []
    if m == 2:
        return [(1, 2)]
    return [(i, i % m + 1) for i in range(1, m + 1)]


def generate_ba_graph(n, m, seed=0):
    """Barabási–Albert graph with every undirected edge replaced by two arcs.

    The seed is a ring on the first ``m`` nodes. Each later node attaches to
    ``m`` distinct existing nodes, chosen one after another with probability
    proportional to current degree.

    Parameters
    ----------
    n : int
        Number of videos.
    m : int
        Edges added per new node, ``1 <= m < n``.
    seed : int
        Master seed; node ``v`` draws from its own keyed stream.

    Returns
    -------
    RecommendationGraph
    """
    if m < 1 or m >= n:
        raise ValueError(f"Barabási–Albert graph needs 1 <= m < n, got m={m}, n={n}")
    edges = _seed_ring(m)
    # one entry per edge endpoint: uniform draws from it are degree-proportional
    ends = [x for e in edges for x in e]
    for v in range(m + 1, n + 1):
        draw = UniformBuffer(keyed_generator(seed, "graph", v), block=4 * m)
        chosen = []
        chosen_set = set()
        while len(chosen) < m:
            if ends:
                t = ends[int(draw() * len(ends))]
            else:
                t = 1 + int(draw() * (v - 1))
            if t in chosen_set:
                continue
            chosen.append(t)
            chosen_set.add(t)
            ends.append(t)
        edges.extend((v, t) for t in chosen)
        ends.extend([v] * m)
    return RecommendationGraph.from_edges(n, [e for a, b in edges for e in ((a, b), (b, a))])


def _weighted_pick(draw, pool, weights_fn, candidates_fn, ok):
    """Pick from ``pool`` (a degree-repeated list) subject to ``ok``.

    Falls back to an explicit weighted draw over ``candidates_fn()`` once
    rejection stalls. Returns None when no admissible node exists.
    """
    if pool:
        for _ in range(_MAX_REJECTIONS):
            x = pool[int(draw() * len(pool))]
            if ok(x):
                return x
    cands = [x for x in candidates_fn() if ok(x)]
    if not cands:
        return None
    w = np.array([weights_fn(x) for x in cands], dtype=float)
    total = w.sum()
    u = draw()
    if total <= 0:
        return cands[int(u * len(cands))]
    k = int(np.searchsorted(np.cumsum(w) / total, u, side="right"))
    return cands[min(k, len(cands) - 1)]


def generate_directed_graph(n, m, p_in, p_out, seed=0):
    """Directed preferential-attachment graph with tunable reciprocity.

    Each new node ``v`` gains links until it has ``m`` incident links:
    with probability ``p_out`` an arc ``v -> i`` (``i`` chosen by in-degree),
    with probability ``p_in`` an arc ``i -> v`` (``i`` chosen by out-degree),
    otherwise an arc ``a -> b`` between existing nodes (``a`` by in-degree,
    ``b`` by out-degree) that does not count toward the quota.

    The seed is a bidirected ring on nodes ``1..m``.
    """
    if m < 1 or m >= n:
        raise ValueError(f"directed graph needs 1 <= m < n, got m={m}, n={n}")
    if p_in < 0 or p_out < 0 or p_in + p_out > 1:
        raise ValueError(f"need p_in, p_out >= 0 and p_in + p_out <= 1, got {p_in}, {p_out}")
    if p_in + p_out == 0:
        raise ValueError("p_in + p_out must be positive or new nodes never attach")

    out_adj = [set() for _ in range(n + 1)]
    in_deg = [0] * (n + 1)
    out_deg = [0] * (n + 1)
    in_pool = []
    out_pool = []

    def add(a, b):
        out_adj[a].add(b)
        out_deg[a] += 1
        in_deg[b] += 1
        in_pool.append(b)
        out_pool.append(a)

    for a, b in _seed_ring(m):
        add(a, b)
        add(b, a)

    for v in range(m + 1, n + 1):
        draw = UniformBuffer(keyed_generator(seed, "graph", v), block=8 * m)
        existing = lambda: range(1, v)  # noqa: E731
        links = 0
        while links < m:
            x = draw()
            if x < p_out:
                t = _weighted_pick(
                    draw, in_pool, in_deg.__getitem__, existing,
                    lambda i: i != v and i not in out_adj[v],
                )
                if t is not None:
                    add(v, t)
                    links += 1
            elif x < p_out + p_in:
                s = _weighted_pick(
                    draw, out_pool, out_deg.__getitem__, existing,
                    lambda i: i != v and v not in out_adj[i],
                )
                if s is not None:
                    add(s, v)
                    links += 1
            else:
                a = _weighted_pick(draw, in_pool, in_deg.__getitem__, existing, lambda i: i != v)
                if a is None:
                    continue
                b = _weighted_pick(
                    draw, out_pool, out_deg.__getitem__, existing,
                    lambda j: j != v and j != a and j not in out_adj[a],
                )
                if b is not None:
                    add(a, b)
    edges = [(a, b) for a in range(1, n + 1) for b in out_adj[a]]
    return RecommendationGraph.from_edges(n, edges)


def degree_distribution(graph, mode="undirected"):
    """Histogram ``{degree: node count}`` sorted by degree.

    ``mode`` is one of ``"in"``, ``"out"`` or ``"undirected"``.
    """
    if mode == "in":
        degs = graph.in_degree[1:]
    elif mode == "out":
        degs = graph.out_degree[1:]
    elif mode == "undirected":
        degs = [len(s) for s in graph.undirected_neighbors()[1:]]
    else:
        raise ValueError(f"unknown degree mode {mode!r}")
    counts = Counter(int(d) for d in degs)
    return dict(sorted(counts.items()))


def clustering_coefficient(graph):
    """Mean local clustering of the undirected view; degree < 2 scores 0."""
    a = graph.undirected_adjacency()
    deg = np.asarray(a.sum(axis=1)).ravel().astype(float)
    triangles = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    pairs = deg * (deg - 1) / 2.0
    local = np.divide(triangles, pairs, out=np.zeros_like(pairs), where=pairs > 0)
    return float(local.mean()) if graph.n else 0.0


@dataclass(frozen=True)
class PathLength:
    value: float
    estimated: bool
    sources: int


def characteristic_path_length(graph, sample_size=PATH_LENGTH_SAMPLE_SIZE, seed=0):
    """Mean shortest-path distance over node pairs of the undirected view.

    Exact over all pairs for ``n <= EXACT_PATH_LENGTH_MAX_N``; otherwise BFS
    from ``sample_size`` uniformly chosen sources and the result is flagged
    as an estimate.

    Raises
    ------
    GraphDisconnectedError
        If some pair of nodes has no connecting path.
    """
    n = graph.n
    if n < 2:
        raise ValueError("path length needs at least two nodes")
    a = graph.undirected_adjacency()
    if n <= EXACT_PATH_LENGTH_MAX_N:
        sources = np.arange(n)
        estimated = False
    else:
        gen = keyed_generator(seed, "sampling", 0)
        sources = np.sort(gen.choice(n, size=min(sample_size, n), replace=False))
        estimated = True
    dist = csgraph.shortest_path(a, method="D", unweighted=True, indices=sources)
    if np.isinf(dist).any():
        raise GraphDisconnectedError("graph is disconnected; characteristic path length undefined")
    total = dist.sum()
    pairs = len(sources) * (n - 1)
    return PathLength(float(total / pairs), estimated, int(len(sources)))


def bidirectional_fraction(graph):
    """Fraction of arcs whose reverse arc is also present."""
    total = graph.num_edges
    if total == 0:
        return 0.0
    mutual = sum(1 for i, j in graph.edges() if graph.has_edge(j, i))
    return mutual / total
