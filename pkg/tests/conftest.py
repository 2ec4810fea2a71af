"""Shared fixtures and independent oracle implementations.

The oracles here stay deliberately naive (repeated scans, BFS, exhaustive
enumeration) so they exercise none of the code paths they are checking.
"""

from __future__ import annotations

import itertools

import numpy as np

from controversy_scope.graph import EndorsementGraph, edge_key
from controversy_scope.ingest import InteractionRecord


def record(
    post_id: str,
    author: str,
    ts: int = 1_000,
    tokens: tuple[tuple[str, str], ...] = (("word", "NOUN"),),
    repost_of: tuple[str, str] | None = None,
) -> InteractionRecord:
    return InteractionRecord(post_id, author, ts, tokens, repost_of)


def graph_from_edges(edges: dict[tuple[str, str], int]) -> EndorsementGraph:
    canonical = {edge_key(u, v): w for (u, v), w in edges.items()}
    nodes = frozenset(n for pair in canonical for n in pair)
    return EndorsementGraph(nodes, canonical)


def clique_edges(names: list[str], weight: int = 1) -> dict[tuple[str, str], int]:
    return {edge_key(u, v): weight for u, v in itertools.combinations(names, 2)}


def random_graph(n: int, p: float, rng: np.random.Generator) -> EndorsementGraph:
    """ER graph on n named nodes; may be disconnected and may have isolates."""
    names = [f"n{i:02d}" for i in range(n)]
    edges = {}
    for u, v in itertools.combinations(names, 2):
        if rng.random() < p:
            edges[edge_key(u, v)] = int(rng.integers(1, 5))
    return EndorsementGraph(frozenset(names), edges)


def random_connected_graph(n: int, p: float, rng: np.random.Generator) -> EndorsementGraph:
    """Rejection-sample an ER graph until connected (small n only)."""
    while True:
        g = random_graph(n, p, rng)
        if g.node_count and len(bfs_components(g)) == 1:
            return g


def unit_weights(g: EndorsementGraph) -> EndorsementGraph:
    return EndorsementGraph(g.nodes, {pair: 1 for pair in g.edges})


# --- naive oracles -----------------------------------------------------------


def naive_k_core(g: EndorsementGraph, k: int) -> frozenset[str]:
    """Fixpoint by full rescans: drop any node with degree < k, repeat."""
    alive = set(g.nodes)
    while True:
        degree = {n: 0 for n in alive}
        for u, v in g.edges:
            if u in alive and v in alive:
                degree[u] += 1
                degree[v] += 1
        doomed = {n for n in alive if degree[n] < k}
        if not doomed:
            return frozenset(alive)
        alive -= doomed


def bfs_components(g: EndorsementGraph) -> list[frozenset[str]]:
    adj: dict[str, set[str]] = {n: set() for n in g.nodes}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    seen: set[str] = set()
    components = []
    for start in g.nodes:
        if start in seen:
            continue
        frontier = [start]
        comp = {start}
        while frontier:
            node = frontier.pop()
            for nxt in adj[node]:
                if nxt not in comp:
                    comp.add(nxt)
                    frontier.append(nxt)
        seen |= comp
        components.append(frozenset(comp))
    return components


def exhaustive_min_balanced_cut(
    g: EndorsementGraph, max_side: int, weighted: bool = False
) -> int:
    """Minimum crossing cut over all bipartitions within the size bound."""
    nodes = sorted(g.nodes)
    n = len(nodes)
    best = None
    anchor = nodes[0]
    rest = nodes[1:]
    for size_x in range(1, n):
        if size_x > max_side or n - size_x > max_side:
            continue
        for chosen in itertools.combinations(rest, size_x - 1):
            side_x = {anchor, *chosen}
            if weighted:
                cut = sum(w for (u, v), w in g.edges.items()
                          if (u in side_x) != (v in side_x))
            else:
                cut = sum(1 for (u, v) in g.edges if (u in side_x) != (v in side_x))
            if best is None or cut < best:
                best = cut
    assert best is not None
    return best
