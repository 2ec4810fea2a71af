"""Balanced two-way graph partitioning with a multilevel scheme.

The bisection pipeline mirrors the classic multilevel recipe: coarsen by
heavy-edge matching until the graph is small, seed a greedy balanced
bisection there, then uncoarsen while running boundary Fiduccia-Mattheyses
passes at every level. Edge weights drive matching and move gains; balance
is counted in nodes. Everything is deterministic for a fixed seed, with
ties broken by position in the sorted node-id order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import EndorsementGraph, is_connected

SIDE_X = "X"
SIDE_Y = "Y"

COARSEN_TARGET = 64
FM_MAX_PASSES = 10
INIT_ATTEMPTS = 12


class PartitionError(Exception):
    """Base class for bisection failures."""


class TooSmall(PartitionError):
    """Fewer than two nodes; no bisection exists."""


class DisconnectedGraph(PartitionError):
    """Bisection requires a connected input graph."""


class UnassignedNode(PartitionError):
    """A graph node is missing from the partition's side map."""


@dataclass(frozen=True)
class Bipartition:
    """Two-sided node assignment with its cut and balance diagnostics."""

    side_of: dict[str, str]
    cut: int
    cut_weight: int
    balance: float

    def side_nodes(self, side: str) -> frozenset[str]:
        return frozenset(n for n, s in self.side_of.items() if s == side)

    def swapped(self) -> "Bipartition":
        """Same split with the X/Y labels exchanged."""
        flipped = {
            n: (SIDE_X if s == SIDE_Y else SIDE_Y) for n, s in self.side_of.items()
        }
        return Bipartition(flipped, self.cut, self.cut_weight, self.balance)


def cut_size(g: EndorsementGraph, p: Bipartition) -> int:
    """Number of edges whose endpoints sit on opposite sides."""
    _require_assigned(g, p)
    return sum(1 for (u, v) in g.edges if p.side_of[u] != p.side_of[v])


def cut_weight(g: EndorsementGraph, p: Bipartition) -> int:
    """Total weight of crossing edges."""
    _require_assigned(g, p)
    return sum(w for (u, v), w in g.edges.items() if p.side_of[u] != p.side_of[v])


def _require_assigned(g: EndorsementGraph, p: Bipartition) -> None:
    missing = g.nodes - p.side_of.keys()
    if missing:
        raise UnassignedNode(f"{len(missing)} nodes unassigned, e.g. {min(missing)!r}")


def make_bipartition(g: EndorsementGraph, side_of: dict[str, str]) -> Bipartition:
    """Assemble a Bipartition with cut/balance computed from the graph."""
    cut = 0
    cutw = 0
    for (u, v), w in g.edges.items():
        if side_of[u] != side_of[v]:
            cut += 1
            cutw += w
    n_x = sum(1 for s in side_of.values() if s == SIDE_X)
    balance = max(n_x, len(side_of) - n_x) / len(side_of) if side_of else 0.0
    return Bipartition(dict(side_of), cut, cutw, balance)


def max_side_nodes(n: int, eps: float) -> int:
    """Largest admissible side size: the eps bound, but never below ceil(n/2)."""
    return max(int((0.5 + eps) * n), (n + 1) // 2)


# --- index-level machinery -------------------------------------------------
#
# The multilevel passes work on a CSR-style view: nodes are 0..n-1 in sorted
# id order, vertex weights track how many original nodes a coarse vertex
# absorbed.


class _IndexGraph:
    __slots__ = ("n", "xadj", "adjncy", "adjwgt", "vwgt")

    def __init__(self, n, xadj, adjncy, adjwgt, vwgt):
        self.n = n
        self.xadj = xadj
        self.adjncy = adjncy
        self.adjwgt = adjwgt
        self.vwgt = vwgt


def _index_graph(g: EndorsementGraph, nodes: list[str]) -> _IndexGraph:
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for (u, v), w in g.edges.items():
        iu, iv = index[u], index[v]
        adj[iu].append((iv, w))
        adj[iv].append((iu, w))
    xadj = np.zeros(n + 1, dtype=np.int64)
    adjncy: list[int] = []
    adjwgt: list[int] = []
    for i in range(n):
        adj[i].sort()
        for j, w in adj[i]:
            adjncy.append(j)
            adjwgt.append(w)
        xadj[i + 1] = len(adjncy)
    return _IndexGraph(
        n,
        xadj,
        np.asarray(adjncy, dtype=np.int64),
        np.asarray(adjwgt, dtype=np.int64),
        np.ones(n, dtype=np.int64),
    )


def _heavy_edge_matching(
    ig: _IndexGraph, rng: np.random.Generator, max_vwgt: int
) -> tuple[np.ndarray, int]:
    """Match each vertex with its heaviest unmatched neighbor; returns a coarse map.

    Vertices left unpaired afterwards are absorbed into a neighbor's coarse
    group when the weight cap allows, which keeps star-like graphs (many
    leaves sharing few hubs) coarsening instead of stalling.
    """
    order = rng.permutation(ig.n)
    cmap = np.full(ig.n, -1, dtype=np.int64)
    n_coarse = 0
    for v in order:
        if cmap[v] >= 0:
            continue
        best = -1
        best_w = -1
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            u = int(ig.adjncy[idx])
            if cmap[u] >= 0:
                continue
            if ig.vwgt[v] + ig.vwgt[u] > max_vwgt:
                continue
            w = int(ig.adjwgt[idx])
            if w > best_w or (w == best_w and u < best):
                best, best_w = u, w
        if best >= 0:
            cmap[v] = n_coarse
            cmap[best] = n_coarse
            n_coarse += 1
    group_w = np.zeros(ig.n, dtype=np.int64)
    for v in range(ig.n):
        if cmap[v] >= 0:
            group_w[cmap[v]] += ig.vwgt[v]
    # parked[u] holds an unpaired vertex waiting at anchor u for a 2-hop partner
    parked = np.full(ig.n, -1, dtype=np.int64)
    for v in order:
        if cmap[v] >= 0:
            continue
        best = -1
        best_w = -1
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            u = int(ig.adjncy[idx])
            if cmap[u] < 0 or group_w[cmap[u]] + ig.vwgt[v] > max_vwgt:
                continue
            w = int(ig.adjwgt[idx])
            if w > best_w or (w == best_w and u < best):
                best, best_w = u, w
        if best >= 0:
            cmap[v] = cmap[best]
            group_w[cmap[v]] += ig.vwgt[v]
            continue
        partner = -1
        park_at = -1
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            u = int(ig.adjncy[idx])
            waiting = int(parked[u])
            if waiting >= 0 and ig.vwgt[v] + ig.vwgt[waiting] <= max_vwgt:
                partner = waiting
                parked[u] = -1
                break
            if waiting < 0 and park_at < 0:
                park_at = u
        if partner >= 0:
            cmap[v] = n_coarse
            cmap[partner] = n_coarse
            group_w[n_coarse] = ig.vwgt[v] + ig.vwgt[partner]
            n_coarse += 1
        elif park_at >= 0:
            parked[park_at] = v
    for v in order:
        if cmap[v] < 0:
            cmap[v] = n_coarse
            group_w[n_coarse] = ig.vwgt[v]
            n_coarse += 1
    return cmap, n_coarse


def _coarsen(ig: _IndexGraph, cmap: np.ndarray, n_coarse: int) -> _IndexGraph:
    vwgt = np.zeros(n_coarse, dtype=np.int64)
    for v in range(ig.n):
        vwgt[cmap[v]] += ig.vwgt[v]
    edges: dict[tuple[int, int], int] = {}
    for v in range(ig.n):
        cv = int(cmap[v])
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            u = int(ig.adjncy[idx])
            if u <= v:
                continue
            cu = int(cmap[u])
            if cu == cv:
                continue
            key = (cv, cu) if cv < cu else (cu, cv)
            edges[key] = edges.get(key, 0) + int(ig.adjwgt[idx])
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_coarse)]
    for (a, b), w in edges.items():
        adj[a].append((b, w))
        adj[b].append((a, w))
    xadj = np.zeros(n_coarse + 1, dtype=np.int64)
    adjncy: list[int] = []
    adjwgt: list[int] = []
    for i in range(n_coarse):
        adj[i].sort()
        for j, w in adj[i]:
            adjncy.append(j)
            adjwgt.append(w)
        xadj[i + 1] = len(adjncy)
    return _IndexGraph(
        n_coarse,
        xadj,
        np.asarray(adjncy, dtype=np.int64),
        np.asarray(adjwgt, dtype=np.int64),
        vwgt,
    )


def _side_weights(ig: _IndexGraph, side: np.ndarray) -> list[int]:
    return [int(ig.vwgt[side == 0].sum()), int(ig.vwgt[side == 1].sum())]


def _weighted_cut(ig: _IndexGraph, side: np.ndarray) -> int:
    total = 0
    for v in range(ig.n):
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            u = int(ig.adjncy[idx])
            if u > v and side[u] != side[v]:
                total += int(ig.adjwgt[idx])
    return total


def _grow_bisection(ig: _IndexGraph, w_max: int, start: int) -> np.ndarray | None:
    """Greedy graph growing: pull the most-attached vertex into side 0 until balanced."""
    side = np.ones(ig.n, dtype=np.int8)
    total = int(ig.vwgt.sum())
    need = total - w_max
    conn = np.zeros(ig.n, dtype=np.int64)
    in_x = np.zeros(ig.n, dtype=bool)
    w_x = 0

    def add(v: int) -> None:
        nonlocal w_x
        in_x[v] = True
        side[v] = 0
        w_x += int(ig.vwgt[v])
        for idx in range(ig.xadj[v], ig.xadj[v + 1]):
            conn[int(ig.adjncy[idx])] += int(ig.adjwgt[idx])

    add(start)
    while w_x < need:
        best = -1
        best_conn = -1
        for v in range(ig.n):
            if in_x[v] or w_x + int(ig.vwgt[v]) > w_max:
                continue
            if conn[v] > best_conn:
                best, best_conn = v, int(conn[v])
        if best < 0:
            return None
        add(best)
    return side


def _fm_refine(ig: _IndexGraph, side: np.ndarray, w_max: int) -> None:
    """Boundary FM passes: hill-climb with rollback to the best move prefix."""
    n = ig.n
    for _ in range(FM_MAX_PASSES):
        gain = np.zeros(n, dtype=np.int64)
        for v in range(n):
            for idx in range(ig.xadj[v], ig.xadj[v + 1]):
                u = int(ig.adjncy[idx])
                w = int(ig.adjwgt[idx])
                gain[v] += w if side[u] != side[v] else -w
        side_w = _side_weights(ig, side)
        locked = np.zeros(n, dtype=bool)
        # boundary seed: any vertex with at least one crossing edge
        heap: list[tuple[int, int]] = []
        for v in range(n):
            if _is_boundary(ig, side, v):
                heapq.heappush(heap, (-int(gain[v]), v))
        moves: list[int] = []
        cum = 0
        best_cum = 0
        best_len = 0
        while heap:
            neg_g, v = heapq.heappop(heap)
            if locked[v] or -neg_g != gain[v]:
                continue
            target = 1 - int(side[v])
            if side_w[target] + int(ig.vwgt[v]) > w_max:
                continue
            origin = int(side[v])
            side[v] = target
            side_w[origin] -= int(ig.vwgt[v])
            side_w[target] += int(ig.vwgt[v])
            locked[v] = True
            cum += int(gain[v])
            moves.append(v)
            if cum > best_cum:
                best_cum = cum
                best_len = len(moves)
            for idx in range(ig.xadj[v], ig.xadj[v + 1]):
                u = int(ig.adjncy[idx])
                if locked[u]:
                    continue
                w = int(ig.adjwgt[idx])
                gain[u] += 2 * w if side[u] == origin else -2 * w
                heapq.heappush(heap, (-int(gain[u]), u))
        for v in moves[best_len:]:
            side[v] = 1 - int(side[v])
        if best_cum <= 0:
            break


def _is_boundary(ig: _IndexGraph, side: np.ndarray, v: int) -> bool:
    for idx in range(ig.xadj[v], ig.xadj[v + 1]):
        if side[int(ig.adjncy[idx])] != side[v]:
            return True
    return False


def _initial_partition(
    ig: _IndexGraph, w_max: int, rng: np.random.Generator
) -> np.ndarray:
    degrees = ig.xadj[1:] - ig.xadj[:-1]
    if ig.n <= 16:
        starts = list(range(ig.n))
    else:
        starts = [0, int(np.argmax(degrees))]
        starts.extend(int(s) for s in rng.integers(0, ig.n, size=INIT_ATTEMPTS))
    best_side: np.ndarray | None = None
    best_key: tuple[int, int] | None = None
    for start in starts:
        side = _grow_bisection(ig, w_max, start)
        if side is None:
            continue
        _fm_refine(ig, side, w_max)
        side_w = _side_weights(ig, side)
        key = (_weighted_cut(ig, side), max(side_w))
        if best_key is None or key < best_key:
            best_side, best_key = side.copy(), key
    if best_side is None:
        raise PartitionError("no feasible initial bisection found")
    return best_side


def bisect(g: EndorsementGraph, eps: float = 0.05, seed: int = 0) -> Bipartition:
    """Split a connected graph into two near-equal sides with small edge cut.

    eps is the node-count imbalance tolerance in [0, 0.1]; the admissible
    side size never drops below ceil(n/2), so odd orders stay feasible.
    """
    if not 0.0 <= eps <= 0.1:
        raise ValueError(f"eps must be within [0, 0.1], got {eps}")
    if g.node_count < 2:
        raise TooSmall(f"need at least 2 nodes, got {g.node_count}")
    if not is_connected(g):
        raise DisconnectedGraph("bisect requires a connected graph")

    nodes = sorted(g.nodes)
    rng = np.random.default_rng(seed)
    levels = [_index_graph(g, nodes)]
    cmaps: list[np.ndarray] = []
    total = levels[0].n
    max_vwgt = max(2, -(-3 * total // (2 * COARSEN_TARGET)))
    while levels[-1].n > COARSEN_TARGET:
        cmap, n_coarse = _heavy_edge_matching(levels[-1], rng, max_vwgt)
        if n_coarse >= 0.95 * levels[-1].n:
            break
        cmaps.append(cmap)
        levels.append(_coarsen(levels[-1], cmap, n_coarse))

    w_max = max_side_nodes(total, eps)
    side = _initial_partition(levels[-1], w_max, rng)
    for level in range(len(cmaps) - 1, -1, -1):
        side = side[cmaps[level]]
        _fm_refine(levels[level], side, w_max)

    # anchor labels: the side holding the smallest node id is X
    label_of = (SIDE_X, SIDE_Y) if side[0] == 0 else (SIDE_Y, SIDE_X)
    side_of = {node: label_of[int(side[i])] for i, node in enumerate(nodes)}
    return make_bipartition(g, side_of)
