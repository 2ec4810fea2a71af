"""Random-walk controversy scoring on a bipartitioned endorsement graph.

The score contrasts absorption probabilities of restarting random walks:
walks start uniformly inside one side, restart to that start distribution
with probability alpha, otherwise step to a uniform random neighbor, and
terminate on entering any of the two sides' high-degree absorbing sets.
With p_ab the probability that a walk started in side a is absorbed in
side b's set,

    score = p_xx * p_yy - p_xy * p_yx

which lies in [-1, 1] and approaches 1 when walkers almost never cross.
The exact figures come from solving the absorbing-chain linear system on
the transient nodes; a Monte Carlo simulator provides an independent
estimate of the same quantity for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .graph import EndorsementGraph, is_connected
from .partition import SIDE_X, SIDE_Y, Bipartition


class RwcError(Exception):
    """Base class for controversy-scoring failures."""


class SideTooSmall(RwcError):
    """A side must hold more than k_top nodes to leave non-absorbing starters."""


class DegenerateStart(RwcError):
    """Every node of the start side is absorbing; no start distribution exists."""


class NoConvergence(RwcError):
    """The iterative solve missed the tolerance within max_iter sweeps."""


@dataclass(frozen=True)
class RwcConfig:
    """Walk parameters: absorbing-set size, restart probability, solver limits."""

    k_top: int = 10
    restart_prob: float = 0.15
    solver_tol: float = 1e-10
    max_iter: int = 100_000
    weighted_walk: bool = False

    def __post_init__(self) -> None:
        if self.k_top < 1:
            raise ValueError(f"k_top must be >= 1, got {self.k_top}")
        if not 0.0 < self.restart_prob < 1.0:
            raise ValueError(f"restart_prob must be in (0,1), got {self.restart_prob}")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class RwcResult:
    """The four absorption probabilities and the combined score."""

    p_xx: float
    p_xy: float
    p_yy: float
    p_yx: float
    score: float


def high_degree_nodes(
    g: EndorsementGraph, side: str, p: Bipartition, k_top: int
) -> frozenset[str]:
    """The k_top nodes of a side with the highest full-graph degree.

    Ties break toward the lexicographically smaller node id, so the set is
    deterministic.
    """
    side_nodes = [n for n in g.nodes if p.side_of.get(n) == side]
    if len(side_nodes) <= k_top:
        raise SideTooSmall(
            f"side {side} has {len(side_nodes)} nodes, need more than k_top={k_top}"
        )
    degree = g.degrees()
    side_nodes.sort(key=lambda n: (-degree[n], n))
    return frozenset(side_nodes[:k_top])


class _WalkChain:
    """Index-space view of the absorbing walk shared by solver and simulator."""

    def __init__(self, g: EndorsementGraph, p: Bipartition, cfg: RwcConfig):
        self.cfg = cfg
        self.nodes = sorted(g.nodes)
        index = {node: i for i, node in enumerate(self.nodes)}
        n = len(self.nodes)

        absorb_x = high_degree_nodes(g, SIDE_X, p, cfg.k_top)
        absorb_y = high_degree_nodes(g, SIDE_Y, p, cfg.k_top)
        self.absorb_label = np.zeros(n, dtype=np.int8)  # 0 transient, 1 in X+, 2 in Y+
        for node in absorb_x:
            self.absorb_label[index[node]] = 1
        for node in absorb_y:
            self.absorb_label[index[node]] = 2

        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for (u, v), w in g.edges.items():
            iu, iv = index[u], index[v]
            adj[iu].append((iv, w))
            adj[iv].append((iu, w))
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices: list[int] = []
        weights: list[int] = []
        for i in range(n):
            adj[i].sort()
            for j, w in adj[i]:
                indices.append(j)
                weights.append(w)
            indptr[i + 1] = len(indices)
        self.indptr = indptr
        self.indices = np.asarray(indices, dtype=np.int64)
        if cfg.weighted_walk:
            self.step_w = np.asarray(weights, dtype=np.float64)
        else:
            self.step_w = np.ones(len(indices), dtype=np.float64)
        self.out_total = np.zeros(n)
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            if hi > lo:
                self.out_total[i] = self.step_w[lo:hi].sum()

        side_x = np.zeros(n, dtype=bool)
        for node, s in p.side_of.items():
            if node in index and s == SIDE_X:
                side_x[index[node]] = True
        self.start_x = np.flatnonzero(side_x & (self.absorb_label == 0))
        self.start_y = np.flatnonzero(~side_x & (self.absorb_label == 0))
        if self.start_x.size == 0 or self.start_y.size == 0:
            raise DegenerateStart("a side consists solely of absorbing nodes")

        self.transient = np.flatnonzero(self.absorb_label == 0)
        self.t_index = np.full(n, -1, dtype=np.int64)
        self.t_index[self.transient] = np.arange(self.transient.size)

    def transition_blocks(self) -> tuple[csr_matrix, np.ndarray, np.ndarray]:
        """Row-stochastic pieces over transient rows: to-transient, to-X+, to-Y+."""
        t = self.transient.size
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        b_x = np.zeros(t)
        b_y = np.zeros(t)
        for ti, v in enumerate(self.transient):
            lo, hi = self.indptr[v], self.indptr[v + 1]
            total = self.out_total[v]
            for idx in range(lo, hi):
                u = int(self.indices[idx])
                prob = self.step_w[idx] / total
                label = self.absorb_label[u]
                if label == 0:
                    rows.append(ti)
                    cols.append(int(self.t_index[u]))
                    vals.append(prob)
                elif label == 1:
                    b_x[ti] += prob
                else:
                    b_y[ti] += prob
        matrix = csr_matrix((vals, (rows, cols)), shape=(t, t))
        return matrix, b_x, b_y


def _solve_side(
    chain: _WalkChain,
    matrix: csr_matrix,
    b_same: np.ndarray,
    b_cross: np.ndarray,
    start: np.ndarray,
) -> tuple[float, float]:
    """Fixed-point solve of the restart-augmented absorbing system for one side."""
    cfg = chain.cfg
    alpha = cfg.restart_prob
    start_t = chain.t_index[start]
    h_same = np.zeros(b_same.size)
    h_cross = np.zeros(b_cross.size)
    prev_delta: float | None = None
    for _ in range(cfg.max_iter):
        mass_same = float(h_same[start_t].mean())
        mass_cross = float(h_cross[start_t].mean())
        new_same = alpha * mass_same + (1.0 - alpha) * (matrix.dot(h_same) + b_same)
        new_cross = alpha * mass_cross + (1.0 - alpha) * (matrix.dot(h_cross) + b_cross)
        delta = max(
            float(np.max(np.abs(new_same - h_same))),
            float(np.max(np.abs(new_cross - h_cross))),
        )
        h_same, h_cross = new_same, new_cross
        if delta == 0.0:
            break
        if prev_delta is not None and delta < prev_delta:
            # geometric tail bound: remaining change <= delta * r / (1 - r)
            ratio = delta / prev_delta
            if delta * ratio / (1.0 - ratio) < cfg.solver_tol:
                break
        prev_delta = delta
    else:
        raise NoConvergence(f"no convergence within {cfg.max_iter} iterations")
    return float(h_same[start_t].mean()), float(h_cross[start_t].mean())


def absorption_probabilities(
    g: EndorsementGraph, p: Bipartition, cfg: RwcConfig, start_side: str
) -> tuple[float, float]:
    """Exact (p_same, p_cross) for walks started uniformly in start_side."""
    chain = _WalkChain(g, p, cfg)
    matrix, b_x, b_y = chain.transition_blocks()
    if start_side == SIDE_X:
        return _solve_side(chain, matrix, b_x, b_y, chain.start_x)
    if start_side == SIDE_Y:
        return _solve_side(chain, matrix, b_y, b_x, chain.start_y)
    raise ValueError(f"start_side must be {SIDE_X!r} or {SIDE_Y!r}, got {start_side!r}")


def rwc_score(g: EndorsementGraph, p: Bipartition, cfg: RwcConfig | None = None) -> RwcResult:
    """Exact controversy score of a partitioned connected graph."""
    cfg = cfg or RwcConfig()
    if not is_connected(g):
        raise RwcError("controversy scoring requires a connected graph")
    chain = _WalkChain(g, p, cfg)
    matrix, b_x, b_y = chain.transition_blocks()
    p_xx, p_xy = _solve_side(chain, matrix, b_x, b_y, chain.start_x)
    p_yy, p_yx = _solve_side(chain, matrix, b_y, b_x, chain.start_y)
    return RwcResult(p_xx, p_xy, p_yy, p_yx, p_xx * p_yy - p_xy * p_yx)


_SHARD_WALKS = 25_000


def _simulate_side(
    chain: _WalkChain, start: np.ndarray, n_walks: int, seed_key: tuple[int, int]
) -> tuple[int, int]:
    """Count absorptions (same-as-X+, same-as-Y+) over n_walks simulated walks."""
    alpha = chain.cfg.restart_prob
    weighted = chain.cfg.weighted_walk
    indptr, indices = chain.indptr, chain.indices
    degree = (indptr[1:] - indptr[:-1]).astype(np.int64)
    if weighted:
        cum_w = np.cumsum(chain.step_w)
        base_w = np.concatenate(([0.0], cum_w))[indptr[:-1]]
    label = chain.absorb_label
    hit_x = 0
    hit_y = 0
    remaining = n_walks
    shard_index = 0
    while remaining > 0:
        count = min(_SHARD_WALKS, remaining)
        remaining -= count
        rng = np.random.default_rng((*seed_key, shard_index))
        shard_index += 1
        pos = start[rng.integers(0, start.size, count)]
        while pos.size:
            restart = rng.random(pos.size) < alpha
            n_restart = int(restart.sum())
            if n_restart:
                pos[restart] = start[rng.integers(0, start.size, n_restart)]
            movers = np.flatnonzero(~restart)
            if movers.size:
                at = pos[movers]
                if weighted:
                    targets = base_w[at] + rng.random(movers.size) * chain.out_total[at]
                    picked = np.searchsorted(cum_w, targets, side="right")
                else:
                    picked = indptr[at] + rng.integers(0, degree[at])
                pos[movers] = indices[picked]
            absorbed = label[pos]
            hit_x += int((absorbed == 1).sum())
            hit_y += int((absorbed == 2).sum())
            pos = pos[absorbed == 0]
    return hit_x, hit_y


def rwc_monte_carlo(
    g: EndorsementGraph,
    p: Bipartition,
    cfg: RwcConfig | None = None,
    n_walks: int = 100_000,
    seed: int = 0,
) -> RwcResult:
    """Monte Carlo estimate of the controversy score (n_walks per start side).

    Walk semantics match the exact solver; shards use substreams derived
    from (seed, side, shard), so a fixed seed reproduces bit-identical
    estimates regardless of shard merging order.
    """
    cfg = cfg or RwcConfig()
    if n_walks < 1:
        raise ValueError(f"n_walks must be >= 1, got {n_walks}")
    if not is_connected(g):
        raise RwcError("controversy scoring requires a connected graph")
    chain = _WalkChain(g, p, cfg)
    x_same, x_cross = _simulate_side(chain, chain.start_x, n_walks, (seed, 0))
    y_cross, y_same = _simulate_side(chain, chain.start_y, n_walks, (seed, 1))
    p_xx = x_same / n_walks
    p_xy = x_cross / n_walks
    p_yy = y_same / n_walks
    p_yx = y_cross / n_walks
    return RwcResult(p_xx, p_xy, p_yy, p_yx, p_xx * p_yy - p_xy * p_yx)
