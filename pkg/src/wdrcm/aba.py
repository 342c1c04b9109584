"""Age-based spatial preferential attachment on the unit torus.

Vertices arrive at unit rate, land uniformly, and each newcomer born at time
t links to an existing vertex born at s < t at distance r with probability
rho(t^{1-gamma} s^gamma r^d / beta): old vertices keep collecting young
neighbours forever.  Rescaling positions by t^{1/d} and ages by 1/t maps the
time-t snapshot onto the stationary model on the torus of volume t with the
same connection rule, which is what the trajectory statistics probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clusters import UnionFind
from .model import ModelParams, Torus, profile_eval
from .rng import STREAM_ABA, STREAM_EDGE, STREAM_RETENTION, derive_seed, generator, pair_uniform
from .sampling import MarkedGraph, _dist_pow_d


@dataclass(frozen=True)
class GrowingGraph:
    """Arrival-ordered vertices on the unit torus with creation-tagged edges.

    ``edges[k] = (i, j)`` with i < j; the edge was created at ``birth_times[j]``
    (a newborn only links to strictly older vertices).  Edges are stored in
    creation order, so the graph at time t is a prefix in both arrays.
    """

    birth_times: np.ndarray
    positions: np.ndarray
    edges: np.ndarray
    t_end: float
    params: ModelParams
    seed: int

    @property
    def n_vertices(self) -> int:
        return self.birth_times.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        if self.edges.size:
            deg += np.bincount(self.edges[:, 0], minlength=self.n_vertices)
            deg += np.bincount(self.edges[:, 1], minlength=self.n_vertices)
        return deg


def _torus1_dist_pow_d(pos_old: np.ndarray, pos_new: np.ndarray, d: int) -> np.ndarray:
    dx = pos_old - pos_new[None, :]
    dx -= np.round(dx)
    return _dist_pow_d(np.sum(dx * dx, axis=1), d)


def grow_aba(t_end: float, params: ModelParams, seed: int) -> GrowingGraph:
    """Simulate arrivals up to t_end; each newcomer links to each existing
    vertex independently with the age-based connection probability."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    rng = generator(seed, STREAM_ABA)
    times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0)
        if t > t_end:
            break
        times.append(t)
    n = len(times)
    births = np.asarray(times)
    positions = 0.5 - rng.random((n, params.d))
    edge_stream = derive_seed(seed, STREAM_EDGE)
    gamma, beta = params.gamma, params.beta
    ei: list[np.ndarray] = []
    ej: list[np.ndarray] = []
    for k in range(1, n):
        rd = _torus1_dist_pow_d(positions[:k], positions[k], params.d)
        arg = births[k] ** (1.0 - gamma) * births[:k] ** gamma * rd / beta
        prob = profile_eval(params.profile, arg, params)
        u = pair_uniform(edge_stream, np.arange(k, dtype=np.uint64),
                         np.full(k, k, dtype=np.uint64))
        hit = np.nonzero(u <= prob)[0]
        if hit.size:
            ei.append(hit.astype(np.int64))
            ej.append(np.full(hit.size, k, dtype=np.int64))
    if ei:
        edges = np.stack([np.concatenate(ei), np.concatenate(ej)], axis=1)
        order = np.argsort(edges[:, 1], kind="stable")
        edges = edges[order]
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return GrowingGraph(birth_times=births, positions=positions, edges=edges,
                        t_end=t_end, params=params, seed=seed)


def rescale_map(graph: GrowingGraph, t: float) -> MarkedGraph:
    """Map (x, s) to (t^{1/d} x, s/t): positions onto the torus of volume t,
    birth times onto marks in (0, 1].  Edges carry over unchanged."""
    if t <= 0:
        raise ValueError("t must be positive")
    if graph.n_vertices and graph.birth_times.max() > t:
        raise ValueError("all birth times must be <= t")
    domain = Torus(d=graph.params.d, volume=t)
    scale = t ** (1.0 / graph.params.d)
    return MarkedGraph(domain=domain, positions=graph.positions * scale,
                       marks=graph.birth_times / t, edges=graph.edges,
                       params=graph.params, seed=graph.seed)


def giant_fraction_trajectory(params: ModelParams, p: float, t_grid: list[float],
                              replications: int, seed: int) -> list[dict]:
    """Largest-component fraction of the percolated graph along a time grid.

    One growth per replication; snapshots are prefixes, retention variates are
    shared across the grid, and components are tracked incrementally.  Also
    reports the fraction sharing a component with the oldest vertex and the
    fraction in components of size at most k for k in {1, 10, 100}.
    """
    if not t_grid or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be nonempty and strictly increasing")
    rows = []
    for rep in range(replications):
        rep_seed = derive_seed(seed, rep)
        graph = grow_aba(t_grid[-1], params, rep_seed)
        births = graph.birth_times
        edges = graph.edges
        if edges.size:
            ret_stream = derive_seed(rep_seed, STREAM_RETENTION)
            kept = pair_uniform(ret_stream, edges[:, 0], edges[:, 1]) <= p
        else:
            kept = np.zeros(0, dtype=bool)
        uf = UnionFind(graph.n_vertices)
        next_edge = 0
        for t in t_grid:
            n_t = int(np.searchsorted(births, t, side="right"))
            while next_edge < edges.shape[0] and edges[next_edge, 1] < n_t:
                if kept[next_edge]:
                    uf.union(int(edges[next_edge, 0]), int(edges[next_edge, 1]))
                next_edge += 1
            n_kept = int(np.count_nonzero(kept[:next_edge]))
            if n_t == 0:
                rows.append(_trajectory_row(params, p, t, rep_seed, 0, 0,
                                            0.0, 0.0, 1.0, 1.0, 1.0))
                continue
            comp_sizes = np.fromiter(
                (uf.size[uf.find(v)] for v in range(n_t)), dtype=np.int64, count=n_t)
            largest = int(comp_sizes.max())
            oldest = int(comp_sizes[0])
            xi = {k: float(np.mean(comp_sizes <= k)) for k in (1, 10, 100)}
            rows.append(_trajectory_row(params, p, t, rep_seed, n_t, n_kept,
                                        largest / n_t, oldest / n_t,
                                        xi[1], xi[10], xi[100]))
    return rows


def _trajectory_row(params, p, t, rep_seed, n_t, n_edges, largest, oldest,
                    xi1, xi10, xi100) -> dict:
    return {
        "gamma": params.gamma, "delta": params.delta, "beta": params.beta,
        "p": p, "d": params.d, "t": t, "seed": rep_seed, "n_vertices": n_t,
        "n_edges": n_edges, "largest_fraction": largest,
        "oldest_component_fraction": oldest, "xi_1": xi1, "xi_10": xi10,
        "xi_100": xi100,
    }


@dataclass(frozen=True)
class TailFit:
    exponent: float
    slope: float
    n_points: int
    k_min: int
    k_max: int
    reliable: bool


def degree_tail_fit(graph, min_vertices: int = 10_000, trim: int = 20) -> TailFit:
    """Power-law exponent from a log-log regression of the complementary CDF
    over the top decade of degrees.

    The decade is anchored at the ``trim``-th largest degree rather than the
    absolute maximum: above that level the empirical ccdf is a handful of
    extreme order statistics whose flatness would bias the slope.  The ccdf is
    evaluated at log-spaced degree values across the decade; a fitted slope m
    gives exponent 1 - m.  Degenerate degree sequences (no spread in the top
    decade) are flagged unreliable.
    """
    degs = np.asarray(graph.degrees(), dtype=np.int64)
    if degs.shape[0] < min_vertices:
        raise ValueError(f"need at least {min_vertices} vertices, got {degs.shape[0]}")
    sorted_degs = np.sort(degs)
    k_hi = int(sorted_degs[-min(trim, degs.shape[0])])
    k_lo = max(1, int(math.ceil(k_hi / 10.0)))
    ks = np.unique(np.round(np.logspace(math.log10(k_lo),
                                        math.log10(max(k_hi, k_lo + 1)),
                                        24)).astype(np.int64))
    ks = ks[(ks >= k_lo) & (ks <= k_hi)]
    ccdf = 1.0 - np.searchsorted(sorted_degs, ks, side="left") / degs.shape[0]
    keep = ccdf > 0
    ks, ccdf = ks[keep], ccdf[keep]
    reliable = ks.size >= 5 and k_hi >= 20
    if ks.size < 2:
        return TailFit(exponent=float("nan"), slope=float("nan"),
                       n_points=int(ks.size), k_min=k_lo, k_max=k_hi,
                       reliable=False)
    slope, _ = np.polyfit(np.log(ks), np.log(ccdf), 1)
    return TailFit(exponent=float(1.0 - slope), slope=float(slope),
                   n_points=int(ks.size), k_min=k_lo, k_max=k_hi,
                   reliable=bool(reliable))
