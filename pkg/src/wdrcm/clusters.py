"""Cluster analysis and finite-size percolation experiments.

The infinite-volume percolation event is approximated on a finite torus by
"the origin's cluster reaches radius R" (default R = L/4), swept over window
sizes L.  In the subcritical regime the reach frequency collapses as L grows;
in the supercritical regime it stabilizes.  All replications share one p-grid
through nested retention variates, which makes reach monotone in p replication
by replication (monotone coupling), not just on average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Box, ModelParams, Torus
from .rng import STREAM_RETENTION, derive_seed, pair_uniform
from .sampling import MarkedGraph, add_palm_origin, build_graph_exact, sample_ppp


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]


@dataclass(frozen=True)
class ClusterReport:
    """Component labelling of a marked graph.

    ``component_id[v]`` is the smallest vertex index in v's component, so the
    labelling is invariant under permutations of the edge list.  Origin fields
    are None for unrooted graphs.
    """

    component_id: np.ndarray
    sizes: np.ndarray
    largest_size: int
    origin_component_size: int | None = None
    origin_reach: float | None = None
    wraps: bool | None = None


def connected_components(graph: MarkedGraph) -> ClusterReport:
    n = graph.n_vertices
    uf = UnionFind(n)
    for a, b in graph.edges:
        uf.union(int(a), int(b))
    roots = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    # canonical label: smallest member index of each component
    canon = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        r = roots[i]
        if canon[r] < 0:
            canon[r] = i
    component_id = canon[roots]
    sizes = np.bincount(component_id, minlength=n)[np.unique(component_id)] \
        if n else np.zeros(0, dtype=np.int64)
    largest = int(sizes.max()) if sizes.size else 0
    report = ClusterReport(component_id=component_id, sizes=sizes,
                           largest_size=largest)
    if graph.root_index is not None:
        stats = origin_cluster_stats(graph, R=None)
        report = ClusterReport(component_id=component_id, sizes=sizes,
                               largest_size=largest,
                               origin_component_size=stats.size,
                               origin_reach=stats.reach, wraps=stats.wraps)
    return report


@dataclass(frozen=True)
class OriginStats:
    size: int
    reach: float
    reaches_R: bool
    wraps: bool


def origin_cluster_stats(graph: MarkedGraph, R: float | None) -> OriginStats:
    """Size, maximal distance from the origin, and torus winding of the root's
    component.  ``reaches_R`` is true iff some member lies at distance >= R."""
    if graph.root_index is None:
        raise ValueError("origin_cluster_stats requires a rooted graph")
    domain = graph.domain
    if R is not None and isinstance(domain, Torus) and R > domain.diameter / 2.0:
        raise ValueError(
            f"R = {R} exceeds half the torus diameter {domain.diameter / 2.0}")
    root = graph.root_index
    n = graph.n_vertices
    adj = [[] for _ in range(n)]
    for a, b in graph.edges:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    # BFS with unwrapped coordinates to detect winding around the torus
    wrap = isinstance(domain, Torus)
    side = domain.side if wrap else 0.0
    visited = {root: np.zeros(graph.positions.shape[1])}
    queue = [root]
    wraps = False
    while queue:
        v = queue.pop()
        uv = visited[v]
        for w in adj[v]:
            disp = graph.positions[w] - graph.positions[v]
            if wrap:
                disp = disp - side * np.round(disp / side)
            uw = uv + disp
            if w not in visited:
                visited[w] = uw
                queue.append(w)
            elif wrap and not wraps:
                if np.any(np.abs(visited[w] - uw) > side / 2.0):
                    wraps = True
    members = np.fromiter(visited.keys(), dtype=np.int64, count=len(visited))
    dists = domain.distance(graph.positions[members],
                            graph.positions[root][None, :])
    reach = float(dists.max()) if members.size else 0.0
    reaches = bool(R is not None and reach >= R)
    return OriginStats(size=len(visited), reach=reach, reaches_R=reaches,
                       wraps=wraps)


def small_component_fraction(graph: MarkedGraph, k: int) -> float:
    """Fraction of vertices whose component has size at most k."""
    if graph.n_vertices == 0:
        raise ValueError("empty graph")
    report = connected_components(graph)
    size_of = np.bincount(report.component_id, minlength=graph.n_vertices)
    per_vertex = size_of[report.component_id]
    return float(np.mean(per_vertex <= k))


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval; well-behaved at frequencies near 0 and 1."""
    if n == 0:
        return 0.0, 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return phat, lo, hi


# ---------------------------------------------------------------------------
# theta(p) estimation and phase sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    replications: int
    successes: int


def _rooted_phi_graph(params: ModelParams, L: float, rep_seed: int,
                      domain_kind: str = "torus") -> MarkedGraph:
    """Palm-rooted potential-edge graph (retention not yet applied) on a
    window of side L.

    The torus is the default (wraparound removes boundary bias); the box is
    kept for boundary-reach proxies, where reaching radius R close to L/2
    means touching the boundary shell.
    """
    if domain_kind == "torus":
        domain = Torus(d=params.d, volume=L ** params.d)
    elif domain_kind == "box":
        domain = Box(d=params.d, side=L)
    else:
        raise ValueError(f"unknown domain kind {domain_kind!r}")
    pts = sample_ppp(domain, params, rep_seed)
    pts = add_palm_origin(pts, rep_seed, d=params.d)
    graph = build_graph_exact(pts, params, domain, rep_seed,
                              combine_retention=False)
    return MarkedGraph(domain=domain, positions=graph.positions,
                       marks=graph.marks, edges=graph.edges, params=params,
                       seed=rep_seed, root_index=0)


def _retained(graph: MarkedGraph, p: float, rep_seed: int) -> MarkedGraph:
    """Edge retention with variates shared across all p (nested coupling)."""
    if graph.n_edges == 0:
        return graph
    stream = derive_seed(rep_seed, STREAM_RETENTION)
    u = pair_uniform(stream, graph.edges[:, 0], graph.edges[:, 1])
    return MarkedGraph(domain=graph.domain, positions=graph.positions,
                       marks=graph.marks, edges=graph.edges[u <= p],
                       params=graph.params, seed=graph.seed,
                       root_index=graph.root_index)


def theta_estimate(params: ModelParams, L: float, R: float | None,
                   replications: int, seed: int,
                   domain_kind: str = "torus") -> ThetaEstimate:
    """Fraction of replications in which the Palm origin's cluster reaches
    radius R (default L/4) on a window of side L, with a 95% Wilson CI."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if R is None:
        R = L / 4.0
    if not R < L / 2.0:
        raise ValueError(f"R = {R} must be below L/2 = {L / 2.0}")
    successes = 0
    for rep in range(replications):
        rep_seed = derive_seed(seed, 0, rep)
        graph = _rooted_phi_graph(params, L, rep_seed, domain_kind)
        graph = _retained(graph, params.p, rep_seed)
        stats = origin_cluster_stats(graph, R)
        successes += int(stats.reaches_R)
    phat, lo, hi = wilson_interval(successes, replications)
    return ThetaEstimate(estimate=phat, ci_low=lo, ci_high=hi,
                         replications=replications, successes=successes)


def theta_replication_rows(params: ModelParams, L: float, R: float | None,
                           replications: int, seed: int,
                           domain_kind: str = "torus") -> list[dict]:
    """One result row per replication (the CSV payload of the theta command)."""
    if R is None:
        R = L / 4.0
    rows = []
    for rep in range(replications):
        rep_seed = derive_seed(seed, 0, rep)
        graph = _rooted_phi_graph(params, L, rep_seed, domain_kind)
        graph = _retained(graph, params.p, rep_seed)
        stats = origin_cluster_stats(graph, R)
        report = connected_components(graph)
        rows.append(_result_row(params, params.p, L, R, rep_seed, graph,
                                report, stats, domain_kind))
    return rows


def _result_row(params: ModelParams, p: float, L: float, R: float,
                rep_seed: int, graph: MarkedGraph, report: ClusterReport,
                stats: OriginStats, domain_kind: str) -> dict:
    return {
        "gamma": params.gamma, "delta": params.delta, "beta": params.beta,
        "p": p, "d": params.d, "domain": domain_kind, "L": L, "R": R,
        "seed": rep_seed, "n_vertices": graph.n_vertices,
        "n_edges": graph.n_edges, "largest_cluster": report.largest_size,
        "origin_size": stats.size, "origin_reach": stats.reach,
        "reaches_R": int(stats.reaches_R), "wraps": int(stats.wraps),
    }


@dataclass(frozen=True)
class SweepResult:
    rows: list[dict]
    summary: list[dict]
    transition_window: tuple[float, float] | None


def pc_sweep(params: ModelParams, p_grid: list[float], L_list: list[float],
             replications: int, seed: int, R_fraction: float = 0.25,
             domain_kind: str = "torus") -> SweepResult:
    """Reach-frequency curves over a p-grid for several window sizes.

    Per (L, replication) one potential-edge graph is sampled; the whole p-grid
    is evaluated on it with shared retention variates, so reach flags are
    monotone in p within each replication.  The transition window is bracketed
    by the crossings of the frequency-vs-p curves of consecutive L values.
    """
    if not p_grid or not L_list:
        raise ValueError("p_grid and L_list must be nonempty")
    rows: list[dict] = []
    freq: dict[tuple[float, float], int] = {}
    for li, L in enumerate(L_list):
        R = R_fraction * L
        for rep in range(replications):
            rep_seed = derive_seed(seed, li, rep)
            base = _rooted_phi_graph(params, L, rep_seed, domain_kind)
            for p in p_grid:
                graph = _retained(base, p, rep_seed)
                stats = origin_cluster_stats(graph, R)
                report = connected_components(graph)
                rows.append(_result_row(params, p, L, R, rep_seed, graph,
                                        report, stats, domain_kind))
                freq[(p, L)] = freq.get((p, L), 0) + int(stats.reaches_R)
    summary = []
    for L in L_list:
        for p in p_grid:
            phat, lo, hi = wilson_interval(freq[(p, L)], replications)
            summary.append({
                "gamma": params.gamma, "delta": params.delta,
                "beta": params.beta, "p": p, "d": params.d,
                "domain": domain_kind,
                "L": L, "R": R_fraction * L, "replications": replications,
                "reach_freq": phat, "ci_low": lo, "ci_high": hi,
            })
    window = _crossing_window(summary, p_grid, L_list)
    return SweepResult(rows=rows, summary=summary, transition_window=window)


def _crossing_window(summary: list[dict], p_grid: list[float],
                     L_list: list[float]) -> tuple[float, float] | None:
    """Bracket the p where consecutive-L frequency curves cross."""
    if len(L_list) < 2 or len(p_grid) < 2:
        return None
    curves = {L: [r["reach_freq"] for r in summary if r["L"] == L]
              for L in L_list}
    crossings = []
    ps = sorted(p_grid)
    for La, Lb in zip(L_list, L_list[1:]):
        diff = [curves[La][i] - curves[Lb][i] for i in range(len(ps))]
        for i in range(len(ps) - 1):
            if diff[i] == 0.0 and diff[i + 1] == 0.0:
                continue
            if diff[i] * diff[i + 1] <= 0 and (diff[i] != 0 or diff[i + 1] != 0):
                t = abs(diff[i]) / (abs(diff[i]) + abs(diff[i + 1]))
                crossings.append(ps[i] + t * (ps[i + 1] - ps[i]))
                break
    if not crossings:
        return None
    return min(crossings), max(crossings)
