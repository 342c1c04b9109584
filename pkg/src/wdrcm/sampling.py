"""Graphical construction: marked Poisson point sets and exact edge sampling.

Each unordered vertex pair {i, j} owns one uniform variate produced by the
counter-based generator keyed on (stream, i, j); an edge is present exactly
when that variate is at most the connection probability (times p under
combined retention sampling).  Results are therefore independent of the
enumeration order and reproducible from the seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Box,
    Kernel,
    ModelParams,
    Profile,
    SpatialDomain,
    Torus,
    Vertex,
    indicator_support,
    kernel_eval,
    polynomial_knee,
)
from .rng import (
    STREAM_EDGE,
    STREAM_PALM,
    STREAM_PPP,
    STREAM_RETENTION,
    derive_seed,
    generator,
    pair_uniform,
)

try:
    from . import _fastpath
except ImportError:  # pragma: no cover - numba not installed
    _fastpath = None


@dataclass(frozen=True)
class PointSet:
    """Columnar vertex storage: positions (n, d) and marks (n,) in (0, 1]."""

    positions: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        marks = np.asarray(self.marks, dtype=float)
        if pos.shape[0] != marks.shape[0]:
            raise ValueError("positions and marks must have equal length")
        if marks.size and (marks.min() <= 0.0 or marks.max() > 1.0):
            raise ValueError("marks must lie in (0, 1]")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return self.marks.shape[0]

    def vertex(self, i: int) -> Vertex:
        return Vertex(position=self.positions[i], mark=float(self.marks[i]))


def sample_ppp(domain: SpatialDomain, params: ModelParams, seed: int) -> PointSet:
    """Marked Poisson point set on the domain: count ~ Poisson(intensity * V),
    positions i.i.d. uniform, marks i.i.d. uniform on (0, 1]."""
    vol = domain.volume
    if vol <= 0:
        raise ValueError("domain volume must be positive")
    rng = generator(seed, STREAM_PPP)
    n = int(rng.poisson(params.intensity * vol))
    side = domain.side
    positions = side * (0.5 - rng.random((n, domain.d)))
    marks = 1.0 - rng.random(n)
    return PointSet(positions=positions.reshape(n, domain.d), marks=marks)


def add_palm_origin(points: PointSet, seed: int, d: int | None = None) -> PointSet:
    """Insert a root vertex at the spatial origin with a fresh uniform mark.

    The root sits at index 0; all other vertices keep their relative order.
    """
    if d is None:
        d = points.positions.shape[1] if len(points) else 1
    mark = 1.0 - generator(seed, STREAM_PALM).random()
    positions = np.vstack([np.zeros((1, d)), points.positions.reshape(len(points), d)])
    marks = np.concatenate([[mark], points.marks])
    return PointSet(positions=positions, marks=marks)


# ---------------------------------------------------------------------------
# Marked graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkedGraph:
    """Immutable vertex list plus a realized edge sample.

    ``edges`` is an (m, 2) int array in canonical order: i < j within each row,
    rows sorted lexicographically.  ``root_index`` is set for Palm (rooted)
    graphs and refers to the vertex pinned at the origin.
    """

    domain: SpatialDomain
    positions: np.ndarray
    marks: np.ndarray
    edges: np.ndarray
    params: ModelParams
    seed: int
    root_index: int | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        marks = np.asarray(self.marks, dtype=float)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n = marks.shape[0]
        if marks.size and (marks.min() <= 0.0 or marks.max() > 1.0):
            raise ValueError("marks must lie in (0, 1]")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoints must index the vertex list")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if np.any(lo == hi):
                raise ValueError("self-loops are not allowed")
            edges = np.stack([lo, hi], axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if np.any((np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)):
                raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "edges", edges)
        if self.root_index is not None and not (0 <= self.root_index < n):
            raise ValueError("root_index out of range")

    @property
    def n_vertices(self) -> int:
        return self.marks.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def vertex(self, i: int) -> Vertex:
        return Vertex(position=self.positions[i], mark=float(self.marks[i]))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        if self.edges.size:
            deg += np.bincount(self.edges[:, 0], minlength=self.n_vertices)
            deg += np.bincount(self.edges[:, 1], minlength=self.n_vertices)
        return deg

    def adjacency_sets(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges:
            adj[a].add(int(b))
            adj[b].add(int(a))
        return adj

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def has_edge(self, i: int, j: int) -> bool:
        a, b = (i, j) if i < j else (j, i)
        return (a, b) in self.edge_set()


def _pow_delta(x, delta: float):
    """x ** delta, using repeated multiplication for small integer exponents."""
    di = int(round(delta))
    if abs(delta - di) < 1e-12 and 1 <= di <= 8:
        out = x
        for _ in range(di - 1):
            out = out * x
        return out
    return x ** delta


def _dist_pow_d(r2, d: int):
    """|x - y|^d from squared distances, avoiding generic pow for d <= 3."""
    if d == 1:
        return np.sqrt(r2)
    if d == 2:
        return r2
    if d == 3:
        return r2 * np.sqrt(r2)
    return r2 ** (d / 2.0)


def _edge_test(u, X, params: ModelParams, p_factor: float):
    """Vectorized edge indicator: u <= p_factor * rho(X).

    The inverted forms avoid evaluating rho itself:
      polynomial: (u <= pf) & (u * (X/x0)^delta <= pf)
      surgery:    (u <= pf) & (u * X^delta <= pf * p * A)
      indicator:  (X <= a) & (u <= pf)
    """
    prof = params.profile
    if prof is Profile.INDICATOR:
        ok = X <= indicator_support(params)
        if p_factor < 1.0:
            ok = ok & (u <= p_factor)
        return ok
    if prof is Profile.POLYNOMIAL:
        ratio = X / polynomial_knee(params)
        ok = u * _pow_delta(ratio, params.delta) <= p_factor
    elif prof is Profile.SURGERY:
        ok = u * _pow_delta(X, params.delta) <= p_factor * params.p * params.A
    else:  # pragma: no cover
        raise ValueError(f"unknown profile {prof}")
    if p_factor < 1.0:
        ok = ok & (u <= p_factor)
    return ok


def _kernel_grid(marks_i, marks_j, params: ModelParams, pre):
    """Kernel values on a broadcast grid using precomputed per-vertex powers."""
    kind = params.kernel
    beta = params.beta
    if kind is Kernel.PA:
        tg, t1g = pre
        gi, gj = tg[0], tg[1]
        hi, hj = t1g[0], t1g[1]
        return np.where(marks_i <= marks_j, gi * hj, gj * hi) / beta
    if kind is Kernel.MIN:
        tg = pre[0]
        return np.minimum(tg[0], tg[1]) / beta
    if kind is Kernel.PRODUCT:
        tg = pre[0]
        return tg[0] * tg[1] / beta
    if kind is Kernel.SUM:
        a = pre[0]
        s = a[0] + a[1]
        return 1.0 / (_pow_delta(s, params.d) * beta)
    raise ValueError(f"unknown kernel {kind}")  # pragma: no cover


def _kernel_precompute(marks: np.ndarray, params: ModelParams):
    g = params.gamma
    if params.kernel is Kernel.PA:
        return ("pa", marks ** g, marks ** (1.0 - g))
    if params.kernel in (Kernel.MIN, Kernel.PRODUCT):
        return ("pw", marks ** g)
    return ("sum", marks ** (-g / params.d))


def build_graph_exact(points: PointSet, params: ModelParams, domain: SpatialDomain,
                      seed: int, combine_retention: bool = False) -> MarkedGraph:
    """Sample every unordered pair exactly: edge iff its pair variate is at
    most the connection probability (p times it under combined retention)."""
    n = len(points)
    p_factor = params.p if combine_retention else 1.0
    stream = derive_seed(seed, STREAM_EDGE)
    if n >= 2:
        if _fastpath is not None and _fastpath.supported(params, domain):
            ei, ej = _fastpath.sample_edges(
                points.positions, points.marks, params, domain, stream, p_factor)
            edges = np.stack([ei, ej], axis=1) if ei.size else np.empty((0, 2), np.int64)
        else:
            edges = _sample_edges_numpy(points, params, domain, stream, p_factor)
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return MarkedGraph(domain=domain, positions=points.positions, marks=points.marks,
                       edges=edges, params=params, seed=seed)


def _sample_edges_numpy(points: PointSet, params: ModelParams, domain: SpatialDomain,
                        stream: int, p_factor: float) -> np.ndarray:
    n = len(points)
    pos = points.positions
    marks = points.marks
    kpre = _kernel_precompute(marks, params)
    wrap = isinstance(domain, Torus)
    side = domain.side if wrap else 0.0
    d = domain.d
    out_i: list[np.ndarray] = []
    out_j: list[np.ndarray] = []
    block = max(1, int(2_000_000 // max(n, 1)))
    for i0 in range(0, n - 1, block):
        i1 = min(n - 1, i0 + block)
        I = np.arange(i0, i1)
        J = np.arange(i0 + 1, n)
        pair_mask = J[None, :] > I[:, None]
        dx = pos[J][None, :, :] - pos[I][:, None, :]
        if wrap:
            dx -= side * np.round(dx / side)
        r2 = np.sum(dx * dx, axis=-1)
        Xd = _dist_pow_d(r2, d)
        mi = marks[I][:, None]
        mj = marks[J][None, :]
        pre = tuple((arr[I][:, None], arr[J][None, :]) for arr in kpre[1:])
        g = _kernel_grid(mi, mj, params, pre)
        u = pair_uniform(stream, I[:, None].astype(np.uint64),
                         J[None, :].astype(np.uint64))
        ok = _edge_test(u, g * Xd, params, p_factor) & pair_mask
        bi, wj = np.nonzero(ok)
        out_i.append(I[bi])
        out_j.append(J[wj])
    if not out_i:
        return np.empty((0, 2), dtype=np.int64)
    ei = np.concatenate(out_i)
    ej = np.concatenate(out_j)
    return np.stack([ei.astype(np.int64), ej.astype(np.int64)], axis=1)


def build_graph_celllist(points: PointSet, params: ModelParams,
                         domain: SpatialDomain, seed: int) -> MarkedGraph:
    """Cell-grid accelerated builder for the indicator (Boolean-model) profile.

    Edges are deterministic given positions and marks (the indicator profile
    takes values in {0, 1}), so the edge set is identical to the exact
    builder's.  The cell side is at least the largest connection range implied
    by the oldest mark present, so no eligible pair is missed.
    """
    if params.profile is not Profile.INDICATOR:
        raise ValueError("cell-list builder requires the indicator profile "
                         "(bounded connection range)")
    n = len(points)
    if n < 2:
        return MarkedGraph(domain=domain, positions=points.positions,
                           marks=points.marks, edges=np.empty((0, 2), np.int64),
                           params=params, seed=seed)
    a = indicator_support(params)
    tmin = float(points.marks.min())
    g_min = kernel_eval(params.kernel, tmin, tmin, params)
    rmax = (a / g_min) ** (1.0 / params.d)
    side = domain.side
    nc = int(side // rmax) if rmax > 0 else 0
    if nc < 3:
        # grid degenerate: exhaustive enumeration gives the same edge set
        return build_graph_exact(points, params, domain, seed)
    d = domain.d
    wrap = isinstance(domain, Torus)
    cell_side = side / nc
    coords = np.floor((points.positions + side / 2.0) / cell_side).astype(np.int64)
    coords = np.clip(coords, 0, nc - 1)
    cells: dict[tuple, list[int]] = {}
    for idx in range(n):
        cells.setdefault(tuple(coords[idx]), []).append(idx)

    def cell_id(c):
        cid = 0
        for v in c:
            cid = cid * nc + v
        return cid

    offsets = np.stack(np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"),
                       axis=-1).reshape(-1, d)
    pairs_i: list[int] = []
    pairs_j: list[int] = []
    for c, members in cells.items():
        cid = cell_id(c)
        for off in offsets:
            nb = tuple((np.asarray(c) + off) % nc) if wrap else tuple(np.asarray(c) + off)
            if not wrap and (min(nb) < 0 or max(nb) >= nc):
                continue
            if nb not in cells:
                continue
            nid = cell_id(nb)
            if nid < cid:
                continue
            others = cells[nb]
            if nid == cid:
                for ai in range(len(members)):
                    for bi in range(ai + 1, len(members)):
                        pairs_i.append(members[ai])
                        pairs_j.append(members[bi])
            else:
                for a_idx in members:
                    for b_idx in others:
                        pairs_i.append(a_idx)
                        pairs_j.append(b_idx)
    if not pairs_i:
        edges = np.empty((0, 2), dtype=np.int64)
    else:
        ii = np.asarray(pairs_i, dtype=np.int64)
        jj = np.asarray(pairs_j, dtype=np.int64)
        dist = domain.distance(points.positions[ii], points.positions[jj])
        g = kernel_eval(params.kernel, points.marks[ii], points.marks[jj], params)
        keep = g * dist ** params.d <= a
        lo = np.minimum(ii[keep], jj[keep])
        hi = np.maximum(ii[keep], jj[keep])
        edges = np.stack([lo, hi], axis=1)
    return MarkedGraph(domain=domain, positions=points.positions, marks=points.marks,
                       edges=edges, params=params, seed=seed)


def percolate_bonds(graph: MarkedGraph, p: float, seed: int) -> MarkedGraph:
    """Keep each edge independently with probability p (vertex set unchanged).

    The retention variate of edge {i, j} is keyed by (seed, i, j), so the kept
    sets are nested across p: raising p never removes a retained edge.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"retention probability must lie in [0, 1], got {p}")
    if graph.n_edges == 0:
        return graph
    stream = derive_seed(seed, STREAM_RETENTION)
    u = pair_uniform(stream, graph.edges[:, 0], graph.edges[:, 1])
    kept = graph.edges[u <= p]
    return MarkedGraph(domain=graph.domain, positions=graph.positions,
                       marks=graph.marks, edges=kept, params=graph.params,
                       seed=graph.seed, root_index=graph.root_index)


# ---------------------------------------------------------------------------
# Serialization: flat text, bit-exact round trip
# ---------------------------------------------------------------------------


def _domain_to_fields(domain: SpatialDomain) -> tuple[str, float]:
    if isinstance(domain, Torus):
        return "torus", domain.volume
    return "box", domain.side


def _domain_from_fields(kind: str, d: int, value: float) -> SpatialDomain:
    if kind == "torus":
        return Torus(d=d, volume=value)
    if kind == "box":
        return Box(d=d, side=value)
    raise ValueError(f"unknown domain kind {kind!r}")


def graph_to_text(graph: MarkedGraph) -> str:
    """One header line, then ``v idx x1..xd mark`` lines, then ``e i j`` lines.

    Floats are written with repr so parsing reproduces the exact doubles.
    """
    p = graph.params
    dkind, dval = _domain_to_fields(graph.domain)
    root = "none" if graph.root_index is None else str(graph.root_index)
    header = (
        f"wdrcm-graph 1 d={p.d} domain={dkind} domain_value={dval!r} "
        f"kernel={p.kernel.value} profile={p.profile.value} gamma={p.gamma!r} "
        f"beta={p.beta!r} delta={p.delta!r} p={p.p!r} A={p.A!r} "
        f"intensity={p.intensity!r} seed={graph.seed} root={root} "
        f"n={graph.n_vertices} m={graph.n_edges}"
    )
    lines = [header]
    for i in range(graph.n_vertices):
        coords = " ".join(repr(float(c)) for c in graph.positions[i])
        lines.append(f"v {i} {coords} {float(graph.marks[i])!r}")
    for a, b in graph.edges:
        lines.append(f"e {a} {b}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> MarkedGraph:
    lines = text.strip().split("\n")
    head = lines[0].split()
    if head[0] != "wdrcm-graph" or head[1] != "1":
        raise ValueError("not a wdrcm graph file")
    kv = dict(tok.split("=", 1) for tok in head[2:])
    d = int(kv["d"])
    params = ModelParams(
        d=d, gamma=float(kv["gamma"]), beta=float(kv["beta"]),
        delta=float(kv["delta"]), p=float(kv["p"]), A=float(kv["A"]),
        intensity=float(kv["intensity"]), kernel=Kernel(kv["kernel"]),
        profile=Profile(kv["profile"]),
    )
    domain = _domain_from_fields(kv["domain"], d, float(kv["domain_value"]))
    n, m = int(kv["n"]), int(kv["m"])
    root = None if kv["root"] == "none" else int(kv["root"])
    positions = np.zeros((n, d))
    marks = np.zeros(n)
    edges = np.zeros((m, 2), dtype=np.int64)
    vi = 0
    ei = 0
    for line in lines[1:]:
        toks = line.split()
        if toks[0] == "v":
            idx = int(toks[1])
            positions[idx] = [float(t) for t in toks[2:2 + d]]
            marks[idx] = float(toks[2 + d])
            vi += 1
        elif toks[0] == "e":
            edges[ei] = (int(toks[1]), int(toks[2]))
            ei += 1
    if vi != n or ei != m:
        raise ValueError("vertex or edge count mismatch in graph file")
    return MarkedGraph(domain=domain, positions=positions, marks=marks,
                       edges=edges, params=params, seed=int(kv["seed"]),
                       root_index=root)


def write_graph(graph: MarkedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(graph_to_text(graph))


def read_graph(path) -> MarkedGraph:
    with open(path) as fh:
        return graph_from_text(fh.read())
