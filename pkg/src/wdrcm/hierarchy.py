"""Greedy construction of paths to ever-older vertices through young connectors.

Valid above the phase boundary (gamma > delta/(delta+1)): from a vertex with
mark s < 1/2, hop to a vertex born before s^alpha1 within distance
((beta/2) s^-alpha2)^{1/d}, linked through a connector born after 1/2 within
distance ((beta/2) s^-gamma)^{1/d}.  The admissible exponent window comes from
``alpha_window``.  Points are sampled lazily: each search ball and mark band
is realized once and cached, so the ambient Poisson process stays consistent
across steps, and edge variates are keyed per pair as everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clusters import wilson_interval
from .model import ModelParams, Vertex, alpha_window, critical_gamma, kernel_eval, profile_eval
from .rng import STREAM_EDGE, STREAM_HIERARCHY, derive_seed, generator, pair_uniform


def _ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius ** d


@dataclass
class _Region:
    center: np.ndarray
    radius: float
    mark_lo: float
    mark_hi: float

    def contains(self, pos: np.ndarray, mark) -> np.ndarray:
        inside_ball = np.linalg.norm(pos - self.center[None, :], axis=1) <= self.radius
        inside_band = (mark > self.mark_lo) & (mark <= self.mark_hi)
        return inside_ball & inside_band


class RegionSampler:
    """Lazy realization of a marked Poisson process on R^d.

    Querying a ball-times-mark-band region samples fresh points only on the
    part not covered by earlier queries (rejection against the covered list),
    which is exactly the restriction property of a Poisson process.
    """

    def __init__(self, d: int, intensity: float, seed: int):
        self.d = d
        self.intensity = intensity
        self.seed = seed
        self._regions: list[_Region] = []
        self._counter = 0
        self.positions = np.empty((0, d))
        self.marks = np.empty(0)

    def add_point(self, position, mark: float) -> int:
        """Register an externally given point (e.g. the chain's start vertex)."""
        self.positions = np.vstack([self.positions, np.asarray(position, float)[None, :]])
        self.marks = np.append(self.marks, mark)
        return len(self.marks) - 1

    def query(self, center, radius: float, mark_lo: float, mark_hi: float) -> np.ndarray:
        """Indices of all process points in the ball x mark band, sampling the
        not-yet-covered part first."""
        center = np.asarray(center, dtype=float)
        rng = generator(self.seed, STREAM_HIERARCHY, self._counter)
        self._counter += 1
        lam = self.intensity * _ball_volume(self.d, radius) * (mark_hi - mark_lo)
        n_new = int(rng.poisson(lam))
        if n_new:
            dirs = rng.normal(size=(n_new, self.d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            radii = radius * rng.random(n_new) ** (1.0 / self.d)
            pos = center[None, :] + radii[:, None] * dirs
            marks = mark_lo + (mark_hi - mark_lo) * (1.0 - rng.random(n_new))
            fresh = np.ones(n_new, dtype=bool)
            for reg in self._regions:
                fresh &= ~reg.contains(pos, marks)
            if fresh.any():
                self.positions = np.vstack([self.positions, pos[fresh]])
                self.marks = np.append(self.marks, marks[fresh])
        self._regions.append(_Region(center=center, radius=radius,
                                     mark_lo=mark_lo, mark_hi=mark_hi))
        dist = np.linalg.norm(self.positions - center[None, :], axis=1)
        hit = (dist <= radius) & (self.marks > mark_lo) & (self.marks <= mark_hi)
        return np.nonzero(hit)[0]


@dataclass(frozen=True)
class Hop:
    target_id: int
    target: Vertex
    connector_id: int
    connector: Vertex


@dataclass
class HierarchyChain:
    start: Vertex
    alpha1: float
    alpha2: float
    hops: list[Hop] = field(default_factory=list)

    def check_invariants(self, params: ModelParams) -> None:
        """Assert the per-hop mark and distance inequalities and the connector
        conditions; raises AssertionError on violation."""
        prev = self.start
        for hop in self.hops:
            s_prev = prev.mark
            assert hop.target.mark < s_prev ** self.alpha1, "target not old enough"
            gap = float(np.linalg.norm(hop.target.position - prev.position))
            assert gap ** params.d < (params.beta / 2.0) * s_prev ** (-self.alpha2), \
                "target outside the search ball"
            assert hop.connector.mark > 0.5, "connector not young enough"
            conn_gap = float(np.linalg.norm(hop.connector.position - prev.position))
            assert conn_gap ** params.d < (params.beta / 2.0) * s_prev ** (-params.gamma), \
                "connector outside its search ball"
            prev = hop.target


def _edges_realized(params: ModelParams, ids_a, pos_a, marks_a, ids_b, pos_b,
                    marks_b, edge_stream: int) -> np.ndarray:
    """Vectorized percolated-edge indicators under the per-pair variate rule."""
    dist = np.linalg.norm(pos_a - pos_b, axis=-1)
    g = kernel_eval(params.kernel, marks_a, marks_b, params)
    phi = profile_eval(params.profile, g * dist ** params.d, params)
    u = pair_uniform(edge_stream, ids_a, ids_b)
    return u <= params.p * phi


def hierarchy_step(sampler: RegionSampler, current_id: int, current: Vertex,
                   alphas: tuple[float, float], params: ModelParams,
                   seed: int) -> Hop | None:
    """One greedy hop: nearest admissible target whose connection through the
    nearest admissible connector is realized; None if the search fails."""
    s = current.mark
    if not s < 0.5:
        raise ValueError(f"current mark must be below 1/2, got {s}")
    if not params.gamma > critical_gamma(params.delta):
        raise ValueError("requires gamma > delta/(delta+1)")
    alpha1, alpha2 = alphas
    edge_stream = derive_seed(seed, STREAM_EDGE)
    r_target = ((params.beta / 2.0) * s ** (-alpha2)) ** (1.0 / params.d)
    r_conn = ((params.beta / 2.0) * s ** (-params.gamma)) ** (1.0 / params.d)
    target_ids = sampler.query(current.position, r_target, 0.0, s ** alpha1)
    conn_ids = sampler.query(current.position, r_conn, 0.5, 1.0)
    if target_ids.size == 0 or conn_ids.size == 0:
        return None
    t_dist = np.linalg.norm(sampler.positions[target_ids] - current.position[None, :], axis=1)
    t_order = target_ids[np.lexsort((target_ids, t_dist))]
    c_dist = np.linalg.norm(sampler.positions[conn_ids] - current.position[None, :], axis=1)
    c_order = conn_ids[np.lexsort((conn_ids, c_dist))]
    c_pos = sampler.positions[c_order]
    c_marks = sampler.marks[c_order]
    # the current-to-connector edge does not depend on the target
    first_leg = _edges_realized(
        params, np.full(c_order.size, current_id, dtype=np.uint64),
        np.broadcast_to(current.position, c_pos.shape),
        np.full(c_order.size, current.mark), c_order.astype(np.uint64),
        c_pos, c_marks, edge_stream)
    if not first_leg.any():
        return None
    for tid in t_order:
        t_pos = sampler.positions[tid]
        t_mark = float(sampler.marks[tid])
        second_leg = _edges_realized(
            params, c_order.astype(np.uint64), c_pos, c_marks,
            np.full(c_order.size, tid, dtype=np.uint64),
            np.broadcast_to(t_pos, c_pos.shape), np.full(c_order.size, t_mark),
            edge_stream)
        both = first_leg & second_leg
        hit = np.nonzero(both)[0]
        if hit.size:
            cid = int(c_order[hit[0]])
            return Hop(target_id=int(tid),
                       target=Vertex(position=t_pos, mark=t_mark),
                       connector_id=cid,
                       connector=Vertex(position=sampler.positions[cid],
                                        mark=float(sampler.marks[cid])))
    return None


@dataclass(frozen=True)
class ChainResult:
    chain: HierarchyChain
    steps_completed: int
    success: bool
    failure_reason: str | None = None


def build_chain(start: Vertex, K: int, params: ModelParams, seed: int,
                alphas: tuple[float, float] | None = None,
                extent_cap: float = 1e12) -> ChainResult:
    """Iterate greedy hops up to K times from the start vertex.

    Search balls grow fast as marks shrink; a ball radius beyond ``extent_cap``
    aborts the chain explicitly rather than exhausting memory.
    """
    if alphas is None:
        alphas = alpha_window(params).default_pick()
    sampler = RegionSampler(d=params.d, intensity=params.intensity, seed=seed)
    cur_id = sampler.add_point(start.position, start.mark)
    cur = start
    chain = HierarchyChain(start=start, alpha1=alphas[0], alpha2=alphas[1])
    for step in range(K):
        r_target = ((params.beta / 2.0) * cur.mark ** (-alphas[1])) ** (1.0 / params.d)
        if r_target > extent_cap:
            return ChainResult(chain=chain, steps_completed=step, success=False,
                               failure_reason="window_cap")
        hop = hierarchy_step(sampler, cur_id, cur, alphas, params, seed)
        if hop is None:
            return ChainResult(chain=chain, steps_completed=step, success=False,
                               failure_reason="no_hop")
        chain.hops.append(hop)
        cur_id, cur = hop.target_id, hop.target
    return ChainResult(chain=chain, steps_completed=K, success=True)


def success_curve(s0_list: list[float], K: int, replications: int,
                  params: ModelParams, seed: int):
    """Empirical probability of completing K hops, per start mark, with a 95%
    Wilson interval.  Returns (rows, summary)."""
    if not params.gamma > critical_gamma(params.delta):
        raise ValueError("requires gamma > delta/(delta+1)")
    alphas = alpha_window(params).default_pick()
    rows = []
    summary = []
    for si, s0 in enumerate(s0_list):
        if not 0.0 < s0 < 0.5:
            raise ValueError(f"start mark must lie in (0, 1/2), got {s0}")
        successes = 0
        for rep in range(replications):
            rep_seed = derive_seed(seed, si, rep)
            start = Vertex(position=np.zeros(params.d), mark=s0)
            result = build_chain(start, K, params, rep_seed, alphas=alphas)
            if result.success:
                result.chain.check_invariants(params)
            successes += int(result.success)
            rows.append({
                "gamma": params.gamma, "delta": params.delta,
                "beta": params.beta, "p": params.p, "d": params.d, "s0": s0,
                "alpha1": alphas[0], "alpha2": alphas[1], "K": K,
                "seed": rep_seed, "steps_completed": result.steps_completed,
                "success": int(result.success),
            })
        phat, lo, hi = wilson_interval(successes, replications)
        summary.append({
            "gamma": params.gamma, "delta": params.delta, "beta": params.beta,
            "p": params.p, "d": params.d, "s0": s0, "alpha1": alphas[0],
            "alpha2": alphas[1], "K": K, "replications": replications,
            "success_freq": phat, "ci_low": lo, "ci_high": hi,
        })
    return rows, summary
