"""numba-accelerated pair sampling, bit-identical to the numpy reference.

The jitted kernel reuses the per-vertex power arrays precomputed with numpy
and mirrors the reference operation order exactly, so both paths produce the
same edge set for the same seed.  Import of this module fails cleanly when
numba is unavailable; callers fall back to the numpy path.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .model import Kernel, ModelParams, Profile, Torus, indicator_support, polynomial_knee
from .rng import _C1, _mix64_int

_KERNEL_ID = {Kernel.PA: 0, Kernel.MIN: 1, Kernel.PRODUCT: 2, Kernel.SUM: 3}
_PROFILE_ID = {Profile.INDICATOR: 0, Profile.POLYNOMIAL: 1, Profile.SURGERY: 2}


def supported(params: ModelParams, domain) -> bool:
    return True


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _pair_u(key, i, j):
    z = (np.uint64(i) * np.uint64(0x9E3779B97F4A7C15)) ^ \
        (np.uint64(j) * np.uint64(0xBF58476D1CE4E5B9)) ^ key
    z = _mix(z)
    z = _mix(z ^ np.uint64(0x94D049BB133111EB))
    return (np.float64(z >> np.uint64(11)) + 1.0) * (2.0 ** -53)


@njit(inline="always")
def _powd(x, delta, di, int_exp):
    if int_exp:
        out = x
        for _ in range(di - 1):
            out = out * x
        return out
    return x ** delta


@njit(inline="always")
def _row_edge(a, b, pos, marks, tg, t1g, key, wrap, side, d, dd, dd_int,
              beta, delta, di, delta_int, kernel_id, profile_id,
              thresh, rhs, pf):
    r2 = 0.0
    for c in range(d):
        dx = pos[b, c] - pos[a, c]
        if wrap:
            dx -= side * np.rint(dx / side)
        r2 += dx * dx
    if d == 1:
        Xd = np.sqrt(r2)
    elif d == 2:
        Xd = r2
    elif d == 3:
        Xd = r2 * np.sqrt(r2)
    else:
        Xd = r2 ** (d / 2.0)
    if kernel_id == 0:
        if marks[a] <= marks[b]:
            g = (tg[a] * t1g[b]) / beta
        else:
            g = (tg[b] * t1g[a]) / beta
    elif kernel_id == 1:
        g = min(tg[a], tg[b]) / beta
    elif kernel_id == 2:
        g = (tg[a] * tg[b]) / beta
    else:
        s = tg[a] + tg[b]
        g = 1.0 / (_powd(s, dd, d, dd_int) * beta)
    X = g * Xd
    u = _pair_u(key, a, b)
    if profile_id == 0:
        ok = X <= thresh
        if pf < 1.0:
            ok = ok and (u <= pf)
        return ok
    if profile_id == 1:
        ratio = X / thresh
        ok = u * _powd(ratio, delta, di, delta_int) <= rhs
    else:
        ok = u * _powd(X, delta, di, delta_int) <= rhs
    if pf < 1.0:
        ok = ok and (u <= pf)
    return ok


@njit(parallel=True, cache=True)
def _count_rows(pos, marks, tg, t1g, key, wrap, side, d, dd, dd_int,
                beta, delta, di, delta_int, kernel_id, profile_id,
                thresh, rhs, pf):
    n = pos.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for a in prange(n - 1):
        cnt = 0
        for b in range(a + 1, n):
            if _row_edge(a, b, pos, marks, tg, t1g, key, wrap, side, d, dd,
                         dd_int, beta, delta, di, delta_int, kernel_id,
                         profile_id, thresh, rhs, pf):
                cnt += 1
        counts[a] = cnt
    return counts


@njit(parallel=True, cache=True)
def _fill_rows(pos, marks, tg, t1g, key, wrap, side, d, dd, dd_int,
               beta, delta, di, delta_int, kernel_id, profile_id,
               thresh, rhs, pf, offsets, ei, ej):
    n = pos.shape[0]
    for a in prange(n - 1):
        k = offsets[a]
        for b in range(a + 1, n):
            if _row_edge(a, b, pos, marks, tg, t1g, key, wrap, side, d, dd,
                         dd_int, beta, delta, di, delta_int, kernel_id,
                         profile_id, thresh, rhs, pf):
                ei[k] = a
                ej[k] = b
                k += 1


def sample_edges(positions, marks, params: ModelParams, domain, stream: int,
                 p_factor: float):
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    marks = np.ascontiguousarray(marks, dtype=np.float64)
    g = params.gamma
    if params.kernel is Kernel.PA:
        tg = marks ** g
        t1g = marks ** (1.0 - g)
    elif params.kernel in (Kernel.MIN, Kernel.PRODUCT):
        tg = marks ** g
        t1g = tg
    else:
        tg = marks ** (-g / params.d)
        t1g = tg
    key = np.uint64(_mix64_int(stream ^ _C1))
    wrap = isinstance(domain, Torus)
    side = float(domain.side) if wrap else 0.0
    d = int(domain.d)
    dd = float(d)
    dd_int = d <= 8
    delta = float(params.delta)
    di = int(round(delta))
    delta_int = abs(delta - di) < 1e-12 and 1 <= di <= 8
    if not delta_int:
        di = 0
    kernel_id = _KERNEL_ID[params.kernel]
    profile_id = _PROFILE_ID[params.profile]
    if params.profile is Profile.INDICATOR:
        thresh = indicator_support(params)
        rhs = 1.0
    elif params.profile is Profile.POLYNOMIAL:
        thresh = polynomial_knee(params)
        rhs = p_factor
    else:
        thresh = 1.0
        rhs = p_factor * params.p * params.A
    args = (pos, marks, tg, t1g, key, wrap, side, d, dd, dd_int,
            float(params.beta), delta, di, delta_int, kernel_id, profile_id,
            float(thresh), float(rhs), float(p_factor))
    counts = _count_rows(*args)
    offsets = np.zeros(pos.shape[0], dtype=np.int64)
    if pos.shape[0] > 1:
        np.cumsum(counts[:-1], out=offsets[1:])
    total = int(counts.sum())
    ei = np.empty(total, dtype=np.int64)
    ej = np.empty(total, dtype=np.int64)
    _fill_rows(*args, offsets, ei, ej)
    return ei, ej
