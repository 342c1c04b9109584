"""Closed-form model mathematics: kernels, profiles, exponents, constants.

The model lives on a marked point set: a vertex is a position in R^d together
with a mark (birth time) t in (0, 1]; small mark means old and heavy (the
vertex weight is 1/t).  Two vertices at distance r with marks s, t are linked
with probability ``rho(g(s, t) * r^d)`` for a symmetric kernel g that is
non-decreasing in both marks and a non-increasing profile rho: [0,inf) -> [0,1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class Kernel(enum.Enum):
    SUM = "sum"
    MIN = "min"
    PA = "pa"
    PRODUCT = "product"


class Profile(enum.Enum):
    INDICATOR = "indicator"
    POLYNOMIAL = "polynomial"
    SURGERY = "surgery"


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the model.

    gamma in (0,1) controls the weight influence (larger = stronger preference
    for heavy vertices), beta > 0 the edge density, delta > 1 the polynomial
    decay of long edges, p the bond retention probability, A >= 1 the constant
    of the capped-power profile p*A*x^-delta, intensity the Poisson intensity.
    """

    d: int = 1
    gamma: float = 0.5
    beta: float = 1.0
    delta: float = 2.0
    p: float = 1.0
    A: float = 1.0
    intensity: float = 1.0
    kernel: Kernel = Kernel.PA
    profile: Profile = Profile.POLYNOMIAL

    def __post_init__(self):
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.delta > 1.0:
            raise ValueError(f"delta must exceed 1, got {self.delta}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.A >= 1.0:
            raise ValueError(f"A must be >= 1, got {self.A}")
        if not self.intensity > 0.0:
            raise ValueError(f"intensity must be positive, got {self.intensity}")

    def with_(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Vertex:
    """A spatial position plus a birth-time mark in (0, 1]."""

    position: np.ndarray
    mark: float

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.position, dtype=float))
        object.__setattr__(self, "position", pos)
        if not 0.0 < self.mark <= 1.0:
            raise ValueError(f"mark must lie in (0, 1], got {self.mark}")


# ---------------------------------------------------------------------------
# Spatial domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned cube [-side/2, side/2]^d with the Euclidean metric."""

    d: int
    side: float

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError(f"box side must be positive, got {self.side}")

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def distance(self, x, y):
        dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.sqrt(np.sum(dx * dx, axis=-1))

    def displacement(self, x, y):
        return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x) <= self.side / 2 + 1e-12))


@dataclass(frozen=True)
class Torus:
    """Torus (-a^{1/d}/2, a^{1/d}/2]^d of volume ``a`` with the wrap metric.

    d(x, y) = min over shifts u in {-a^{1/d}, 0, a^{1/d}}^d of |x - y + u|,
    hence no distance exceeds (a^{1/d}/2) * sqrt(d).
    """

    d: int
    volume: float

    def __post_init__(self):
        if self.volume <= 0:
            raise ValueError(f"torus volume must be positive, got {self.volume}")

    @property
    def side(self) -> float:
        return self.volume ** (1.0 / self.d)

    @property
    def diameter(self) -> float:
        return (self.side / 2.0) * math.sqrt(self.d)

    def displacement(self, x, y):
        """Minimal-image displacement vector x - y."""
        dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        side = self.side
        return dx - side * np.round(dx / side)

    def distance(self, x, y):
        dx = self.displacement(x, y)
        return np.sqrt(np.sum(dx * dx, axis=-1))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x) <= self.side / 2 + 1e-12))


SpatialDomain = Box | Torus


# ---------------------------------------------------------------------------
# Kernels and profiles
# ---------------------------------------------------------------------------


def kernel_eval(kind: Kernel, s, t, params: ModelParams):
    """Evaluate the kernel g(s, t); symmetric, non-decreasing in each mark.

    sum:     beta^-1 (s^{-gamma/d} + t^{-gamma/d})^{-d}
    min:     beta^-1 (s ^ t)^gamma            (^ = minimum)
    pa:      beta^-1 (s v t)^{1-gamma} (s ^ t)^gamma
    product: beta^-1 s^gamma t^gamma
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s <= 0) or np.any(s > 1) or np.any(t <= 0) or np.any(t > 1):
        raise ValueError("marks must lie in (0, 1]")
    gamma, beta, d = params.gamma, params.beta, params.d
    if kind is Kernel.SUM:
        out = (s ** (-gamma / d) + t ** (-gamma / d)) ** (-d) / beta
    elif kind is Kernel.MIN:
        out = np.minimum(s, t) ** gamma / beta
    elif kind is Kernel.PA:
        out = np.maximum(s, t) ** (1.0 - gamma) * np.minimum(s, t) ** gamma / beta
    elif kind is Kernel.PRODUCT:
        out = s ** gamma * t ** gamma / beta
    else:  # pragma: no cover
        raise ValueError(f"unknown kernel {kind}")
    return out if out.ndim else float(out)


def indicator_support(params: ModelParams) -> float:
    """Support endpoint a of the indicator profile fixed by the unit-degree
    normalization: integral of rho(|x|^d) over R^d equals 1, so a = d/S_{d-1}."""
    return params.d / sphere_constants(params.d).surface_area


def polynomial_knee(params: ModelParams) -> float:
    """Knee x0 of rho(x) = min(1, (x/x0)^-delta) fixed by the same
    normalization: x0 = d(delta-1)/(S_{d-1} delta)."""
    sc = sphere_constants(params.d)
    return params.d * (params.delta - 1.0) / (sc.surface_area * params.delta)


def profile_eval(kind: Profile, x, params: ModelParams):
    """Evaluate the profile rho(x) in [0, 1]; non-increasing, rho(0) = 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("profile argument must be non-negative")
    if kind is Profile.INDICATOR:
        out = np.where(x <= indicator_support(params), 1.0, 0.0)
    elif kind is Profile.POLYNOMIAL:
        x0 = polynomial_knee(params)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.minimum(1.0, (np.maximum(x, 1e-300) / x0) ** (-params.delta))
        out = np.where(x == 0.0, 1.0, out)
    elif kind is Profile.SURGERY:
        pA = params.p * params.A
        with np.errstate(divide="ignore", over="ignore"):
            out = np.minimum(1.0, pA * np.maximum(x, 1e-300) ** (-params.delta))
        out = np.where(x == 0.0, 1.0, out)
    else:  # pragma: no cover
        raise ValueError(f"unknown profile {kind}")
    return out if out.ndim else float(out)


def connection_probability(u: Vertex, v: Vertex, params: ModelParams,
                           domain: SpatialDomain):
    """rho(g(mark_u, mark_v) * dist(u, v)^d) under the domain's metric.

    Distance zero returns rho(0) = 1.  Retention is not applied here; callers
    performing combined sampling multiply by p themselves.
    """
    dist = float(domain.distance(u.position, v.position))
    g = kernel_eval(params.kernel, u.mark, v.mark, params)
    return float(profile_eval(params.profile, g * dist ** params.d, params))


def pair_connection_prob(pos_a, marks_a, pos_b, marks_b, params: ModelParams,
                         domain: SpatialDomain):
    """Vectorized connection probabilities for aligned vertex arrays."""
    dist = domain.distance(pos_a, pos_b)
    g = kernel_eval(params.kernel, marks_a, marks_b, params)
    return profile_eval(params.profile, g * dist ** params.d, params)


# ---------------------------------------------------------------------------
# Derived exponents, constants and bounds
# ---------------------------------------------------------------------------


def scale_free_exponent(params: ModelParams) -> float:
    """Power-law exponent of the degree distribution, tau = 1 + 1/gamma."""
    return 1.0 + 1.0 / params.gamma


def critical_gamma(delta: float) -> float:
    """Phase boundary in gamma: delta/(delta+1).

    Below it the percolated model has p_c > 0, above it p_c = 0.
    """
    if not delta > 1.0:
        raise ValueError(f"delta must exceed 1, got {delta}")
    return delta / (delta + 1.0)


@dataclass(frozen=True)
class SphereConstants:
    """Angular constants of the (d-1)-sphere.

    ``j_paper`` is the product prod_{j=0}^{d-2} int_0^pi sin^j(a) da of Wallis
    integrals (empty product = 1 for d = 1); ``surface_area`` is the true
    surface measure 2 pi^{d/2} / Gamma(d/2).  The two differ by a factor of 2
    in every dimension; see ``i_rho_closed_form``.
    """

    j_paper: float
    surface_area: float


def sphere_constants(d: int) -> SphereConstants:
    if not (isinstance(d, int) and d >= 1):
        raise ValueError(f"d must be a positive integer, got {d}")
    j = 1.0
    for k in range(d - 1):
        # Wallis integral int_0^pi sin^k = sqrt(pi) Gamma((k+1)/2) / Gamma(k/2+1)
        j *= math.sqrt(math.pi) * math.gamma((k + 1) / 2.0) / math.gamma(k / 2.0 + 1.0)
    surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    return SphereConstants(j_paper=j, surface_area=surface)


def i_rho_closed_form(params: ModelParams, convention: str = "paper") -> float:
    """Closed form of the capped-power profile mass integral over R^d:
    (pA)^{1/delta} * K * delta / (d (delta - 1)).

    ``convention='paper'`` uses K = j_paper, which understates the angular
    measure by a factor of 2; ``convention='surface'`` uses the true surface
    area and matches direct quadrature.  Internal numeric cross-checks use the
    surface convention.
    """
    if params.profile is not Profile.SURGERY:
        raise ValueError("i_rho_closed_form requires the capped-power (surgery) profile")
    sc = sphere_constants(params.d)
    if convention == "paper":
        K = sc.j_paper
    elif convention == "surface":
        K = sc.surface_area
    else:
        raise ValueError(f"convention must be 'paper' or 'surface', got {convention!r}")
    pA = params.p * params.A
    return pA ** (1.0 / params.delta) * K * params.delta / (params.d * (params.delta - 1.0))


def pc_lower_bound(params: ModelParams) -> float | None:
    """Lower bound on the critical retention probability, or None when the
    model is in the regime with p_c = 0 (gamma >= delta/(delta+1)).

    gamma < 1/2:                     (1 - 2 gamma) / (4 beta)
    1/2 <= gamma < delta/(delta+1):  (1/A) (d (delta(1-gamma)-gamma)(delta-1)
                                     / (2^{d delta + 4} J(d) beta delta))^delta
    """
    g, d, beta, delta, A = params.gamma, params.d, params.beta, params.delta, params.A
    if g >= critical_gamma(delta):
        return None
    if g < 0.5:
        return (1.0 - 2.0 * g) / (4.0 * beta)
    J = sphere_constants(d).j_paper
    num = d * (delta * (1.0 - g) - g) * (delta - 1.0)
    den = 2.0 ** (d * delta + 4.0) * J * beta * delta
    return (1.0 / A) * (num / den) ** delta


@dataclass(frozen=True)
class ProofConstants:
    c1: float
    c2: float
    c3: float


def proof_constants(params: ModelParams) -> ProofConstants:
    """Constants of the subcritical path-counting bounds.

    C1 = beta 2^{d delta + 1} / (delta(1-gamma) - gamma) bounds the two-step
    connection, C2 = 4 C1 the k-step connection per connector, C3 = 2 C2 the
    irregular-path count.  Requires gamma < delta/(delta+1).
    """
    g, d, beta, delta = params.gamma, params.d, params.beta, params.delta
    den = delta * (1.0 - g) - g
    if den <= 0 or g >= critical_gamma(delta):
        raise ValueError(
            f"proof constants require gamma < delta/(delta+1) = {critical_gamma(delta):.6g}"
        )
    c1 = beta * 2.0 ** (d * delta + 1.0) / den
    c2 = beta * 2.0 ** (d * delta + 3.0) / den
    return ProofConstants(c1=c1, c2=c2, c3=2.0 * c2)


@dataclass(frozen=True)
class AlphaWindow:
    """Admissible exponent pairs for the greedy supercritical construction.

    alpha1 ranges over (1, gamma/(delta(1-gamma))), nonempty exactly when
    gamma > delta/(delta+1); given alpha1, alpha2 ranges over
    (alpha1, (gamma/delta)(1 + alpha1 delta)).
    """

    alpha1_lo: float
    alpha1_hi: float
    gamma: float = field(repr=False)
    delta: float = field(repr=False)

    def alpha2_range(self, alpha1: float) -> tuple[float, float]:
        if not self.alpha1_lo < alpha1 < self.alpha1_hi:
            raise ValueError(f"alpha1 = {alpha1} outside ({self.alpha1_lo}, {self.alpha1_hi})")
        return alpha1, (self.gamma / self.delta) * (1.0 + alpha1 * self.delta)

    def default_pick(self) -> tuple[float, float]:
        """Midpoint alpha1, then the midpoint of the induced alpha2 range."""
        a1 = 0.5 * (self.alpha1_lo + self.alpha1_hi)
        lo2, hi2 = self.alpha2_range(a1)
        return a1, 0.5 * (lo2 + hi2)


def alpha_window(params: ModelParams) -> AlphaWindow:
    g, delta = params.gamma, params.delta
    hi = g / (delta * (1.0 - g))
    if hi <= 1.0:
        raise ValueError(
            f"alpha window empty: requires gamma > delta/(delta+1) = {critical_gamma(delta):.6g}"
        )
    return AlphaWindow(alpha1_lo=1.0, alpha1_hi=hi, gamma=g, delta=delta)
