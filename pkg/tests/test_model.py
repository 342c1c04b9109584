import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wdrcm.model import (
    Box,
    Kernel,
    ModelParams,
    Profile,
    Torus,
    Vertex,
    alpha_window,
    connection_probability,
    critical_gamma,
    i_rho_closed_form,
    indicator_support,
    kernel_eval,
    pc_lower_bound,
    polynomial_knee,
    profile_eval,
    proof_constants,
    scale_free_exponent,
    sphere_constants,
)

marks_st = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)


def test_params_invariants():
    with pytest.raises(ValueError):
        ModelParams(gamma=1.0)
    with pytest.raises(ValueError):
        ModelParams(gamma=0.0)
    with pytest.raises(ValueError):
        ModelParams(delta=1.0)
    with pytest.raises(ValueError):
        ModelParams(beta=0.0)
    with pytest.raises(ValueError):
        ModelParams(p=1.5)
    with pytest.raises(ValueError):
        ModelParams(A=0.5)
    with pytest.raises(ValueError):
        ModelParams(d=0)
    with pytest.raises(ValueError):
        ModelParams(intensity=0.0)


# --- kernels --------------------------------------------------------------


def test_kernel_examples():
    # pa at equal marks: exponents sum to one, so g = s / beta
    assert kernel_eval(Kernel.PA, 0.25, 0.25, ModelParams(gamma=0.7)) == pytest.approx(0.25)
    assert kernel_eval(Kernel.MIN, 0.25, 1.0, ModelParams(gamma=0.5)) == pytest.approx(0.5)
    assert kernel_eval(Kernel.SUM, 1.0, 1.0, ModelParams(gamma=0.5, d=1)) == pytest.approx(0.5)


def test_kernel_rejects_bad_marks():
    params = ModelParams()
    for s, t in ((0.0, 0.5), (0.5, 1.5), (-0.1, 0.5)):
        with pytest.raises(ValueError):
            kernel_eval(Kernel.PA, s, t, params)


@given(s=marks_st, t=marks_st,
       kind=st.sampled_from(list(Kernel)),
       gamma=st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=200, deadline=None)
def test_kernel_symmetry(s, t, kind, gamma):
    params = ModelParams(gamma=gamma, beta=1.7, d=2)
    assert kernel_eval(kind, s, t, params) == pytest.approx(
        kernel_eval(kind, t, s, params))


@given(s=marks_st, t=marks_st, kind=st.sampled_from(list(Kernel)))
@settings(max_examples=200, deadline=None)
def test_kernel_nondecreasing_in_each_mark(s, t, kind):
    params = ModelParams(gamma=0.6, d=2)
    bigger = min(1.0, s * 1.5)
    assert kernel_eval(kind, bigger, t, params) >= kernel_eval(kind, s, t, params) - 1e-15


def test_kernel_sandwich_on_grid():
    # 2^-d g_min <= g_sum <= g_min on a 100x100 mark grid
    for d in (1, 2):
        params = ModelParams(gamma=0.5, beta=2.0, d=d)
        grid = np.linspace(0.01, 1.0, 100)
        S, T = np.meshgrid(grid, grid)
        gmin = kernel_eval(Kernel.MIN, S, T, params)
        gsum = kernel_eval(Kernel.SUM, S, T, params)
        assert np.all(gsum <= gmin + 1e-12)
        assert np.all(gsum >= 2.0 ** (-d) * gmin - 1e-12)


@given(s=marks_st, t=marks_st)
@settings(max_examples=200, deadline=None)
def test_pa_equals_product_at_half(s, t):
    params = ModelParams(gamma=0.5, beta=1.3)
    assert kernel_eval(Kernel.PA, s, t, params) == pytest.approx(
        kernel_eval(Kernel.PRODUCT, s, t, params))


# --- profiles ---------------------------------------------------------------


def test_profile_examples():
    params = ModelParams(d=1, delta=2.0)
    assert indicator_support(params) == pytest.approx(0.5)
    assert profile_eval(Profile.INDICATOR, 0.3, params) == 1.0
    assert profile_eval(Profile.INDICATOR, 0.6, params) == 0.0
    surgery = ModelParams(d=1, delta=2.0, p=1.0, A=1.0, profile=Profile.SURGERY)
    assert profile_eval(Profile.SURGERY, 2.0, surgery) == pytest.approx(0.25)
    for kind in Profile:
        assert profile_eval(kind, 0.0, surgery) == 1.0


def test_profile_rejects_negative():
    with pytest.raises(ValueError):
        profile_eval(Profile.POLYNOMIAL, -0.1, ModelParams())


@given(x=st.floats(min_value=0, max_value=100), kind=st.sampled_from(list(Profile)))
@settings(max_examples=200, deadline=None)
def test_profile_nonincreasing(x, kind):
    params = ModelParams(d=2, delta=2.5, p=0.5, A=1.5)
    assert profile_eval(kind, x * 1.5 + 0.01, params) <= profile_eval(kind, x, params) + 1e-15


@pytest.mark.parametrize("kind", [Profile.INDICATOR, Profile.POLYNOMIAL])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_profile_normalization(kind, d):
    # integral of rho(|x|^d) over R^d equals 1 (radial reduction)
    params = ModelParams(d=d, delta=2.0)
    surf = sphere_constants(d).surface_area
    f = lambda y: profile_eval(kind, y, params)
    if kind is Profile.INDICATOR:
        total, _ = integrate.quad(f, 0.0, indicator_support(params) * 1.01)
    else:
        knee = polynomial_knee(params)
        head, _ = integrate.quad(f, 0.0, knee)
        tail, _ = integrate.quad(f, knee, np.inf)
        total = head + tail
    assert surf / d * total == pytest.approx(1.0, abs=1e-3)


# --- connection probability -------------------------------------------------


def test_connection_probability_examples():
    params = ModelParams(d=1, gamma=0.5, beta=1.0, delta=2.0, p=1.0, A=1.0,
                         kernel=Kernel.PA, profile=Profile.SURGERY)
    domain = Box(d=1, side=100.0)
    u = Vertex(position=np.array([0.0]), mark=0.25)
    assert connection_probability(u, Vertex(np.array([0.0]), 0.7), params, domain) == 1.0
    v1 = Vertex(position=np.array([1.0]), mark=0.25)
    assert connection_probability(u, v1, params, domain) == pytest.approx(1.0)
    v4 = Vertex(position=np.array([4.0]), mark=0.25)  # g * r^d = 1, cap boundary
    assert connection_probability(u, v4, params, domain) == pytest.approx(1.0)
    v8 = Vertex(position=np.array([8.0]), mark=0.25)
    assert connection_probability(u, v8, params, domain) == pytest.approx(0.25)


def test_connection_probability_monotonicity():
    params = ModelParams(d=1, gamma=0.5, delta=2.0, profile=Profile.POLYNOMIAL)
    domain = Box(d=1, side=1000.0)
    u = Vertex(position=np.array([0.0]), mark=0.4)
    probs = [connection_probability(u, Vertex(np.array([r]), 0.4), params, domain)
             for r in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    # older (smaller-mark) partner connects at least as well
    far = np.array([3.0])
    p_young = connection_probability(u, Vertex(far, 0.9), params, domain)
    p_old = connection_probability(u, Vertex(far, 0.1), params, domain)
    assert p_old >= p_young


def test_torus_metric():
    torus = Torus(d=2, volume=100.0)
    x = np.array([4.9, 0.0])
    y = np.array([-4.9, 0.0])
    assert torus.distance(x, y) == pytest.approx(0.2)
    assert torus.diameter == pytest.approx(5.0 * math.sqrt(2))


# --- exponents, constants, bounds -------------------------------------------


def test_scale_free_exponent():
    assert scale_free_exponent(ModelParams(gamma=0.5)) == pytest.approx(3.0)
    assert scale_free_exponent(ModelParams(gamma=0.25)) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        ModelParams(gamma=1.0)  # limit excluded by the type invariant


def test_critical_gamma():
    assert critical_gamma(2.0) == pytest.approx(2.0 / 3.0)
    assert critical_gamma(1.5) == pytest.approx(0.6)
    vals = [critical_gamma(d) for d in (10.0, 100.0, 1000.0)]
    assert vals[0] < vals[1] < vals[2] < 1.0
    with pytest.raises(ValueError):
        critical_gamma(1.0)


def test_sphere_constants():
    assert sphere_constants(1).j_paper == pytest.approx(1.0)
    assert sphere_constants(2).j_paper == pytest.approx(math.pi)
    assert sphere_constants(2).surface_area == pytest.approx(2 * math.pi)
    assert sphere_constants(3).j_paper == pytest.approx(2 * math.pi)
    assert sphere_constants(3).surface_area == pytest.approx(4 * math.pi)


def test_pc_lower_bound():
    assert pc_lower_bound(ModelParams(gamma=0.25, beta=1.0)) == pytest.approx(0.125)
    assert pc_lower_bound(ModelParams(gamma=0.8, delta=2.0)) is None
    val = pc_lower_bound(ModelParams(d=1, delta=2.0, gamma=0.6, beta=1.0, A=2.0))
    assert val == pytest.approx(0.5 * (0.2 / 128.0) ** 2)


def test_i_rho_closed_form():
    params = ModelParams(d=1, delta=2.0, p=1.0, A=1.0, profile=Profile.SURGERY)
    assert i_rho_closed_form(params, "paper") == pytest.approx(2.0)
    assert i_rho_closed_form(params, "surface") == pytest.approx(4.0)
    assert i_rho_closed_form(params.with_(p=0.0), "paper") == 0.0
    with pytest.raises(ValueError):
        i_rho_closed_form(ModelParams(profile=Profile.POLYNOMIAL), "paper")
    with pytest.raises(ValueError):
        i_rho_closed_form(params, "other")


def test_proof_constants():
    pc = proof_constants(ModelParams(d=1, delta=2.0, gamma=0.5))
    assert (pc.c1, pc.c2, pc.c3) == (16.0, 64.0, 128.0)
    for gamma, delta in ((0.3, 1.5), (0.55, 2.5), (0.1, 4.0)):
        c = proof_constants(ModelParams(gamma=gamma, delta=delta))
        assert c.c3 == pytest.approx(2.0 * c.c2)
    with pytest.raises(ValueError):
        proof_constants(ModelParams(gamma=2.0 / 3.0, delta=2.0))


def test_alpha_window():
    aw = alpha_window(ModelParams(gamma=0.8, delta=2.0))
    assert (aw.alpha1_lo, aw.alpha1_hi) == pytest.approx((1.0, 2.0))
    lo2, hi2 = aw.alpha2_range(1.5)
    assert (lo2, hi2) == pytest.approx((1.5, 1.6))
    a1, a2 = aw.default_pick()
    assert aw.alpha1_lo < a1 < aw.alpha1_hi
    assert a1 < a2 < (0.8 / 2.0) * (1 + a1 * 2.0)
    with pytest.raises(ValueError):
        alpha_window(ModelParams(gamma=0.5, delta=2.0))
    # window width shrinks to zero approaching the boundary from above
    widths = [alpha_window(ModelParams(gamma=2/3 + eps, delta=2.0)).alpha1_hi - 1.0
              for eps in (0.1, 0.03, 0.01)]
    assert widths[0] > widths[1] > widths[2]
