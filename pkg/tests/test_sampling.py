import numpy as np
import pytest
from scipy import stats

from wdrcm.model import Box, Kernel, ModelParams, Profile, Torus, connection_probability
from wdrcm.rng import STREAM_EDGE, derive_seed
from wdrcm.sampling import (
    MarkedGraph,
    PointSet,
    _sample_edges_numpy,
    add_palm_origin,
    build_graph_celllist,
    build_graph_exact,
    graph_from_text,
    graph_to_text,
    percolate_bonds,
    sample_ppp,
)

try:
    from wdrcm import _fastpath
except ImportError:
    _fastpath = None


def test_ppp_mean_count():
    params = ModelParams(d=2)
    domain = Box(d=2, side=10.0)
    counts = [len(sample_ppp(domain, params, seed)) for seed in range(10_000)]
    # Poisson(100): mean over 1e4 seeds within 3*sqrt(100/1e4) of 100
    assert abs(np.mean(counts) - 100.0) < 0.3


def test_ppp_marks_uniform():
    params = ModelParams(d=1, intensity=1.0)
    domain = Box(d=1, side=100_000.0)
    marks = sample_ppp(domain, params, seed=3).marks
    assert marks.min() > 0.0 and marks.max() <= 1.0
    stat = stats.kstest(marks, "uniform").statistic
    assert stat < 1.628 / np.sqrt(len(marks))


def test_ppp_deterministic():
    params = ModelParams(d=2)
    domain = Torus(d=2, volume=50.0)
    a = sample_ppp(domain, params, seed=9)
    b = sample_ppp(domain, params, seed=9)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.marks, b.marks)


def test_palm_origin():
    empty = PointSet(positions=np.empty((0, 2)), marks=np.empty(0))
    rooted = add_palm_origin(empty, seed=1, d=2)
    assert len(rooted) == 1
    assert np.array_equal(rooted.positions[0], np.zeros(2))

    params = ModelParams(d=2)
    pts = sample_ppp(Torus(d=2, volume=30.0), params, seed=2)
    rooted = add_palm_origin(pts, seed=2)
    assert len(rooted) == len(pts) + 1
    assert np.array_equal(rooted.positions[1:], pts.positions)
    assert np.array_equal(rooted.marks[1:], pts.marks)


def test_palm_marks_uniform_across_seeds():
    empty = PointSet(positions=np.empty((0, 1)), marks=np.empty(0))
    marks = np.array([add_palm_origin(empty, seed=s, d=1).marks[0]
                      for s in range(100_000)])
    stat = stats.kstest(marks, "uniform").statistic
    assert stat < 1.628 / np.sqrt(len(marks))


# --- exact builder ----------------------------------------------------------


def _small_setup(seed=0, profile=Profile.POLYNOMIAL, d=1, volume=40.0):
    params = ModelParams(d=d, gamma=0.6, beta=1.0, delta=2.0, p=0.5,
                         kernel=Kernel.PA, profile=profile)
    domain = Torus(d=d, volume=volume)
    return params, domain, sample_ppp(domain, params, seed)


def test_combined_vs_thinned_edge_counts():
    params, domain, _ = _small_setup()
    combined, thinned = [], []
    for seed in range(1000):
        pts = sample_ppp(domain, params, seed)
        g1 = build_graph_exact(pts, params, domain, seed, combine_retention=True)
        g2 = percolate_bonds(build_graph_exact(pts, params, domain, seed), params.p, seed)
        combined.append(g1.n_edges)
        thinned.append(g2.n_edges)
    diff = np.mean(combined) - np.mean(thinned)
    se = np.sqrt(np.var(combined) / len(combined) + np.var(thinned) / len(thinned))
    assert abs(diff) < 3 * se


def test_coincident_pair_edge_probability():
    params = ModelParams(d=1, gamma=0.5, delta=2.0, p=0.3, A=1.0,
                         profile=Profile.SURGERY)
    domain = Box(d=1, side=10.0)
    pts = PointSet(positions=np.array([[0.0], [0.0]]), marks=np.array([0.4, 0.7]))
    hits = sum(
        build_graph_exact(pts, params, domain, seed, combine_retention=True).n_edges
        for seed in range(10_000))
    se = np.sqrt(0.3 * 0.7 / 10_000)
    assert abs(hits / 10_000 - 0.3) < 3 * se


def test_indicator_hand_trace():
    # d=1, indicator support a=1/2: edge iff g(s,t) |x-y| <= 1/2
    params = ModelParams(d=1, gamma=0.5, beta=1.0, kernel=Kernel.MIN,
                         profile=Profile.INDICATOR)
    domain = Box(d=1, side=20.0)
    pos = np.array([[0.0], [0.4], [1.0], [-3.0], [5.0]])
    marks = np.array([0.25, 0.16, 0.81, 0.04, 0.49])
    pts = PointSet(positions=pos, marks=marks)
    graph = build_graph_exact(pts, params, domain, seed=5)
    expected = set()
    for i in range(5):
        for j in range(i + 1, 5):
            g = min(marks[i], marks[j]) ** 0.5
            if g * abs(pos[i, 0] - pos[j, 0]) <= 0.5:
                expected.add((i, j))
    assert graph.edge_set() == expected


def test_edge_marginal_matches_connection_probability():
    params = ModelParams(d=2, gamma=0.6, beta=1.0, delta=2.0,
                         kernel=Kernel.PA, profile=Profile.POLYNOMIAL)
    domain = Torus(d=2, volume=25.0)
    pts = PointSet(positions=np.array([[0.0, 0.0], [1.3, -0.7]]),
                   marks=np.array([0.3, 0.8]))
    phi = connection_probability(pts.vertex(0), pts.vertex(1), params, domain)
    hits = sum(build_graph_exact(pts, params, domain, seed).n_edges
               for seed in range(10_000))
    se = np.sqrt(phi * (1 - phi) / 10_000)
    assert abs(hits / 10_000 - phi) < 3 * se


@pytest.mark.skipif(_fastpath is None, reason="numba unavailable")
def test_numpy_and_numba_paths_identical():
    for kernel in Kernel:
        for profile in Profile:
            params = ModelParams(d=2, gamma=0.55, beta=1.2, delta=2.3, p=0.6,
                                 A=1.1, kernel=kernel, profile=profile)
            domain = Torus(d=2, volume=60.0)
            pts = sample_ppp(domain, params, seed=11)
            stream = derive_seed(77, STREAM_EDGE)
            ref = _sample_edges_numpy(pts, params, domain, stream, params.p)
            ei, ej = _fastpath.sample_edges(pts.positions, pts.marks, params,
                                            domain, stream, params.p)
            fast = np.stack([ei, ej], axis=1) if ei.size else np.empty((0, 2), np.int64)
            assert np.array_equal(ref, fast)


def test_build_deterministic_and_serialization_roundtrip():
    params, domain, pts = _small_setup(seed=4)
    g1 = build_graph_exact(pts, params, domain, seed=4)
    g2 = build_graph_exact(pts, params, domain, seed=4)
    assert graph_to_text(g1) == graph_to_text(g2)
    text = graph_to_text(g1)
    g3 = graph_from_text(text)
    assert graph_to_text(g3) == text
    assert np.array_equal(g1.positions, g3.positions)
    assert np.array_equal(g1.marks, g3.marks)
    assert np.array_equal(g1.edges, g3.edges)
    assert g3.params == params


def test_graph_validation():
    domain = Box(d=1, side=4.0)
    pos = np.array([[0.0], [1.0]])
    marks = np.array([0.5, 0.6])
    params = ModelParams(d=1)
    with pytest.raises(ValueError):
        MarkedGraph(domain=domain, positions=pos, marks=marks,
                    edges=np.array([[0, 0]]), params=params, seed=0)
    with pytest.raises(ValueError):
        MarkedGraph(domain=domain, positions=pos, marks=marks,
                    edges=np.array([[0, 1], [1, 0]]), params=params, seed=0)
    with pytest.raises(ValueError):
        MarkedGraph(domain=domain, positions=pos, marks=marks,
                    edges=np.array([[0, 2]]), params=params, seed=0)


# --- cell-list builder --------------------------------------------------------


def test_celllist_matches_exact():
    params = ModelParams(d=2, gamma=0.4, beta=1.0, kernel=Kernel.SUM,
                         profile=Profile.INDICATOR)
    domain = Torus(d=2, volume=900.0)
    pts = sample_ppp(domain, params, seed=8)
    assert len(pts) > 700
    exact = build_graph_exact(pts, params, domain, seed=8)
    cell = build_graph_celllist(pts, params, domain, seed=8)
    assert exact.edge_set() == cell.edge_set()


def test_celllist_single_vertex_and_rejections():
    params = ModelParams(d=1, profile=Profile.INDICATOR, kernel=Kernel.MIN)
    domain = Box(d=1, side=10.0)
    single = PointSet(positions=np.array([[0.0]]), marks=np.array([0.5]))
    assert build_graph_celllist(single, params, domain, seed=0).n_edges == 0
    with pytest.raises(ValueError):
        build_graph_celllist(single, params.with_(profile=Profile.SURGERY),
                             domain, seed=0)


# --- percolation ---------------------------------------------------------------


def test_percolate_bonds():
    params = ModelParams(d=1, gamma=0.5, delta=1.5, p=1.0, A=1.0,
                         intensity=3.0, kernel=Kernel.MIN, profile=Profile.SURGERY)
    domain = Torus(d=1, volume=500.0)
    pts = sample_ppp(domain, params, seed=21)
    graph = build_graph_exact(pts, params, domain, seed=21)
    assert graph.n_edges > 10_000
    assert percolate_bonds(graph, 1.0, seed=3).n_edges == graph.n_edges
    assert percolate_bonds(graph, 0.0, seed=3).n_edges == 0
    kept = percolate_bonds(graph, 0.5, seed=3).n_edges
    assert abs(kept - 0.5 * graph.n_edges) < 3 * np.sqrt(graph.n_edges * 0.25)
    with pytest.raises(ValueError):
        percolate_bonds(graph, 1.5, seed=3)


def test_percolation_nested_in_p():
    params, domain, pts = _small_setup(seed=13)
    graph = build_graph_exact(pts, params, domain, seed=13)
    prev = set()
    for p in (0.2, 0.5, 0.8, 1.0):
        cur = percolate_bonds(graph, p, seed=13).edge_set()
        assert prev <= cur
        prev = cur
