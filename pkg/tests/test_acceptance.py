"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (run ``pytest tests/test_acceptance.py -v -s``
to see them) and asserts the criterion at its stated tolerance.  Monte Carlo
criteria use pinned seeds and replication counts large enough that the stated
trends hold with comfortable margins.
"""

import itertools

import numpy as np

from wdrcm.aba import degree_tail_fit
from wdrcm.clusters import _retained, _rooted_phi_graph, origin_cluster_stats, theta_estimate
from wdrcm.experiments import ExperimentConfig, run
from wdrcm.hierarchy import success_curve
from wdrcm.model import Kernel, ModelParams, Profile, Torus
from wdrcm.paths import (
    MarkedPath,
    catalan,
    count_two_skeleton_paths,
    path_to_tree,
    skeleton_local_maxima,
    skeleton_scan,
    tree_to_path,
)
from wdrcm.rng import derive_seed, generator
from wdrcm.sampling import build_graph_exact, sample_ppp
from wdrcm.verify import (
    LEMMAS,
    random_admissible_pair,
    verify_i_rho,
    verify_lemma_grid,
    verify_two_connection,
)


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_01_catalan_law():
    expected = [1, 1, 2, 5, 14, 42, 132, 429, 1430]
    counts = [count_two_skeleton_paths(k) for k in range(9)]
    _report(1, counts == expected,
            f"two-skeleton path counts {counts} == Catalan C_0..C_8")
    assert counts == [catalan(k) for k in range(9)]


def test_criterion_02_skeleton_equivalence():
    mismatches = 0
    cases = 0
    for n in range(1, 9):
        base = [(i + 1) / (n + 1) for i in range(n)]
        for perm in itertools.permutations(base):
            p = MarkedPath(list(enumerate(perm)))
            cases += 1
            if skeleton_scan(p).indices != skeleton_local_maxima(p).indices:
                mismatches += 1
    rng = generator(2024, 2)
    random_cases = 0
    while random_cases < 100_000:
        n = int(rng.integers(1, 21))
        marks = 1.0 - rng.random(n)
        if len(set(marks.tolist())) != n:
            continue
        p = MarkedPath(list(enumerate(marks.tolist())))
        random_cases += 1
        if skeleton_scan(p).indices != skeleton_local_maxima(p).indices:
            mismatches += 1
    _report(2, mismatches == 0,
            f"scan == local-maxima on {cases} exhaustive (len <= 8) and "
            f"{random_cases} random (len <= 20) paths, {mismatches} mismatches")


def test_criterion_03_bijection():
    endpoints = ((0, 0.10), (1, 0.05))
    failures = 0
    cases = 0
    for k in range(0, 8):
        connectors = [(2 + i, 0.5 + (i + 1) / (k + 1) * 0.4) for i in range(k)]
        trees = []
        for perm in itertools.permutations(connectors):
            path = MarkedPath((endpoints[0],) + perm + (endpoints[1],))
            tree = path_to_tree(path)
            back = tree_to_path(tree, endpoints)
            cases += 1
            if back.entries != path.entries:
                failures += 1
            trees.append(tree)
        # other direction: every tree arising above maps back to itself
        for tree in trees:
            path = tree_to_path(tree, endpoints)
            tree2 = path_to_tree(path)
            cases += 1
            if tree is None or tree2 is None:
                failures += int((tree is None) != (tree2 is None))
            elif not tree.equals(tree2):
                failures += 1
    _report(3, failures == 0,
            f"round trips both ways, exhaustive to 7 connectors "
            f"({cases} cases, {failures} failures)")


def test_criterion_04_appendix_lemmas():
    eq_tol, ineq_tol = 1e-6, 1e-9
    worst = {}
    failures = []
    for lemma in LEMMAS:
        for rep in verify_lemma_grid(lemma, seed=0):
            if not rep.passed:
                failures.append((lemma, rep.point, rep.margin))
            if rep.relation == "==":
                dev = abs(rep.lhs - rep.rhs) / abs(rep.rhs)
                worst[lemma] = max(worst.get(lemma, 0.0), dev)
                assert dev <= eq_tol, (lemma, rep.point, dev)
            else:
                worst[lemma] = min(worst.get(lemma, np.inf), rep.margin)
                assert rep.margin >= -(ineq_tol + 2 * rep.lhs_error), \
                    (lemma, rep.point, rep.margin)
    detail = ", ".join(f"{k}:{v:.2e}" for k, v in sorted(worst.items()))
    _report(4, not failures,
            f"equalities within 1e-6, inequality margins >= -1e-9 ({detail})")


def test_criterion_05_i_rho_cross_check():
    ok = True
    details = []
    for d in (1, 2, 3):
        params = ModelParams(d=d, delta=2.0, p=1.0, A=1.0, profile=Profile.SURGERY)
        rep = verify_i_rho(params)
        ok &= rep.passed
        ok &= abs(rep.point["quad_over_paper"] - 2.0) < 1e-3
        details.append(f"d={d}: quad={rep.lhs:.4f} surface={rep.rhs:.4f} "
                       f"paper={rep.point['paper_value']:.4f}")
    d1 = verify_i_rho(ModelParams(d=1, delta=2.0, p=1.0, A=1.0,
                                  profile=Profile.SURGERY))
    ok &= abs(d1.lhs - 4.0) < 1e-3 and abs(d1.point["paper_value"] - 2.0) < 1e-12
    _report(5, ok, "; ".join(details) + " (factor-2 mismatch recorded)")


def test_criterion_06_degree_tail():
    params = ModelParams(d=2, gamma=0.5, beta=1.0, delta=2.0,
                         kernel=Kernel.PA, profile=Profile.POLYNOMIAL)
    domain = Torus(d=2, volume=100_000.0)
    pts = sample_ppp(domain, params, seed=2024)
    graph = build_graph_exact(pts, params, domain, seed=2024)
    fit = degree_tail_fit(graph)
    ok = fit.reliable and abs(fit.exponent - 3.0) <= 0.3
    _report(6, ok,
            f"n={len(pts)}, fitted exponent {fit.exponent:.3f} within 3 +- 0.3 "
            f"(decade [{fit.k_min}, {fit.k_max}])")


def test_criterion_07_subcritical_trend():
    params = ModelParams(d=1, gamma=0.25, beta=1.0, delta=3.0, p=0.1,
                         kernel=Kernel.PA, profile=Profile.POLYNOMIAL)
    assert params.p < 0.125  # below the closed-form bound (1-2g)/(4b)
    ests = [theta_estimate(params, L, L / 4.0, replications=12_000, seed=11)
            for L in (25.0, 50.0, 100.0)]
    separated = all(b.ci_high < a.ci_low for a, b in zip(ests, ests[1:]))
    detail = ", ".join(f"L={L}: {e.estimate:.4f} [{e.ci_low:.4f},{e.ci_high:.4f}]"
                       for L, e in zip((25, 50, 100), ests))
    _report(7, separated, f"reach frequency decreases with separated CIs ({detail})")


def test_criterion_08_supercritical_trend():
    params = ModelParams(d=1, gamma=0.8, beta=1.0, delta=2.0, p=0.05,
                         kernel=Kernel.PA, profile=Profile.POLYNOMIAL)
    ests = [theta_estimate(params, L, L / 4.0, replications=4000, seed=11)
            for L in (25.0, 50.0, 100.0)]
    no_sig_decrease = all(not (b.ci_high < a.ci_low)
                          for a, b in zip(ests, ests[1:]))
    detail = ", ".join(f"L={L}: {e.estimate:.4f} [{e.ci_low:.4f},{e.ci_high:.4f}]"
                       for L, e in zip((25, 50, 100), ests))
    _report(8, no_sig_decrease,
            f"reach frequency does not decrease within CI ({detail})")


def test_criterion_09_two_connection_bound():
    params = ModelParams(d=1, gamma=0.5, beta=1.0, delta=2.0, p=0.1, A=1.0,
                         kernel=Kernel.PA, profile=Profile.SURGERY)
    rng = np.random.default_rng(5)
    failures = 0
    for i in range(20):
        x, y = random_admissible_pair(params, rng)
        rep = verify_two_connection(params, x, y, replications=100_000,
                                    seed=1000 + i)
        failures += not rep.passed
    _report(9, failures == 0,
            f"LHS <= RHS + 2 SE on 20 random admissible configurations "
            f"({failures} failures)")


def test_criterion_10_greedy_chain_trend():
    params = ModelParams(d=1, gamma=0.8, beta=1.0, delta=2.0, p=0.5,
                         kernel=Kernel.MIN, profile=Profile.POLYNOMIAL)
    rows, summary = success_curve([0.1, 0.03, 0.01], K=3, replications=400,
                                  params=params, seed=42)
    no_sig_decrease = all(
        not (b["ci_high"] < a["ci_low"]) for a, b in zip(summary, summary[1:]))
    detail = ", ".join(f"s0={s['s0']}: {s['success_freq']:.3f}" for s in summary)
    _report(10, no_sig_decrease,
            f"chain success non-decreasing as s0 shrinks ({detail}; "
            f"structural hop checks enforced on every success)")


def test_criterion_11_monotone_coupling():
    params = ModelParams(d=1, gamma=0.5, beta=1.0, delta=2.0,
                         kernel=Kernel.PA, profile=Profile.POLYNOMIAL)
    p_grid = [0.1, 0.3, 0.5, 0.7, 0.9]
    L = 20.0
    violations = 0
    for rep in range(1000):
        rep_seed = derive_seed(404, 0, rep)
        base = _rooted_phi_graph(params, L, rep_seed)
        flags = []
        for p in p_grid:
            graph = _retained(base, p, rep_seed)
            flags.append(origin_cluster_stats(graph, L / 4.0).reaches_R)
        if any(a and not b for a, b in zip(flags, flags[1:])):
            violations += 1
    _report(11, violations == 0,
            f"shared retention variates: reach flags monotone in p over "
            f"1000 replications ({violations} violations)")


def test_criterion_12_determinism(tmp_path):
    config = ExperimentConfig.from_dict({
        "kind": "theta", "seed": 77, "replications": 25,
        "params": {"d": 1, "gamma": 0.6, "beta": 1.0, "delta": 2.0, "p": 0.4,
                   "kernel": "pa", "profile": "polynomial"},
        "L": 15.0,
    })
    run(config, tmp_path / "a")
    run(config, tmp_path / "b")
    same = (tmp_path / "a" / "theta.csv").read_bytes() == \
        (tmp_path / "b" / "theta.csv").read_bytes()
    _report(12, same, "rerun with the same master seed is byte-identical")
