import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monocheck.catalog import (GeneratorSpec, generate_random, get_operator,
                               grid_from_text, sample_operator)
from monocheck.checkers import (check_global_monotone, check_local_monotone,
                                check_region_monotone, hypomonotonicity_modulus,
                                local_maximality_probe, local_radius, maximality_probe,
                                segment_scan)
from monocheck.errors import ContractError, PreconditionError
from monocheck.geometry import (DomainBall, GraphPoint, NeighborhoodSpec, SampledGraph, Slice,
                                monotonicity_margin)


def brute_pairs(graph):
    """(i, j, margin) for every unordered pair, lexicographic order."""
    pts = graph.points
    return [(i, j, monotonicity_margin(pts[i], pts[j]))
            for i, j in itertools.combinations(range(len(pts)), 2)]


def brute_verdict(graph, tol=1e-9):
    pairs = brute_pairs(graph)
    bad = [(i, j, m) for i, j, m in pairs if m < -tol]
    worst = min(pairs, key=lambda t: (t[2], t[0], t[1])) if pairs else None
    return (bad[0] if bad else None), worst


@pytest.fixture
def step_graph():
    return sample_operator(get_operator("remark-4.6"), grid_from_text("-1:1:0.5"))


@pytest.fixture
def ex51():
    return sample_operator(get_operator("example-5.1"), grid_from_text("0:1:0.25"))


def test_example_5_1_refuted(ex51):
    rep = check_global_monotone(ex51)
    first, worst = brute_verdict(ex51)
    assert rep.refuted and rep.witness == first[:2] and rep.margin == first[2]
    assert rep.min_margin == -1.0
    i, j = rep.min_pair
    assert {tuple(ex51.X[i]), tuple(ex51.X[j])} == {(1.0, 0.0), (0.0, 1.0)}


def test_identity_holds():
    g = sample_operator(get_operator("identity", {"dim": 2}), grid_from_text("-1:1:0.5"))
    rep = check_global_monotone(g)
    assert rep.holds and rep.min_margin >= 0 and rep.witness is None


def test_step_witness(step_graph):
    rep = check_global_monotone(step_graph)
    assert rep.refuted and rep.witness == (0, 3) and rep.margin == -1.5
    assert brute_verdict(step_graph)[0] == (0, 3, -1.5)
    assert rep.pairs_checked == 10


def test_empty_graph_inconclusive():
    rep = check_global_monotone(SampledGraph(1, [], []))
    assert rep.status == "inconclusive"


def test_negative_tolerance_rejected(step_graph):
    with pytest.raises(ContractError):
        check_global_monotone(step_graph, -1.0)


def test_report_invariants_randomized():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(1, 3))
        N = int(rng.integers(2, 25))
        g = SampledGraph(n, rng.normal(size=(N, n)), rng.normal(size=(N, n)))
        rep = check_global_monotone(g)
        first, worst = brute_verdict(g)
        if first is None:
            assert rep.holds and rep.witness is None
        else:
            assert rep.witness == first[:2] and rep.margin == first[2] and rep.margin < -1e-9
        assert (rep.min_margin, *rep.min_pair) == (worst[2], worst[0], worst[1])


def test_thread_determinism():
    rng = np.random.default_rng(5)
    for _ in range(30):
        N = int(rng.integers(2, 300))
        g = SampledGraph(2, rng.normal(size=(N, 2)), rng.normal(size=(N, 2)))
        reports = [check_global_monotone(g, threads=t).to_dict() for t in (1, 2, 3, 8)]
        assert all(r == reports[0] for r in reports)


def test_local_step_at_origin(step_graph):
    spec = NeighborhoodSpec(GraphPoint((0,), (0,)), 0.9)
    rep = check_local_monotone(step_graph, spec)
    assert rep.holds and rep.restriction_size == 2


def test_local_single_point_and_empty(step_graph):
    spec = NeighborhoodSpec(GraphPoint((0,), (0,)), 0.1)
    assert check_local_monotone(step_graph, spec).holds
    far = NeighborhoodSpec(GraphPoint((9,), (9,)), 0.1)
    assert check_local_monotone(step_graph, far).status == "inconclusive"


def test_example_5_1_near_origin_pair():
    g = SampledGraph.from_points([GraphPoint((0.2, 0), (0, 0)), GraphPoint((0, 0.3), (-0.3, 0))])
    rep = check_local_monotone(g, NeighborhoodSpec(GraphPoint((0, 0), (0, 0)), 0.5))
    assert rep.holds and rep.min_margin == pytest.approx(0.06, abs=1e-15)


def test_example_5_1_regions(ex51):
    for regions in ([Slice(0, 0.0)], [Slice(1, 0.0)], [DomainBall((0.0, 0.0), 1 / 3)]):
        rep = check_region_monotone(ex51, regions)
        assert rep.holds and rep.min_margin >= 0


def test_local_radius_step(step_graph):
    rho = local_radius(step_graph, 2)
    assert 0.9 < rho < math.sqrt(1.25)
    # the brute-force answer: every distinct distance below the violating point's
    dists = sorted({float(np.hypot(*(step_graph.stacked[k] - step_graph.stacked[2])))
                    for k in range(5)})
    assert rho == max(d for d in dists if d < math.sqrt(1.25))


def test_local_radius_sentinels():
    g = sample_operator(get_operator("identity"), grid_from_text("-1:1:0.5"))
    assert local_radius(g, 0) == math.inf
    bad = SampledGraph(1, [[0.0], [0.1], [5.0]], [[0.0], [-0.1], [5.0]])
    assert local_radius(bad, 0) == 0.0
    with pytest.raises(ContractError):
        local_radius(g, 99)


def test_local_radius_matches_bruteforce_randomized():
    rng = np.random.default_rng(8)
    for _ in range(100):
        N = int(rng.integers(2, 15))
        g = SampledGraph(1, rng.integers(-3, 4, (N, 1)) * 0.5, rng.integers(-3, 4, (N, 1)) * 0.5)
        c = int(rng.integers(N))
        d = np.sqrt(((g.stacked - g.stacked[c]) ** 2).sum(axis=1))
        expect = math.inf
        best = 0.0
        for level in np.unique(d):
            sub = g.subgraph(np.flatnonzero(d <= level))
            if brute_verdict(sub)[0] is not None:
                expect = best
                break
            best = float(level)
        assert local_radius(g, c) == expect


def test_restriction_monotonicity():
    rng = np.random.default_rng(4)
    for seed in range(100):
        g = generate_random(GeneratorSpec("monotone-pwl", seed))
        assert check_global_monotone(g).holds
        for _ in range(5):
            c = g.point(int(rng.integers(len(g))))
            assert check_local_monotone(g, NeighborhoodSpec(c, float(rng.uniform(0.05, 2)))).holds


def test_modulus_examples(step_graph):
    est = hypomonotonicity_modulus(step_graph)
    assert est.r_hat == 2.0 and est.attaining_pair == (2, 3)
    g = sample_operator(get_operator("linear", {"slope": -2}), grid_from_text("-1:1:0.25"))
    assert hypomonotonicity_modulus(g).r_hat == pytest.approx(2.0, rel=1e-12)
    mono = generate_random(GeneratorSpec("monotone-pwl", 1))
    assert hypomonotonicity_modulus(mono).r_hat == 0.0


@pytest.mark.parametrize("M", [1, 10, 100])
def test_modulus_truncated_divergence(M):
    g = sample_operator(get_operator("remark-6.4-2-truncated", {"bound": M}),
                        grid_from_text("0:1:1"))
    assert hypomonotonicity_modulus(g).r_hat == pytest.approx(2 * M, rel=1e-9)


def test_modulus_vertical_graph():
    g = SampledGraph(1, [[0.0], [0.0]], [[0.0], [1.0]])
    est = hypomonotonicity_modulus(g)
    assert est.r_hat == 0.0 and "vertical" in est.note


def test_modulus_matches_bruteforce_randomized():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(1, 3))
        N = int(rng.integers(2, 20))
        g = SampledGraph(n, rng.normal(size=(N, n)), rng.normal(size=(N, n)))
        expect = 0.0
        for i, j in itertools.combinations(range(N), 2):
            dx = g.X[i] - g.X[j]
            m = float(np.dot(g.Y[i] - g.Y[j], dx))
            expect = max(expect, -m / float(np.dot(dx, dx)))
        assert hypomonotonicity_modulus(g, 0.0).r_hat == pytest.approx(expect, rel=1e-12)


def test_shift_identity_on_linear_graphs():
    for slope in (-3.0, -1.0, -0.25):
        g = sample_operator(get_operator("linear", {"slope": slope}), grid_from_text("-1:1:0.2"))
        r0 = hypomonotonicity_modulus(g).r_hat
        for r in (0.0, 0.5, 1.0, 4.0):
            shifted = hypomonotonicity_modulus(g.shifted(r)).r_hat
            assert shifted == pytest.approx(max(0.0, r0 - r), abs=1e-9)


def test_shift_by_modulus_restores_monotonicity():
    for seed in range(100):
        g = generate_random(GeneratorSpec("hypo-shift", seed, {"r": 1.5}))
        r_hat = hypomonotonicity_modulus(g).r_hat
        assert r_hat <= 1.5 + 1e-9
        assert check_global_monotone(g.shifted(r_hat)).holds


def test_probe_open_interval():
    g = sample_operator(get_operator("remark-6.4-1"), grid_from_text("-1:1:0.1"))
    probes = [GraphPoint((x,), (y,)) for x in (1.0, 0.5) for y in (0.0, 0.5)]
    res = maximality_probe(g, probes)
    assert GraphPoint((1.0,), (0.0,)) in res.addable
    # (1, 0.5) has margins 0.5 (1 - x) >= 0; (0.5, 0) is already present and
    # (0.5, 0.5) violates against x > 0.5
    assert res.addable == [GraphPoint((1.0,), (0.0,)), GraphPoint((1.0,), (0.5,))]
    assert res.present == [False, False, True, False]


def test_probe_empty_and_identity():
    g = sample_operator(get_operator("identity"), grid_from_text("-1:1:0.05"))
    assert maximality_probe(g, []).addable == []
    assert maximality_probe(g, [GraphPoint((0,), (1,))]).addable == []


def test_probe_soundness_randomized():
    rng = np.random.default_rng(12)
    for seed in range(200):
        g = generate_random(GeneratorSpec("monotone-pwl", seed, {"points": 10}))
        probes = [GraphPoint((x,), (y,)) for x, y in rng.uniform(-2, 2, size=(40, 2))]
        for p in maximality_probe(g, probes).addable:
            assert check_global_monotone(g.with_points([p])).holds


def test_local_probe_examples():
    absg = sample_operator(get_operator("abs-subdifferential", {"resolution": 8}),
                           grid_from_text("-1:1:0.25"))
    spec = NeighborhoodSpec(GraphPoint((0,), (0,)), 0.6)
    probes = [GraphPoint((0.0,), (y,)) for y in np.linspace(-1, 1, 9)]
    assert local_maximality_probe(absg, spec, probes).addable == []

    g = sample_operator(get_operator("remark-6.4-1"), grid_from_text("-1:1:0.1"))
    spec = NeighborhoodSpec(GraphPoint((0.99,), (0,)), 0.5)
    res = local_maximality_probe(g, spec, [GraphPoint((5,), (5,)), GraphPoint((1,), (0,))])
    assert res.addable_indices == [1]
    far = NeighborhoodSpec(GraphPoint((-5,), (0,)), 0.5)
    assert local_maximality_probe(g, far, [GraphPoint((1,), (0,))]).addable == []


def test_segment_scan_examples():
    rep = segment_scan(get_operator("example-3.3-2"), (-1,), (1,), 100)
    assert rep.refuted
    assert segment_scan(get_operator("identity", {"dim": 2}), (-1, 2), (3, 0.5), 50).holds
    with pytest.raises(PreconditionError):
        segment_scan(get_operator("example-3.3-1"), (-1,), (1,), 100)
    with pytest.raises(PreconditionError):
        segment_scan(get_operator("abs-subdifferential"), (-1,), (1,), 100)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 8))
def test_global_verdict_thread_independent(seed, threads):
    g = generate_random(GeneratorSpec("step", seed, {"points": 40}))
    assert check_global_monotone(g, threads=threads) == check_global_monotone(g)
