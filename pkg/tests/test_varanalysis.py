import math

import numpy as np
import pytest

from monocheck.catalog import GeneratorSpec, generate_random, get_operator, grid_from_text, \
    sample_operator
from monocheck.errors import ContractError
from monocheck.geometry import SampledGraph
from monocheck.varanalysis import (ConeParams, check_max_monotone_via_coderivative,
                                   closure_probe_points, coderivative_psd_check,
                                   default_angular_resolution, edge_points,
                                   regular_normal_directions, sphere_directions)

EXACT = ConeParams(slack=1e-9, angular_resolution=720)


def line(slope, step="0.05"):
    return sample_operator(get_operator("linear", {"slope": slope}), grid_from_text(f"-1:1:{step}"))


def test_sphere_directions_are_unit_and_deterministic():
    for d in (2, 3, 4):
        D = sphere_directions(d, default_angular_resolution(d))
        assert np.allclose(np.linalg.norm(D, axis=1), 1.0)
        assert np.array_equal(D, sphere_directions(d, default_angular_resolution(d)))
    assert default_angular_resolution(2) == 720
    assert default_angular_resolution(4) == 20 * 4 ** 4
    with pytest.raises(ContractError):
        sphere_directions(6, 10)


def test_params_validation():
    with pytest.raises(ContractError):
        ConeParams(angular_resolution=3)
    with pytest.raises(ContractError):
        ConeParams(locality_radius=0.0)


def test_half_plane_boundary():
    xs, ys = np.meshgrid(np.linspace(-1, 1, 21), np.linspace(-1, 0, 11), indexing="ij")
    g = SampledGraph(1, xs.reshape(-1, 1), ys.reshape(-1, 1))
    base = int(np.flatnonzero((g.X[:, 0] == 0) & (g.Y[:, 0] == 0))[0])
    ds = regular_normal_directions(g, base, ConeParams(locality_radius=0.3, angular_resolution=720))
    ids = set(ds.direction_ids)
    assert 180 in ids          # (0, 1)
    assert 0 not in ids and 540 not in ids       # (1, 0), (0, -1)
    assert not ds.vacuous


def test_line_normals():
    g = line(1.0)
    ds = regular_normal_directions(g, 20, EXACT)
    assert ds.direction_ids == [270, 630]     # 135 and 315 degrees
    assert np.allclose(np.abs(ds.directions), math.sqrt(0.5))


def test_isolated_point_vacuous():
    g = SampledGraph(1, [[0.0], [10.0]], [[0.0], [10.0]])
    ds = regular_normal_directions(g, 0, ConeParams(locality_radius=1.0))
    assert ds.vacuous and ds.neighbor_count == 0
    rep = coderivative_psd_check(SampledGraph(1, [[0.0]], [[0.0]]), 0)
    assert rep.status == "inconclusive"


def test_psd_on_lines():
    rep = coderivative_psd_check(line(1.0), 20, EXACT)
    assert rep.status == "psd"
    rep = coderivative_psd_check(line(-1.0), 20, EXACT)
    assert rep.status == "violated"
    assert rep.value == pytest.approx(-0.5, abs=1e-12)
    z, w = rep.violating_direction
    assert rep.value < -EXACT.slack and np.dot(z, w) == pytest.approx(rep.value)


def test_identity_psd_everywhere_negated_violated():
    g = line(1.0)
    edges = edge_points(g)
    for i in range(len(g)):
        rep = coderivative_psd_check(g, i, EXACT)
        assert rep.status == ("inconclusive" if edges[i] else "psd")
    neg = line(-1.0)
    for i in range(1, len(neg) - 1):
        assert coderivative_psd_check(neg, i, EXACT).status == "violated"


def test_cone_soundness_exhaustive():
    rng = np.random.default_rng(9)
    for _ in range(20):
        g = SampledGraph(1, rng.uniform(-1, 1, (30, 1)), rng.uniform(-1, 1, (30, 1)))
        params = ConeParams(locality_radius=0.5, slack=1e-6, angular_resolution=90)
        for i in range(len(g)):
            ds = regular_normal_directions(g, i, params)
            for v in ds.directions:
                for u in g.stacked:
                    d = u - g.stacked[i]
                    r = float(np.linalg.norm(d))
                    if 0 < r <= 0.5:
                        assert float(v @ d) <= 1e-6 * r + 1e-15


def test_shrinking_radius_keeps_directions():
    g = generate_random(GeneratorSpec("step", 3))
    for i in range(len(g)):
        big = regular_normal_directions(g, i, ConeParams(locality_radius=1.0, angular_resolution=360))
        small = regular_normal_directions(g, i, ConeParams(locality_radius=0.3,
                                                           angular_resolution=360))
        assert set(big.direction_ids) <= set(small.direction_ids)


def mesh_radius(g):
    """1.5 times the largest gap between consecutive points in path order."""
    gaps = np.linalg.norm(np.diff(g.stacked, axis=0), axis=1)
    return 1.5 * float(gaps.max())


def test_monotone_graphs_never_violated():
    # staircase samples are emitted in path order; a mesh-adapted radius gives
    # every interior point neighbours on both sides
    for seed in range(300):
        g = generate_random(GeneratorSpec("monotone-pwl", seed))
        params = ConeParams(slack=1e-9, locality_radius=mesh_radius(g))
        for i in range(len(g)):
            assert coderivative_psd_check(g, i, params).status != "violated", (seed, i)


def test_pipeline_identity():
    rep = check_max_monotone_via_coderivative(line(1.0), EXACT)
    assert rep.holds
    assert rep.detail["modulus"] == 0.0 and rep.detail["violated_points"] == 0
    assert rep.detail["caveat"] is False


def test_pipeline_step_refuted():
    g = sample_operator(get_operator("remark-4.6"), grid_from_text("-1:1:0.5"))
    rep = check_max_monotone_via_coderivative(g)
    assert rep.refuted and rep.witness == (2, 90) and rep.margin < 0
    assert rep.detail["modulus"] == 2.0
    # a tighter locality radius drops (1, -1) and admits directions near (1, 1/2)
    rep = check_max_monotone_via_coderivative(g, ConeParams(locality_radius=1.2))
    index, did = rep.witness
    assert index == 2 and did == 54          # 27 degrees
    assert abs(did * 0.5 - math.degrees(math.atan(0.5))) < 0.5


def test_pipeline_open_interval_caveat():
    g = sample_operator(get_operator("remark-6.4-1"), grid_from_text("-1:1:0.1"))
    assert g.window == ((-1.0,), (1.0,))
    probes = closure_probe_points(g)
    assert any(p.x == (1.0,) and p.y == (0.0,) for p in probes)
    rep = check_max_monotone_via_coderivative(g)
    assert rep.holds and rep.detail["caveat"] is True
    assert {"x": [1.0], "y": [0.0]} in rep.detail["caveat_points"]


def test_pipeline_inconclusive_when_sparse():
    g = SampledGraph(1, [[0.0], [10.0], [20.0]], [[0.0], [10.0], [20.0]])
    rep = check_max_monotone_via_coderivative(g, ConeParams(locality_radius=1.0))
    assert rep.status == "inconclusive"
