"""
Tests für Breiten, die Shchepin-Konstruktion und den Schranken-Harness.
"""

import math

import numpy as np
import pytest

import complexes
import metrics
import plmaps
import widths
from laborlog import LaborError, UnsupportedDimension, set_quiet

set_quiet()

S2 = metrics.RoundSphere(2)


@pytest.fixture(scope="module")
def s2():
    return complexes.cross_polytope_sphere(2, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(23)


def test_bounds():
    assert widths.sphere_simplex_bound(2) == pytest.approx(2 * math.pi / 3)
    assert widths.ball_simplex_bound(2) == pytest.approx(math.sqrt(3))
    assert widths.ball_simplex_bound(3) == pytest.approx(math.sqrt(8 / 3))
    assert widths.floor_for(S2, "rho") == math.pi
    assert widths.floor_for(S2, "kappa") == math.pi / 2
    assert widths.floor_for(metrics.FlatTorus(), "rho") == 0.5
    with pytest.raises(LaborError):
        widths.floor_for(metrics.Euclidean(2), "sphere_simplex")


@pytest.mark.parametrize("n", [2, 3])
def test_shchepin_width_is_exact(n):
    f = widths.shchepin_map(n)
    bound = widths.ball_simplex_bound(n)
    rep = widths.map_width(f, samples=200, refine_rounds=1)
    assert rep.lower >= bound - 1e-6
    assert rep.upper <= bound + 1e-6
    assert rep.provenance["upper"] == "face-pair-enumeration"
    assert f.fiber_diameter(rep.witness_target) == pytest.approx(rep.lower, abs=1e-9)


def test_shchepin_tripod_target():
    f = widths.shchepin_map(2)
    assert f.target_kind == "polyhedron"
    assert len(f.target.vertices) == 4
    mids = np.array(f.source.meta["face_dim"]) == 1
    assert np.allclose(f.images[mids], 0.0)
    assert widths.face_pair_sup(f) == pytest.approx(math.sqrt(3), abs=1e-6)


def test_shchepin_dimension():
    with pytest.raises(UnsupportedDimension):
        widths.shchepin_map(4)


def test_projection_width_reaches_pi(s2):
    f = plmaps.pl_from_function(s2, plmaps.projection(2))
    rep = widths.map_width(f, samples=1000)
    assert rep.lower >= math.pi - 0.05
    assert np.linalg.norm(rep.witness_target) < 0.05
    assert rep.lower <= rep.upper <= math.pi + 1e-12


def test_constant_and_height_widths(s2):
    rep = widths.map_width(plmaps.constant_map(s2, [0.5]), samples=20, refine_rounds=0)
    assert rep.lower == pytest.approx(math.pi)
    assert rep.upper == pytest.approx(math.pi)
    rep = widths.map_width(plmaps.pl_from_function(s2, plmaps.height(2)), samples=100, refine_rounds=1)
    assert rep.lower == pytest.approx(math.pi, abs=1e-9)


def test_identity_width_is_zero():
    K = complexes.cross_polytope_sphere(2, 2)
    rep = widths.map_width(plmaps.identity_map(K), samples=30, refine_rounds=0)
    assert rep.lower == 0.0


def test_report_serialization(s2):
    rep = widths.map_width(plmaps.pl_from_function(s2, plmaps.height(2)), samples=20, refine_rounds=0)
    d = rep.to_dict()
    assert set(d) == {"map_id", "lower", "upper", "witness_target", "samples", "mesh_scale", "provenance"}
    assert d["samples"] >= 20


def test_harness_on_random_sphere_maps(rng):
    K = complexes.cross_polytope_sphere(2, 3)
    maps = [plmaps.pl_from_function(K, plmaps.random_polynomial(2, 2, rng), name=f"poly{i}") for i in range(3)]
    rows = widths.width_bound_harness(S2, maps, "rho", samples=200, refine_rounds=1)
    assert [r.map_id for r in rows] == ["poly0", "poly1", "poly2"]
    assert all(r.passed for r in rows)
    assert all(r.lower <= r.upper for r in rows)


def test_harness_on_tripod_maps(rng):
    K = complexes.cross_polytope_sphere(2, 3)
    maps = [plmaps.height_tripod(K)] + [plmaps.random_tripod_map(K, rng) for _ in range(2)]
    rows = widths.width_bound_harness(S2, maps, "kappa", samples=200, refine_rounds=1)
    assert all(r.passed for r in rows)


def test_harness_on_torus_maps(rng):
    K = complexes.flat_torus(3)
    maps = [plmaps.pl_from_function(K, plmaps.random_trig(2, rng), name=f"trig{i}") for i in range(2)]
    rows = widths.width_bound_harness(metrics.FlatTorus(), maps, "rho", samples=200, refine_rounds=1)
    assert all(r.passed for r in rows)


def test_harness_rejects_foreign_source(s2):
    f = widths.shchepin_map(2)
    with pytest.raises(LaborError):
        widths.width_bound_harness(S2, [f], "rho")


def test_half_sphere_equator():
    t = np.linspace(0, 2 * math.pi, 33)[:-1]
    P = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    v = widths.half_sphere_test(P)
    assert v.kind == "EvadesAllHalfSpheres"
    assert v.boundary


def test_half_sphere_north_cluster(rng):
    P = metrics._normalize(np.array([0, 0, 1.0]) + 0.1 * rng.standard_normal((20, 3)))
    v = widths.half_sphere_test(P)
    assert v.kind == "InsideOpenHalfSphere"
    assert v.direction[2] > 0.95


def test_half_sphere_cap_boundary(rng):
    c = metrics.random_points(S2, 1, rng)[0]
    B = metrics.tangent_basis(c)
    t = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    V = np.stack([np.cos(t), np.sin(t)], axis=1) @ B
    P = metrics.exp_map(S2, c, V)
    v = widths.half_sphere_test(P)
    assert v.kind == "InsideOpenHalfSphere"
    assert v.radius == pytest.approx(1.0, abs=1e-6)
    assert metrics.distance(S2, v.direction, c) < 1e-6
    # Richtungsgitter: es gibt ein u mit u . p > 0 für alle p
    U = metrics.random_points(S2, 20000, rng)
    assert np.any((P @ U.T).min(axis=0) > 0)
