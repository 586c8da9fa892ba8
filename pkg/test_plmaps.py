"""
Tests für PL-Abbildungen, Fasern, Grad und Vielfachheit.
"""

import math

import numpy as np
import pytest

import complexes
import metrics
import plmaps
from plmaps import PLMap
from laborlog import InvalidImage, NonGenericTarget, DimensionMismatch, WrongCodimension, set_quiet

set_quiet()


@pytest.fixture(scope="module")
def s2():
    return complexes.cross_polytope_sphere(2, 3)


@pytest.fixture(scope="module")
def s1():
    return complexes.cross_polytope_sphere(1, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_identity_evaluates_to_itself(s2, rng):
    f = plmaps.identity_map(s2)
    X = metrics.random_points(metrics.RoundSphere(2), 50, rng)
    assert np.allclose(f.evaluate(X), X, atol=1e-12)


def test_constant_map(s2):
    f = plmaps.constant_map(s2, [0.3, -0.2])
    assert f.is_constant
    assert np.all(f.degenerate)
    assert f.fiber([1.0, 1.0]).points == []


def test_invalid_images(s2):
    with pytest.raises(InvalidImage):
        plmaps.make_pl_map(s2, metrics.Euclidean(2), np.zeros((3, 2)))
    with pytest.raises(InvalidImage):
        plmaps.make_pl_map(s2, s2, 2.0 * s2.vertices)
    with pytest.raises(InvalidImage):
        PLMap(s2, complexes.skeleton_cone(2), np.ones((len(s2.vertices), 2)))


def test_projection_fiber_at_origin_is_near_poles(s2, rng):
    f = plmaps.pl_from_function(s2, plmaps.projection(2))
    fib = plmaps.regular_fiber(f, np.array([1e-4, 2e-4]), rng)
    pts = fib.all_points()
    assert len(pts) == 2
    assert np.allclose(np.abs(pts[:, 2]), 1.0, atol=1e-3)
    assert metrics.set_diameter(metrics.RoundSphere(2), pts) > math.pi - 0.01


def test_height_fiber_is_equator_loop():
    K = complexes.cross_polytope_sphere(2, 4)
    f = plmaps.pl_from_function(K, plmaps.height(2))
    fib = f.fiber(np.array([1e-3]))
    assert len(fib.components) == 1
    loop = fib.components[0]
    assert loop.closed
    assert loop.length == pytest.approx(2 * math.pi, abs=0.02)


def test_height_fiber_near_pole_is_small():
    K = complexes.cross_polytope_sphere(2, 4)
    f = plmaps.pl_from_function(K, plmaps.height(2))
    lengths, total = plmaps.fiber_length(f, np.array([0.999]))
    assert len(lengths) == 1
    assert total < 2 * math.pi * math.sqrt(1 - 0.999 ** 2) + 0.01


def test_fiber_at_vertex_image_is_not_generic(s2):
    f = plmaps.pl_from_function(s2, plmaps.height(2))
    with pytest.raises(NonGenericTarget):
        f.fiber(np.array([0.0]))


def test_constant_map_fiber_empty_off_value(s1):
    f = plmaps.constant_map(s1, [0.5])
    assert f.fiber(np.array([0.2])).points == []


def test_degree_examples(s1, s2):
    assert plmaps.mod2_degree(plmaps.identity_map(s2)) == 1
    assert plmaps.mod2_degree(plmaps.wrap_map(s1, 2)) == 0
    assert plmaps.mod2_degree(plmaps.wrap_map(s1, 3)) == 1
    const = PLMap(s2, s2, np.tile([0.0, 0.0, 1.0], (len(s2.vertices), 1)))
    assert plmaps.mod2_degree(const) == 0


def test_degree_needs_equal_dimensions(s2):
    f = plmaps.pl_from_function(s2, plmaps.height(2))
    with pytest.raises(DimensionMismatch):
        plmaps.mod2_degree(f)


def test_degree_stable_over_regular_values(s2, rng):
    f = plmaps.sphere_self_map(s2, plmaps.square_map(), "square")
    parities = set()
    for _ in range(30):
        y = metrics.random_points(metrics.RoundSphere(2), 1, rng)[0]
        parities.add(plmaps.regular_fiber(f, y, rng).total_weight % 2)
    assert parities == {0}


def test_codim0_weight_parity_matches_degree(s1, rng):
    f = plmaps.random_circle_map(s1, 1, rng, amplitude=0.8)
    deg = plmaps.mod2_degree(f)
    for _ in range(20):
        y = metrics.random_points(metrics.RoundSphere(1), 1, rng)[0]
        assert plmaps.regular_fiber(f, y, rng).total_weight % 2 == deg


def test_multiplicity_examples(s1, rng):
    assert plmaps.multiplicity(plmaps.pl_from_function(s1, plmaps.height(1)), 20, rng) == 2
    assert plmaps.multiplicity(plmaps.identity_map(s1), 20, rng) == 1


def test_multiplicity_two_humps(rng):
    K = complexes.cross_polytope_sphere(1, 5)
    f = plmaps.pl_from_function(K, lambda X: X[:, :1] ** 2 - X[:, 1:2] ** 2)
    # Brute-Force: Vorzeichenwechsel von f - y entlang des Kreises zählen
    order = complexes.cycle_order(K)
    vals = f.images[order, 0]
    ys = np.linspace(-0.99, 0.99, 397)
    counts = [int(np.sum(np.diff(np.sign(np.append(vals, vals[0]) - y)) != 0)) for y in ys]
    assert max(counts) == 4
    assert plmaps.multiplicity(f, 40, rng) == 4


def test_multiplicity_needs_codim0(s2):
    with pytest.raises(WrongCodimension):
        plmaps.multiplicity(plmaps.pl_from_function(s2, plmaps.height(2)), 3)


def test_dumbbell_components_match_rechaining():
    K = complexes.cross_polytope_sphere(2, 4)
    # Zwei Buckel um die Pole: Faser aus zwei Schleifen
    f = plmaps.pl_from_function(K, lambda X: X[:, 2:3] ** 2 - 0.3 * X[:, 0:1] ** 2)
    fib = f.fiber(np.array([0.41]))
    assert len(fib.components) == 2
    for comp in fib.components:
        assert comp.closed
        P = np.vstack([comp.points, comp.points[:1]])
        seg = metrics.distances(metrics.RoundSphere(2), P[:-1], P[1:])
        assert comp.length == pytest.approx(seg.sum(), abs=1e-12)
    assert len({s for c in fib.components for s in c.simplices}) == sum(len(c.simplices) for c in fib.components)


def test_loops_close():
    K = complexes.cross_polytope_sphere(2, 3)
    f = plmaps.pl_from_function(K, plmaps.height(2))
    for y in (-0.5, 0.123, 0.77):
        for comp in f.fiber(np.array([y])).components:
            assert comp.closed
            assert np.allclose(f.evaluate(comp.points)[:, 0], y, atol=1e-9)


def test_fiber_points_sees_whole_fiber_at_critical_value(s2):
    f = plmaps.pl_from_function(s2, plmaps.projection(2))
    P = f.fiber_points(np.zeros(2))
    assert metrics.set_diameter(metrics.RoundSphere(2), P) == pytest.approx(math.pi, abs=1e-12)


def test_fiber_continuity(rng):
    K = complexes.cross_polytope_sphere(2, 3)
    f = plmaps.pl_from_function(K, plmaps.height(2))
    a = f.fiber(np.array([0.3001])).components[0].points
    b = f.fiber(np.array([0.3002])).components[0].points
    d = metrics.pairwise(metrics.RoundSphere(2), np.vstack([a, b]))[: len(a), len(a):]
    assert max(d.min(axis=1).max(), d.min(axis=0).max()) < 1e-3


def test_tripod_map_fibers(s2):
    f = plmaps.height_tripod(s2)
    assert f.simplicial
    cone = f.target
    y = 0.2 * cone.vertices[2]
    fib = f.fiber(y)
    assert len(fib.components) == 1
    assert fib.components[0].closed
    with pytest.raises(NonGenericTarget):
        f.fiber(np.zeros(2))


def test_torus_map_fiber():
    K = complexes.flat_torus(3)
    f = plmaps.pl_from_function(K, lambda X: np.sin(2 * np.pi * X[:, :1]))
    fib = f.fiber(np.array([0.1]))
    # zwei Kreise u = const, jeweils Länge 1
    assert len(fib.components) == 2
    for comp in fib.components:
        assert comp.closed
        assert comp.length == pytest.approx(1.0, abs=1e-9)


def test_evaluate_on_ball_matches_vertices():
    K = complexes.simplex_ball(2, 1)
    f = plmaps.pl_from_function(K, lambda X: X[:, :1] + 2 * X[:, 1:2])
    assert np.allclose(f.evaluate(K.vertices), f.images, atol=1e-12)


def test_fold_faces_of_height_on_circle(s1):
    f = plmaps.pl_from_function(s1, plmaps.height(1))
    crit = plmaps.critical_values(f)
    assert sorted(crit[:, 0, 0].round(12).tolist()) == [-1.0, 1.0]


def test_json_roundtrip(s1):
    f = plmaps.wrap_map(s1, 2)
    g = plmaps.from_json(f.to_json())
    assert np.array_equal(g.images, f.images)
    h = plmaps.from_json(plmaps.pl_from_function(s1, plmaps.height(1)).to_json())
    assert h.target_kind == "euclidean"


def test_make_pl_map_records_pieces(s2):
    f = plmaps.make_pl_map(s2, s2, s2.vertices, name="id")
    assert f.name == "id"
    assert f.pieces.shape == (len(s2.top), 3, 3)
    assert not f.degenerate.any()
