"""
Tests für die Triangulierungen der Modellräume.
"""

import json
import math
import itertools

import numpy as np
import pytest

import complexes
import metrics
from complexes import (
    cross_polytope_sphere, simplex_ball, flat_torus, skeleton_cone,
    fundamental_cycle_mod2, boundary_mod2, euler_characteristic,
)
from laborlog import UnsupportedDimension, NotClosedManifold, InvalidComplex, set_quiet

set_quiet()


def test_circle_square():
    K = cross_polytope_sphere(1, 0)
    assert K.count(0) == 4
    assert K.count(1) == 4


def test_octahedron():
    K = cross_polytope_sphere(2, 0)
    assert (K.count(0), K.count(1), K.count(2)) == (6, 12, 8)
    assert euler_characteristic(K) == 2


@pytest.mark.parametrize("n,level", [(1, 3), (2, 2), (2, 3), (3, 1)])
def test_sphere_refinement_invariants(n, level):
    K = cross_polytope_sphere(n, level)
    assert np.allclose(np.linalg.norm(K.vertices, axis=1), 1.0, atol=1e-12)
    assert euler_characteristic(K) == (2 if n % 2 == 0 else 0)
    assert complexes.is_closed_manifold(K)


@pytest.mark.parametrize("n,level", [(2, 2), (3, 1)])
def test_sphere_antipodal_symmetry(n, level):
    K = cross_polytope_sphere(n, level)
    anti = complexes.antipode_index(K)
    assert np.allclose(K.vertices[anti], -K.vertices, atol=1e-15)
    top = set(K.simplices[n])
    for s in top:
        assert tuple(sorted(anti[list(s)])) in top


def test_sphere_dimension_range():
    with pytest.raises(UnsupportedDimension):
        cross_polytope_sphere(4, 0)
    with pytest.raises(UnsupportedDimension):
        cross_polytope_sphere(0, 0)


def test_cycle_order_runs_around_circle():
    K = cross_polytope_sphere(1, 2)
    order = complexes.cycle_order(K)
    edges = set(K.simplices[1])
    for a, b in zip(order, np.roll(order, -1)):
        assert tuple(sorted((int(a), int(b)))) in edges


@pytest.mark.parametrize("n,edge", [(2, math.sqrt(3.0)), (3, math.sqrt(8.0 / 3.0))])
def test_ball_inscribed_simplex(n, edge):
    K = simplex_ball(n, 0)
    D = K.vertices[K.meta["delta"]]
    for a, b in itertools.combinations(range(n + 1), 2):
        assert np.linalg.norm(D[a] - D[b]) == pytest.approx(edge, abs=1e-12)
    assert edge == pytest.approx(math.sqrt((2 * n + 2) / n), abs=1e-12)


@pytest.mark.parametrize("n,layers", [(2, 0), (2, 2), (3, 0), (3, 1)])
def test_ball_inside_unit_ball(n, layers):
    K = simplex_ball(n, layers)
    assert np.all(np.linalg.norm(K.vertices, axis=1) <= 1.0 + 1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_ball_is_a_pseudomanifold_with_boundary(n):
    K = simplex_ball(n, 1)
    counts = {}
    for s in K.simplices[n]:
        for f in itertools.combinations(s, n):
            counts[f] = counts.get(f, 0) + 1
    assert set(counts.values()) <= {1, 2}
    # Boundary faces lie on the unit sphere
    for f, c in counts.items():
        if c == 1:
            assert np.allclose(np.linalg.norm(K.vertices[list(f)], axis=1), 1.0, atol=1e-12)
    assert euler_characteristic(K) == 1


@pytest.mark.parametrize("n", [2, 3])
def test_ball_contains_barycentric_subdivision(n):
    K = simplex_ball(n, 0)
    base = np.array(K.meta["base"])
    inner = {i for i in range(len(base)) if base[i] == i}
    assert len(inner) == 2 ** (n + 1) - 1
    flags = [s for s in K.simplices[n] if set(s) <= inner]
    assert len(flags) == math.factorial(n + 1)


def test_ball_tiles_its_polytope():
    # Summe der Dreiecksflächen = Fläche des Sechsecks aus Ecken und Gegenpunkten
    K = simplex_ball(2, 0)
    area = sum(complexes._volume(K.vertices[list(s)]) for s in K.simplices[2])
    hexagon = 6 * 0.5 * math.sin(math.pi / 3)
    assert area == pytest.approx(hexagon, abs=1e-12)


def test_ball_unsupported():
    with pytest.raises(UnsupportedDimension):
        simplex_ball(4, 0)


def test_torus_euler_and_links():
    K = flat_torus(1)
    assert euler_characteristic(K) == 0
    assert complexes.is_closed_manifold(K)


def test_torus_edges_short():
    K = flat_torus(2)
    assert complexes.edge_lengths(K).max() < 0.5


def test_fundamental_cycle_octahedron():
    K = cross_polytope_sphere(2, 0)
    z = fundamental_cycle_mod2(K)
    assert len(z.coefficients) == 8
    assert np.all(z.coefficients == 1)
    assert boundary_mod2(z).is_zero()


def test_fundamental_cycle_torus():
    assert boundary_mod2(fundamental_cycle_mod2(flat_torus(1))).is_zero()


def test_fundamental_cycle_needs_closed_manifold():
    with pytest.raises(NotClosedManifold):
        fundamental_cycle_mod2(simplex_ball(2, 0))


def test_boundary_of_single_triangle():
    K = cross_polytope_sphere(2, 0)
    c = np.zeros(K.count(2), dtype=np.uint8)
    c[0] = 1
    b = boundary_mod2(complexes.Mod2Chain(K, 2, c))
    assert b.coefficients.sum() == 3
    assert boundary_mod2(b).is_zero()


def test_skeleton_cone_tripod():
    T = skeleton_cone(2)
    assert T.dimension == 1
    assert T.count(1) == 3
    assert np.allclose(T.vertices[0], 0.0)


def test_realize_torus_wraps():
    K = flat_torus(1)
    s = next(s for s in K.simplices[2] if np.ptp(K.vertices[list(s)][:, 0]) > 0.5)
    p = complexes.realize(K, s, [1 / 3, 1 / 3, 1 / 3])
    assert np.all((p >= 0) & (p < 1))
    d = metrics.distances(metrics.FlatTorus(), K.vertices[list(s)], p[None, :])
    assert d.max() < 0.5


def test_json_roundtrip_sphere():
    K = cross_polytope_sphere(2, 1)
    L = complexes.from_json(json.dumps(complexes.to_json(K)))
    assert L.simplices == K.simplices
    assert np.array_equal(L.vertices, K.vertices)


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.pop("dim"), "$.dim"),
    (lambda d: d.update(space="hyperbolic"), "$.space"),
    (lambda d: d["vertices"].__setitem__(0, [2.0, 0.0, 0.0]), "$.vertices[0]"),
    (lambda d: d["simplices"]["2"].__setitem__(0, [0, 0, 1]), "$.simplices.2[0]"),
    (lambda d: d["simplices"]["1"].pop(), "$.simplices.2"),
])
def test_json_rejects_malformed(mutate, path):
    data = complexes.to_json(cross_polytope_sphere(2, 0))
    mutate(data)
    with pytest.raises(InvalidComplex) as err:
        complexes.from_json(data)
    assert err.value.path.startswith(path)
